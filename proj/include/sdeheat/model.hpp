#pragma once

// Problem definition: a linear SDE driven by the left trace of a 1-D heat
// equation whose right Neumann boundary carries the control.
//
//   u_t = u_xx + c u,              u_x(t,0) = 0, u_x(t,1) = U(t)
//   dX  = (A X + B u(t,0)) dt + (C X + D u(t,0)) dW
//   J   = E[ int_0^T (X'QX + r U^2) dt + X_T' G X_T ]  (+ delta E int V^2)

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sdeheat/errors.hpp"
#include "sdeheat/grid.hpp"

namespace sdeheat {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

struct SdeParams {
    Matrix A;  // d x d
    Matrix B;  // d x 1
    Matrix C;  // d x d
    Matrix D;  // d x 1
    Vector X0;

    [[nodiscard]] Eigen::Index dim() const { return A.rows(); }
};

struct ConstantProfile {
    double value = 0.0;
    bool operator==(const ConstantProfile&) const = default;
};

using InitialProfile = std::variant<ConstantProfile, GridFunction>;

struct PdeParams {
    double c = 0.0;
    InitialProfile u0 = ConstantProfile{};
};

struct CostParams {
    Matrix Q;
    double r = 1.0;
    Matrix G;
    double delta = 1.0;
    double T = 1.0;
};

struct OptimalU0 {
    bool operator==(const OptimalU0&) const = default;
};
struct FixedU0 {
    double value = 0.0;
    bool operator==(const FixedU0&) const = default;
};
using U0Mode = std::variant<OptimalU0, FixedU0>;

struct ControlParams {
    double mu = 1.0;
    U0Mode u0_mode = OptimalU0{};
};

struct DiscretizationParams {
    int N = 3;
    int riccati_steps = 2000;
    double sim_dt = 1e-3;
    int mc_paths = 10000;
    std::uint64_t seed = 0;
    int fd_grid_points = 256;
};

struct ProblemSpec {
    SdeParams sde;
    PdeParams pde;
    CostParams cost;
    ControlParams control;
    DiscretizationParams disc;
};

inline bool operator==(const ProblemSpec& a, const ProblemSpec& b);

/// E[X_t^2] for the scalar SDE dX = a X dt + c_noise X dW, X(0) = x0.
inline double uncontrolled_second_moment(double a, double c_noise, double x0, double t) {
    return x0 * x0 * std::exp((2.0 * a + c_noise * c_noise) * t);
}

namespace detail {

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void check_psd(const Matrix& m, const char* name) {
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12) throw ValidationError(std::string(name) + " must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-12)
        throw ValidationError(std::string(name) + " must be positive semidefinite");
}

}  // namespace detail

/// Throws ValidationError naming the first violated invariant.
inline void validate(const ProblemSpec& s) {
    const auto d = s.sde.A.rows();
    if (d < 1 || s.sde.A.cols() != d) throw ValidationError("A must be square with d >= 1");
    if (s.sde.B.rows() != d || s.sde.B.cols() != 1) throw ValidationError("B must be d x 1");
    if (s.sde.C.rows() != d || s.sde.C.cols() != d) throw ValidationError("C must be d x d");
    if (s.sde.D.rows() != d || s.sde.D.cols() != 1) throw ValidationError("D must be d x 1");
    if (s.sde.X0.size() != d) throw ValidationError("X0 must have length d");
    if (!detail::all_finite(s.sde.A) || !detail::all_finite(s.sde.B) ||
        !detail::all_finite(s.sde.C) || !detail::all_finite(s.sde.D) || !s.sde.X0.allFinite())
        throw ValidationError("SDE coefficients must be finite");

    if (!std::isfinite(s.pde.c)) throw ValidationError("c must be finite");
    if (const auto* c = std::get_if<ConstantProfile>(&s.pde.u0)) {
        if (!std::isfinite(c->value)) throw ValidationError("u0 must be finite");
    } else {
        const auto why = grid_violation(std::get<GridFunction>(s.pde.u0), 3);
        if (!why.empty()) throw ValidationError("u0 grid: " + why);
    }

    if (s.cost.Q.rows() != d || s.cost.Q.cols() != d) throw ValidationError("Q must be d x d");
    if (s.cost.G.rows() != d || s.cost.G.cols() != d) throw ValidationError("G must be d x d");
    if (!detail::all_finite(s.cost.Q) || !detail::all_finite(s.cost.G))
        throw ValidationError("Q and G must be finite");
    detail::check_psd(s.cost.Q, "Q");
    detail::check_psd(s.cost.G, "G");
    if (!(s.cost.r > 0.0) || !std::isfinite(s.cost.r)) throw ValidationError("r must be positive");
    if (!(s.cost.delta > 0.0) || !std::isfinite(s.cost.delta))
        throw ValidationError("delta must be positive");
    if (!(s.cost.T > 0.0) || !std::isfinite(s.cost.T)) throw ValidationError("T must be positive");

    if (!std::isfinite(s.control.mu)) throw ValidationError("mu must be finite");
    if (!(s.control.mu > s.pde.c)) throw ValidationError("mu must exceed c");
    if (const auto* f = std::get_if<FixedU0>(&s.control.u0_mode); f && !std::isfinite(f->value))
        throw ValidationError("fixed U0 must be finite");

    if (s.disc.N < 1) throw ValidationError("N must be positive");
    if (s.disc.riccati_steps < 2) throw ValidationError("riccati_steps must be at least 2");
    if (!(s.disc.sim_dt > 0.0)) throw ValidationError("sim_dt must be positive");
    if (s.disc.sim_dt > s.cost.T) throw ValidationError("sim_dt must not exceed T");
    if (s.disc.mc_paths < 1) throw ValidationError("mc_paths must be positive");
    if (s.disc.fd_grid_points < 8) throw ValidationError("fd_grid_points must be at least 8");
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace detail {

using nlohmann::json;

inline const json& require(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object()) throw ParseError("`" + where + "` must be an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError("missing field `" + where + "." + key + "`");
    return *it;
}

inline double as_number(const json& j, const std::string& where) {
    if (!j.is_number()) throw ParseError("field `" + where + "` must be a number");
    return j.get<double>();
}

inline int as_int(const json& j, const std::string& where) {
    if (!j.is_number_integer()) throw ParseError("field `" + where + "` must be an integer");
    return j.get<int>();
}

// Accepts a scalar (1 x 1), a flat array (column vector) or a row-major
// nested array.
inline Matrix as_matrix(const json& j, const std::string& where) {
    if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
    if (!j.is_array() || j.empty()) throw ParseError("field `" + where + "` must be a matrix");
    if (!j.front().is_array()) {
        Matrix m(static_cast<Eigen::Index>(j.size()), 1);
        for (std::size_t i = 0; i < j.size(); ++i)
            m(static_cast<Eigen::Index>(i), 0) = as_number(j[i], where);
        return m;
    }
    const auto rows = j.size();
    const auto cols = j.front().size();
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            throw ParseError("field `" + where + "` has ragged rows");
        for (std::size_t k = 0; k < cols; ++k)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                as_number(j[i][k], where);
    }
    return m;
}

inline Vector as_vector(const json& j, const std::string& where) {
    const Matrix m = as_matrix(j, where);
    if (m.cols() == 1) return m.col(0);
    if (m.rows() == 1) return m.row(0).transpose();
    throw ParseError("field `" + where + "` must be a vector");
}

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json vector_to_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

}  // namespace detail

/// Builds a validated spec from the documented JSON schema.
inline ProblemSpec spec_from_json(const nlohmann::json& root) {
    using detail::as_int;
    using detail::as_matrix;
    using detail::as_number;
    using detail::require;

    if (!root.is_object()) throw ParseError("configuration must be a JSON object");
    ProblemSpec s;

    const auto& sde = require(root, "sde", "config");
    s.sde.A = as_matrix(require(sde, "A", "sde"), "sde.A");
    s.sde.B = as_matrix(require(sde, "B", "sde"), "sde.B");
    s.sde.C = as_matrix(require(sde, "C", "sde"), "sde.C");
    s.sde.D = as_matrix(require(sde, "D", "sde"), "sde.D");
    s.sde.X0 = detail::as_vector(require(sde, "X0", "sde"), "sde.X0");

    const auto& pde = require(root, "pde", "config");
    s.pde.c = as_number(require(pde, "c", "pde"), "pde.c");
    const auto& u0 = require(pde, "u0", "pde");
    if (u0.is_number()) {
        s.pde.u0 = ConstantProfile{u0.get<double>()};
    } else if (u0.is_object() && u0.contains("constant")) {
        s.pde.u0 = ConstantProfile{as_number(u0["constant"], "pde.u0.constant")};
    } else if (u0.is_object()) {
        GridFunction g;
        const Vector xs = detail::as_vector(require(u0, "xs", "pde.u0"), "pde.u0.xs");
        const Vector vs = detail::as_vector(require(u0, "values", "pde.u0"), "pde.u0.values");
        g.xs.assign(xs.data(), xs.data() + xs.size());
        g.values.assign(vs.data(), vs.data() + vs.size());
        s.pde.u0 = std::move(g);
    } else {
        throw ParseError("field `pde.u0` must be a number, {\"constant\": v} or {\"xs\", \"values\"}");
    }

    const auto& cost = require(root, "cost", "config");
    s.cost.Q = as_matrix(require(cost, "Q", "cost"), "cost.Q");
    s.cost.r = as_number(require(cost, "r", "cost"), "cost.r");
    s.cost.G = as_matrix(require(cost, "G", "cost"), "cost.G");
    s.cost.delta = as_number(require(cost, "delta", "cost"), "cost.delta");
    s.cost.T = cost.contains("T") ? as_number(cost["T"], "cost.T") : 1.0;

    s.control.mu = s.pde.c + 1.0;
    if (root.contains("control")) {
        const auto& ctl = root["control"];
        if (!ctl.is_object()) throw ParseError("`control` must be an object");
        if (ctl.contains("mu")) s.control.mu = as_number(ctl["mu"], "control.mu");
        if (ctl.contains("u0_mode")) {
            const auto& m = ctl["u0_mode"];
            if (m.is_string() && m.get<std::string>() == "optimal") {
                s.control.u0_mode = OptimalU0{};
            } else if (m.is_object() && m.contains("fixed")) {
                s.control.u0_mode = FixedU0{as_number(m["fixed"], "control.u0_mode.fixed")};
            } else {
                throw ParseError(
                    "field `control.u0_mode` must be \"optimal\" or {\"fixed\": value}");
            }
        }
    }

    const auto& disc = require(root, "discretization", "config");
    s.disc.N = as_int(require(disc, "N", "discretization"), "discretization.N");
    if (disc.contains("riccati_steps"))
        s.disc.riccati_steps = as_int(disc["riccati_steps"], "discretization.riccati_steps");
    if (disc.contains("sim_dt")) s.disc.sim_dt = as_number(disc["sim_dt"], "discretization.sim_dt");
    if (disc.contains("mc_paths"))
        s.disc.mc_paths = as_int(disc["mc_paths"], "discretization.mc_paths");
    if (disc.contains("seed")) {
        if (!disc["seed"].is_number_unsigned())
            throw ParseError("field `discretization.seed` must be a non-negative integer");
        s.disc.seed = disc["seed"].get<std::uint64_t>();
    }
    if (disc.contains("fd_grid_points"))
        s.disc.fd_grid_points = as_int(disc["fd_grid_points"], "discretization.fd_grid_points");

    validate(s);
    return s;
}

inline nlohmann::json spec_to_json(const ProblemSpec& s) {
    using nlohmann::json;
    json j;
    j["sde"] = {{"A", detail::matrix_to_json(s.sde.A)},
                {"B", detail::matrix_to_json(s.sde.B)},
                {"C", detail::matrix_to_json(s.sde.C)},
                {"D", detail::matrix_to_json(s.sde.D)},
                {"X0", detail::vector_to_json(s.sde.X0)}};
    json u0;
    if (const auto* c = std::get_if<ConstantProfile>(&s.pde.u0)) {
        u0 = {{"constant", c->value}};
    } else {
        const auto& g = std::get<GridFunction>(s.pde.u0);
        u0 = {{"xs", g.xs}, {"values", g.values}};
    }
    j["pde"] = {{"c", s.pde.c}, {"u0", u0}};
    j["cost"] = {{"Q", detail::matrix_to_json(s.cost.Q)},
                 {"r", s.cost.r},
                 {"G", detail::matrix_to_json(s.cost.G)},
                 {"delta", s.cost.delta},
                 {"T", s.cost.T}};
    json mode = "optimal";
    if (const auto* f = std::get_if<FixedU0>(&s.control.u0_mode)) mode = {{"fixed", f->value}};
    j["control"] = {{"mu", s.control.mu}, {"u0_mode", mode}};
    j["discretization"] = {{"N", s.disc.N},
                           {"riccati_steps", s.disc.riccati_steps},
                           {"sim_dt", s.disc.sim_dt},
                           {"mc_paths", s.disc.mc_paths},
                           {"seed", s.disc.seed},
                           {"fd_grid_points", s.disc.fd_grid_points}};
    return j;
}

inline ProblemSpec parse_spec(const std::string& text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
    return spec_from_json(root);
}

inline ProblemSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_spec(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline bool operator==(const ProblemSpec& a, const ProblemSpec& b) {
    auto same = [](const Matrix& x, const Matrix& y) {
        return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
    };
    return same(a.sde.A, b.sde.A) && same(a.sde.B, b.sde.B) && same(a.sde.C, b.sde.C) &&
           same(a.sde.D, b.sde.D) && same(a.sde.X0, b.sde.X0) && a.pde.c == b.pde.c &&
           a.pde.u0 == b.pde.u0 && same(a.cost.Q, b.cost.Q) && a.cost.r == b.cost.r &&
           same(a.cost.G, b.cost.G) && a.cost.delta == b.cost.delta && a.cost.T == b.cost.T &&
           a.control.mu == b.control.mu && a.control.u0_mode == b.control.u0_mode &&
           a.disc.N == b.disc.N && a.disc.riccati_steps == b.disc.riccati_steps &&
           a.disc.sim_dt == b.disc.sim_dt && a.disc.mc_paths == b.disc.mc_paths &&
           a.disc.seed == b.disc.seed && a.disc.fd_grid_points == b.disc.fd_grid_points;
}

}  // namespace sdeheat
