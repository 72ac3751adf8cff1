#pragma once

// Self-checks run by `sdeheat validate`: each returns a measured quantity that
// is compared with a fixed threshold.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdeheat/assembly.hpp"
#include "sdeheat/closedloop.hpp"
#include "sdeheat/montecarlo.hpp"
#include "sdeheat/parallel.hpp"
#include "sdeheat/riccati.hpp"
#include "sdeheat/rng.hpp"
#include "sdeheat/spectral.hpp"

namespace sdeheat {

struct CheckResult {
    std::string name;
    double measured = 0.0;
    double lower = -INFINITY;
    double upper = INFINITY;

    [[nodiscard]] bool passed() const { return measured >= lower && measured <= upper; }
};

/// max |-rho'' + (mu - c) rho| by second differences on a uniform grid, and
/// the boundary-derivative errors |rho'(0)|, |rho'(1) - 1|.
inline double rho_bvp_residual(double c, double mu, int points = 10000) {
    const double h = 1.0 / (points - 1);
    const double k2 = mu - c;
    double worst = 0.0;
    for (int i = 1; i + 1 < points; ++i) {
        const double x = i * h;
        const double d2 =
            (rho_eval(c, mu, x - h) - 2.0 * rho_eval(c, mu, x) + rho_eval(c, mu, x + h)) / (h * h);
        worst = std::max(worst, std::abs(-d2 + k2 * rho_eval(c, mu, x)));
    }
    worst = std::max(worst, std::abs(rho_deriv(c, mu, 0.0)));
    worst = std::max(worst, std::abs(rho_deriv(c, mu, 1.0) - 1.0));
    return worst;
}

/// Entrywise max |G - I| of the quadrature Gram matrix of phi_0..phi_N.
inline double basis_gram_error(int N, std::size_t points = 200001) {
    const SpectralBasis basis(N);
    const GridProjector proj(basis, uniform_grid(points));
    double worst = 0.0;
    std::vector<double> samples(points);
    for (int m = 0; m <= N; ++m) {
        for (std::size_t i = 0; i < points; ++i) samples[i] = basis.phi(m, proj.grid()[i]);
        const Vector col = proj.project(samples).coeffs;
        for (int n = 0; n <= N; ++n) worst = std::max(worst, std::abs(col(n) - (m == n ? 1.0 : 0.0)));
    }
    return worst;
}

/// log2 of |Pi_h(0) - Pi_{h/2}(0)| / |Pi_{h/2}(0) - Pi_{h/4}(0)| (max norm).
inline double riccati_observed_order(const AugmentedOperators& ops, double T, int coarse_steps) {
    const Matrix P1 = solve_riccati_initial(ops, T, coarse_steps);
    const Matrix P2 = solve_riccati_initial(ops, T, 2 * coarse_steps);
    const Matrix P4 = solve_riccati_initial(ops, T, 4 * coarse_steps);
    return std::log2((P1 - P2).cwiseAbs().maxCoeff() / (P2 - P4).cwiseAbs().maxCoeff());
}

/// Uncontrolled scalar system dX = a X dt + c X dW as a one-state augmented
/// operator set.
inline AugmentedOperators scalar_test_system(double a, double c) {
    AugmentedOperators ops;
    ops.d = 1;
    ops.N = -1;
    ops.dim = 1;
    ops.Atot = Matrix::Constant(1, 1, a);
    ops.Ctot = Matrix::Constant(1, 1, c);
    ops.Bvec = Vector::Zero(1);
    ops.Qmat = Matrix::Zero(1, 1);
    ops.Gmat = Matrix::Zero(1, 1);
    ops.Lrho = Vector::Zero(1);
    ops.M0 = Vector::Zero(1);
    ops.delta = 1.0;
    return ops;
}

inline SampledGains zero_gains(double T, int steps, Eigen::Index dim) {
    SampledGains g;
    g.times.resize(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k <= steps; ++k) g.times[static_cast<std::size_t>(k)] = T * k / steps;
    g.times.back() = T;
    g.K = Matrix::Zero(steps + 1, dim);
    return g;
}

struct StrongOrderResult {
    std::vector<double> dts;
    std::vector<double> errors;  // E|X_T^h - X_T|
    double slope = 0.0;          // least-squares slope of log2(error) vs log2(dt)
};

/// Strong error of Euler-Maruyama on dX = a X dt + c X dW, X0 = 1, T = 1,
/// against X_T = exp((a - c^2/2) + c W_T), over dt = 2^-coarsest..2^-finest.
inline StrongOrderResult em_strong_order(double a, double c, long paths, std::uint64_t seed,
                                         int coarsest = 6, int finest = 10,
                                         unsigned threads = 1) {
    const AugmentedOperators ops = scalar_test_system(a, c);
    const int fine_steps = 1 << finest;
    const double fine_dt = 1.0 / fine_steps;
    const int levels = finest - coarsest + 1;

    const auto per_path = parallel_map<std::vector<double>>(
        static_cast<std::size_t>(paths), threads, [&](std::size_t p) {
            GaussianIncrements rng(seed, p);
            std::vector<double> dW(static_cast<std::size_t>(fine_steps));
            double W = 0.0;
            for (auto& w : dW) {
                w = rng.increment(fine_dt);
                W += w;
            }
            const double exact = std::exp(a - 0.5 * c * c + c * W);
            std::vector<double> err(static_cast<std::size_t>(levels));
            for (int l = 0; l < levels; ++l) {
                const int steps = 1 << (coarsest + l);
                ReplayedIncrements noise(dW, static_cast<std::size_t>(fine_steps / steps));
                const auto r = simulate_spectral(ops, zero_gains(1.0, steps, 1),
                                                 Vector::Ones(1), noise, false);
                err[static_cast<std::size_t>(l)] = std::abs(r.Z_final(0) - exact);
            }
            return err;
        });

    StrongOrderResult out;
    for (int l = 0; l < levels; ++l) {
        KahanSum s;
        for (const auto& e : per_path) s.add(e[static_cast<std::size_t>(l)]);
        out.dts.push_back(1.0 / (1 << (coarsest + l)));
        out.errors.push_back(s.value() / static_cast<double>(paths));
    }
    double mx = 0, my = 0;
    for (int l = 0; l < levels; ++l) {
        mx += std::log2(out.dts[static_cast<std::size_t>(l)]);
        my += std::log2(out.errors[static_cast<std::size_t>(l)]);
    }
    mx /= levels;
    my /= levels;
    double sxy = 0, sxx = 0;
    for (int l = 0; l < levels; ++l) {
        const double x = std::log2(out.dts[static_cast<std::size_t>(l)]) - mx;
        sxy += x * (std::log2(out.errors[static_cast<std::size_t>(l)]) - my);
        sxx += x * x;
    }
    out.slope = sxy / sxx;
    return out;
}

/// Largest asymmetry and most negative eigenvalue over all stored Pi nodes.
struct ScheduleHealth {
    double max_asymmetry = 0.0;
    double min_eigenvalue = INFINITY;
    bool terminal_exact = false;
};

inline ScheduleHealth schedule_health(const GainSchedule& s, const AugmentedOperators& ops) {
    ScheduleHealth h;
    for (const auto& P : s.Pi) {
        h.max_asymmetry = std::max(h.max_asymmetry, (P - P.transpose()).cwiseAbs().maxCoeff());
        Eigen::SelfAdjointEigenSolver<Matrix> es(P, Eigen::EigenvaluesOnly);
        h.min_eigenvalue = std::min(h.min_eigenvalue, es.eigenvalues().minCoeff());
    }
    h.terminal_exact = (s.Pi.back().array() == ops.Gmat.array()).all();
    return h;
}

/// min over h in {0.1, 0.01} and both signs of F(U0* + h) - F(U0*), with
/// F(U0) = value(initial_state(U0)). Nonnegative when U0* is optimal.
inline double u0_variational_margin(const GainSchedule& s, const AugmentedOperators& ops) {
    const double u0 = optimal_u0(s, ops);
    const double F0 = value(s, initial_state(ops, u0));
    double margin = INFINITY;
    for (double h : {0.1, 0.01, -0.1, -0.01})
        margin = std::min(margin, value(s, initial_state(ops, u0 + h)) - F0);
    return margin;
}

/// The oracle suite behind `validate`.
inline std::vector<CheckResult> run_validation(const ProblemSpec& spec, unsigned threads = 1) {
    std::vector<CheckResult> out;
    const double T = spec.cost.T;
    out.push_back({"rho_bvp_residual", rho_bvp_residual(spec.pde.c, spec.control.mu), -INFINITY, 1e-6});
    out.push_back({"basis_gram_error", basis_gram_error(std::max(spec.disc.N, 8)), -INFINITY, 1e-6});

    const SpectralBasis basis(spec.disc.N);
    const AugmentedOperators ops = assemble(spec, basis);
    const int steps = stable_riccati_steps(ops, T, spec.disc.riccati_steps);
    const GainSchedule sched = solve_riccati(ops, T, steps);
    const ScheduleHealth health = schedule_health(sched, ops);
    out.push_back({"riccati_max_asymmetry", health.max_asymmetry, -INFINITY, 1e-10});
    out.push_back({"riccati_min_eigenvalue", health.min_eigenvalue, -1e-8, INFINITY});
    out.push_back({"riccati_terminal_exact", health.terminal_exact ? 1.0 : 0.0, 1.0, 1.0});
    out.push_back({"riccati_rk4_order",
                   riccati_observed_order(ops, T, stable_riccati_steps(ops, T, 100)), 3.5, 4.5});
    out.push_back({"optimal_u0_margin", u0_variational_margin(sched, ops), 0.0, INFINITY});

    const auto em = em_strong_order(2.0, 1.0, 1000, spec.disc.seed, 6, 10, threads);
    out.push_back({"em_strong_order", em.slope, 0.4, 0.6});

    const OracleReport rep =
        compare_oracles(spec, ops, sched, spec.disc.mc_paths, spec.disc.seed, threads);
    out.push_back({"riccati_vs_moment_rel",
                   std::abs(rep.riccati_value - rep.moment_value) /
                       std::max(std::abs(rep.moment_value), 1e-300),
                   -INFINITY, 1e-3});
    const double allowance = 3.0 * rep.monte_carlo.std_err + 0.05 * std::abs(rep.moment_value);
    out.push_back({"mc_vs_moment_excess", std::abs(rep.monte_carlo.mean - rep.moment_value) - allowance,
                   -INFINITY, 0.0});
    return out;
}

}  // namespace sdeheat
