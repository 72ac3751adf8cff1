#pragma once

// Closed-loop simulation, two ways:
//  - the spectral augmented SDE under V = -K(t) Z, by Euler-Maruyama;
//  - the original boundary-controlled plant on a finite-difference grid
//    (Crank-Nicolson diffusion, explicit reaction, ghost-point Neumann), with
//    the feedback evaluated on the spectral projection of the grid state.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdeheat/assembly.hpp"
#include "sdeheat/errors.hpp"
#include "sdeheat/grid.hpp"
#include "sdeheat/riccati.hpp"
#include "sdeheat/rng.hpp"
#include "sdeheat/spectral.hpp"

namespace sdeheat {

inline constexpr double kStateBlowup = 1e9;

/// Number of uniform steps of size dt covering [0, T]; dt must divide T.
inline int step_count(double T, double dt) {
    if (!(dt > 0.0) || dt > T) throw DomainError("time step must lie in (0, T]");
    const double steps = std::round(T / dt);
    if (std::abs(steps * dt - T) > 1e-12 * std::max(1.0, T))
        throw DomainError("time step " + std::to_string(dt) + " does not divide T");
    return static_cast<int>(steps);
}

/// Feedback gains sampled once on the simulation grid, shared by all paths.
struct SampledGains {
    std::vector<double> times;
    Matrix K;  // (steps + 1) x dim, row k = gain at times[k]

    [[nodiscard]] int steps() const { return static_cast<int>(times.size()) - 1; }
    [[nodiscard]] double dt() const { return times.back() / steps(); }
};

inline SampledGains sample_gains(const GainSchedule& sched, double dt) {
    const double T = sched.horizon();
    const int steps = step_count(T, dt);
    SampledGains g;
    g.times.resize(static_cast<std::size_t>(steps) + 1);
    g.K.resize(steps + 1, sched.K.front().size());
    for (int k = 0; k <= steps; ++k) {
        const double t = k == steps ? T : T * k / steps;
        g.times[static_cast<std::size_t>(k)] = t;
        g.K.row(k) = gain_at(sched, t);
    }
    return g;
}

struct PathResult {
    std::vector<double> times;   // filled only when recording
    std::vector<Vector> Z;       // filled only when recording
    std::vector<double> V;       // filled only when recording
    std::vector<double> cost_increments;  // per-interval trapezoid terms, when recording
    Vector Z_final;
    double running_cost = 0.0;
    double terminal_cost = 0.0;

    [[nodiscard]] double total_cost() const { return running_cost + terminal_cost; }
};

/// Euler-Maruyama on dZ = (Atot Z + Bvec V) dt + Ctot Z dW with V = -K(t) Z.
template <NoiseSource Noise>
PathResult simulate_spectral(const AugmentedOperators& ops, const SampledGains& gains,
                             const Vector& Z0, Noise& noise, bool record = false) {
    if (Z0.size() != ops.dim) throw DomainError("initial state has wrong dimension");
    if (gains.K.cols() != ops.dim) throw DomainError("gain schedule has wrong dimension");
    const int steps = gains.steps();
    const double dt = gains.dt();

    PathResult out;
    if (record) {
        out.times = gains.times;
        out.Z.reserve(static_cast<std::size_t>(steps) + 1);
        out.V.reserve(static_cast<std::size_t>(steps) + 1);
        out.cost_increments.reserve(static_cast<std::size_t>(steps));
    }

    Vector Z = Z0;
    Vector drift(ops.dim);
    Vector diffusion(ops.dim);
    auto integrand = [&](const Vector& z, double v) {
        return z.dot(ops.Qmat * z) + ops.delta * v * v;
    };

    double v = -gains.K.row(0).dot(Z);
    double f = integrand(Z, v);
    for (int k = 0; k < steps; ++k) {
        if (record) {
            out.Z.push_back(Z);
            out.V.push_back(v);
        }
        const double dW = noise.increment(dt);
        drift.noalias() = ops.Atot * Z;
        drift += ops.Bvec * v;
        diffusion.noalias() = ops.Ctot * Z;
        Z += drift * dt + diffusion * dW;
        if (!(Z.cwiseAbs().maxCoeff() <= kStateBlowup))
            throw BlowupError("spectral state exceeded 1e9 at t = " +
                              std::to_string(gains.times[static_cast<std::size_t>(k) + 1]));
        v = -gains.K.row(k + 1).dot(Z);
        const double f_next = integrand(Z, v);
        const double inc = 0.5 * dt * (f + f_next);
        out.running_cost += inc;
        if (record) out.cost_increments.push_back(inc);
        f = f_next;
    }
    if (record) {
        out.Z.push_back(Z);
        out.V.push_back(v);
    }
    out.terminal_cost = Z.dot(ops.Gmat * Z);
    out.Z_final = std::move(Z);
    return out;
}

template <NoiseSource Noise>
PathResult simulate_spectral(const AugmentedOperators& ops, const GainSchedule& sched,
                             const Vector& Z0, double dt, Noise& noise, bool record = true) {
    return simulate_spectral(ops, sample_gains(sched, dt), Z0, noise, record);
}

/// u(t, .) = sum_n z_n(t) phi_n + rho U(t) at every recorded time.
inline std::vector<GridFunction> reconstruct_u(const SpectralBasis& basis, const PathResult& path,
                                               const AugmentedOperators& ops, double c, double mu,
                                               const std::vector<double>& xs) {
    std::vector<double> rho(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) rho[i] = rho_eval(c, mu, xs[i]);
    std::vector<GridFunction> out;
    out.reserve(path.Z.size());
    for (const auto& Z : path.Z) {
        auto g = reconstruct(basis, H1Vector{Z.segment(ops.z_offset(), ops.z_size())}, xs);
        const double U = Z(ops.y_index());
        for (std::size_t i = 0; i < xs.size(); ++i) g.values[i] += rho[i] * U;
        out.push_back(std::move(g));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Full plant
// ---------------------------------------------------------------------------

/// Thomas algorithm for a constant tridiagonal matrix, factored once.
class TridiagonalSolver {
public:
    TridiagonalSolver(std::vector<double> lower, std::vector<double> diag,
                      std::vector<double> upper)
        : lower_(std::move(lower)), cprime_(diag.size()), denom_(diag.size()) {
        const std::size_t n = diag.size();
        denom_[0] = diag[0];
        cprime_[0] = upper[0] / denom_[0];
        for (std::size_t i = 1; i < n; ++i) {
            denom_[i] = diag[i] - lower_[i] * cprime_[i - 1];
            cprime_[i] = i + 1 < n ? upper[i] / denom_[i] : 0.0;
        }
    }

    /// Solves in place.
    void solve(std::vector<double>& rhs) const {
        const std::size_t n = rhs.size();
        rhs[0] /= denom_[0];
        for (std::size_t i = 1; i < n; ++i) rhs[i] = (rhs[i] - lower_[i] * rhs[i - 1]) / denom_[i];
        for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= cprime_[i] * rhs[i + 1];
    }

private:
    std::vector<double> lower_;
    std::vector<double> cprime_;
    std::vector<double> denom_;
};

struct FullPlantState {
    GridFunction u;
    Vector X;
    double U = 0.0;
    double t = 0.0;
};

struct FullPlantResult {
    FullPlantState final_state;
    std::vector<double> times;          // when recording
    std::vector<Vector> X;              // when recording
    std::vector<double> U;              // when recording
    std::vector<double> V;              // when recording
    std::vector<Vector> Zhat;           // spectral state fed to the feedback, when recording
    std::vector<GridFunction> u_snapshots;  // every `snapshot_every` steps, when > 0
    std::vector<double> snapshot_times;
    double running_cost = 0.0;
    double terminal_cost = 0.0;

    [[nodiscard]] double total_cost() const { return running_cost + terminal_cost; }
};

struct FullPlantOptions {
    bool record = false;
    int snapshot_every = 0;
    std::optional<double> u0_override;  // U(0); default resolves from the spec
};

/// Precomputed pieces of the finite-difference plant shared by all paths.
class FullPlant {
public:
    FullPlant(const ProblemSpec& spec, const AugmentedOperators& ops, const SampledGains& gains,
              const SpectralBasis& basis)
        : spec_(spec),
          ops_(ops),
          gains_(gains),
          xs_(uniform_grid(static_cast<std::size_t>(spec.disc.fd_grid_points))),
          projector_(basis, xs_),
          solver_(make_solver(xs_.size(), gains.dt())) {
        if (basis.N() != ops.N) throw DomainError("basis and operators disagree on N");
        rho_.resize(xs_.size());
        for (std::size_t i = 0; i < xs_.size(); ++i)
            rho_[i] = rho_eval(spec.pde.c, spec.control.mu, xs_[i]);
        u_init_.resize(xs_.size());
        if (const auto* c = std::get_if<ConstantProfile>(&spec.pde.u0)) {
            std::fill(u_init_.begin(), u_init_.end(), c->value);
        } else {
            const auto& g = std::get<GridFunction>(spec.pde.u0);
            for (std::size_t i = 0; i < xs_.size(); ++i) u_init_[i] = interpolate(g, xs_[i]);
        }
    }

    [[nodiscard]] const std::vector<double>& grid() const noexcept { return xs_; }

    template <NoiseSource Noise>
    FullPlantResult run(double U0, Noise& noise, const FullPlantOptions& opt = {}) const {
        const auto& sde = spec_.sde;
        const auto d = sde.dim();
        const double c = spec_.pde.c;
        const double mu = spec_.control.mu;
        const int steps = gains_.steps();
        const double dt = gains_.dt();
        const std::size_t m = xs_.size();
        const double h = xs_[1] - xs_[0];
        const double r = dt / (h * h);

        FullPlantResult out;
        std::vector<double> u = u_init_;
        std::vector<double> w(m);
        std::vector<double> rhs(m);
        Vector X = sde.X0;
        double U = U0;
        Vector Zhat(ops_.dim);

        auto feedback = [&](int k) {
            for (std::size_t i = 0; i < m; ++i) w[i] = u[i] - rho_[i] * U;
            Zhat.head(d) = X;
            Zhat(ops_.y_index()) = U;
            Zhat.segment(ops_.z_offset(), ops_.z_size()) = projector_.project(w).coeffs;
            return -gains_.K.row(k).dot(Zhat);
        };
        auto integrand = [&](double v) {
            return X.dot(spec_.cost.Q * X) + spec_.cost.r * U * U + spec_.cost.delta * v * v;
        };
        auto snapshot = [&](int k) {
            if (opt.snapshot_every > 0 && k % opt.snapshot_every == 0) {
                out.u_snapshots.push_back(GridFunction{xs_, u});
                out.snapshot_times.push_back(gains_.times[static_cast<std::size_t>(k)]);
            }
        };

        double v = feedback(0);
        double f = integrand(v);
        for (int k = 0; k < steps; ++k) {
            if (opt.record) {
                out.times.push_back(gains_.times[static_cast<std::size_t>(k)]);
                out.X.push_back(X);
                out.U.push_back(U);
                out.V.push_back(v);
                out.Zhat.push_back(Zhat);
            }
            snapshot(k);

            const double trace = u[0];
            const double dW = noise.increment(dt);
            const Vector drift = sde.A * X + sde.B.col(0) * trace;
            const Vector diffusion = sde.C * X + sde.D.col(0) * trace;
            X += drift * dt + diffusion * dW;

            const double U_next = U + dt * (mu * U + v);

            // Crank-Nicolson: (I - dt/2 L) u+ = (I + dt/2 L) u + dt c u + dt/2 (b + b+)
            rhs[0] = u[0] + r * (u[1] - u[0]) + dt * c * u[0];
            for (std::size_t i = 1; i + 1 < m; ++i)
                rhs[i] = u[i] + 0.5 * r * (u[i - 1] - 2.0 * u[i] + u[i + 1]) + dt * c * u[i];
            rhs[m - 1] = u[m - 1] + r * (u[m - 2] - u[m - 1]) + dt * c * u[m - 1] +
                         (dt / h) * (U + U_next);
            solver_.solve(rhs);
            u.swap(rhs);
            U = U_next;

            if (!(X.cwiseAbs().maxCoeff() <= kStateBlowup) || !(std::abs(U) <= kStateBlowup) ||
                !std::isfinite(u[0]))
                throw BlowupError("full-plant state exceeded 1e9 at t = " +
                                  std::to_string(gains_.times[static_cast<std::size_t>(k) + 1]));

            v = feedback(k + 1);
            const double f_next = integrand(v);
            out.running_cost += 0.5 * dt * (f + f_next);
            f = f_next;
        }
        if (opt.record) {
            out.times.push_back(gains_.times.back());
            out.X.push_back(X);
            out.U.push_back(U);
            out.V.push_back(v);
            out.Zhat.push_back(Zhat);
        }
        snapshot(steps);
        out.terminal_cost = X.dot(spec_.cost.G * X);
        out.final_state = FullPlantState{GridFunction{xs_, std::move(u)}, std::move(X), U,
                                          gains_.times.back()};
        return out;
    }

private:
    static TridiagonalSolver make_solver(std::size_t m, double dt) {
        const double h = 1.0 / static_cast<double>(m - 1);
        const double r = dt / (h * h);
        std::vector<double> lower(m, -0.5 * r), diag(m, 1.0 + r), upper(m, -0.5 * r);
        // ghost-point Neumann rows: u_{-1} = u_1, u_m = u_{m-2} + 2 h U
        upper[0] = -r;
        lower[m - 1] = -r;
        lower[0] = 0.0;
        upper[m - 1] = 0.0;
        return TridiagonalSolver(std::move(lower), std::move(diag), std::move(upper));
    }

    const ProblemSpec& spec_;
    const AugmentedOperators& ops_;
    const SampledGains& gains_;
    std::vector<double> xs_;
    GridProjector projector_;
    TridiagonalSolver solver_;
    std::vector<double> rho_;
    std::vector<double> u_init_;
};

/// One closed-loop path of the original plant; U(0) follows the spec's mode.
template <NoiseSource Noise>
FullPlantResult simulate_full(const ProblemSpec& spec, const AugmentedOperators& ops,
                              const GainSchedule& sched, const SpectralBasis& basis,
                              Noise& noise, const FullPlantOptions& opt = {}) {
    const SampledGains gains = sample_gains(sched, spec.disc.sim_dt);
    const FullPlant plant(spec, ops, gains, basis);
    const double U0 = opt.u0_override ? *opt.u0_override : resolve_u0(spec, sched, ops);
    return plant.run(U0, noise, opt);
}

}  // namespace sdeheat
