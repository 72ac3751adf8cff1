#pragma once

// Expected cost of a linear feedback, two independent ways:
//  - Monte Carlo over Euler-Maruyama paths of the spectral closed loop;
//  - the second-moment (Lyapunov) ODE of the closed loop,
//      dM/dt = Acl M + M Acl' + Ctot M Ctot',  Acl = Atot - Bvec K(t),
//    giving J = int tr[(Q + delta K'K) M] dt + tr[G M(T)] without sampling.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdeheat/assembly.hpp"
#include "sdeheat/closedloop.hpp"
#include "sdeheat/errors.hpp"
#include "sdeheat/parallel.hpp"
#include "sdeheat/riccati.hpp"
#include "sdeheat/rng.hpp"

namespace sdeheat {

inline constexpr double kMomentBlowup = 1e12;

struct CostEstimate {
    double mean = 0.0;
    double std_err = 0.0;
    long paths = 0;
    std::uint64_t seed = 0;
};

/// Mean and standard error (sample std / sqrt(n)) with compensated sums.
inline CostEstimate summarize(const std::vector<double>& samples, std::uint64_t seed = 0) {
    CostEstimate e;
    e.paths = static_cast<long>(samples.size());
    e.seed = seed;
    if (samples.empty()) return e;
    KahanSum s;
    for (double x : samples) s.add(x);
    e.mean = s.value() / static_cast<double>(samples.size());
    if (samples.size() < 2) return e;
    KahanSum ss;
    for (double x : samples) ss.add((x - e.mean) * (x - e.mean));
    const double var = ss.value() / static_cast<double>(samples.size() - 1);
    e.std_err = std::sqrt(var / static_cast<double>(samples.size()));
    return e;
}

struct PathSummary {
    double cost = 0.0;
    Vector X_final;
};

/// Independent spectral closed-loop paths; path i uses stream (seed, i).
template <typename NoiseFactory>
    requires std::invocable<NoiseFactory&, std::size_t>
std::vector<PathSummary> spectral_paths(const AugmentedOperators& ops, const SampledGains& gains,
                                        const Vector& Z0, long paths, unsigned threads,
                                        NoiseFactory&& make_noise) {
    return parallel_map<PathSummary>(
        static_cast<std::size_t>(paths), threads, [&](std::size_t i) {
            auto noise = make_noise(i);
            try {
                const auto r = simulate_spectral(ops, gains, Z0, noise, false);
                return PathSummary{r.total_cost(), r.Z_final.head(ops.d)};
            } catch (const BlowupError& e) {
                throw BlowupError(std::string(e.what()) + " (path " + std::to_string(i) + ")",
                                  static_cast<long>(i));
            }
        });
}

inline std::vector<PathSummary> spectral_paths(const AugmentedOperators& ops,
                                               const SampledGains& gains, const Vector& Z0,
                                               long paths, std::uint64_t seed,
                                               unsigned threads = 1) {
    return spectral_paths(ops, gains, Z0, paths, threads,
                          [seed](std::size_t i) { return GaussianIncrements(seed, i); });
}

/// Full finite-difference plant paths sharing the spectral streams.
inline std::vector<PathSummary> full_plant_paths(const ProblemSpec& spec,
                                                 const AugmentedOperators& ops,
                                                 const GainSchedule& sched,
                                                 const SpectralBasis& basis, long paths,
                                                 std::uint64_t seed, unsigned threads = 1) {
    const SampledGains gains = sample_gains(sched, spec.disc.sim_dt);
    const FullPlant plant(spec, ops, gains, basis);
    const double U0 = resolve_u0(spec, sched, ops);
    return parallel_map<PathSummary>(
        static_cast<std::size_t>(paths), threads, [&](std::size_t i) {
            GaussianIncrements noise(seed, i);
            try {
                const auto r = plant.run(U0, noise);
                return PathSummary{r.total_cost(), r.final_state.X};
            } catch (const BlowupError& e) {
                throw BlowupError(std::string(e.what()) + " (path " + std::to_string(i) + ")",
                                  static_cast<long>(i));
            }
        });
}

inline std::vector<double> path_costs(const std::vector<PathSummary>& p) {
    std::vector<double> out;
    out.reserve(p.size());
    for (const auto& s : p) out.push_back(s.cost);
    return out;
}

/// |X_T|^2 per path.
inline std::vector<double> terminal_square_norms(const std::vector<PathSummary>& p) {
    std::vector<double> out;
    out.reserve(p.size());
    for (const auto& s : p) out.push_back(s.X_final.squaredNorm());
    return out;
}

/// Monte Carlo estimate of J_delta under the schedule's feedback from the
/// spec's initial state.
inline CostEstimate estimate_cost(const ProblemSpec& spec, const AugmentedOperators& ops,
                                  const GainSchedule& sched, long paths, std::uint64_t seed,
                                  unsigned threads = 1) {
    if (paths < 2) throw DomainError("estimate_cost needs at least 2 paths");
    const Vector Z0 = initial_state(ops, resolve_u0(spec, sched, ops));
    const SampledGains gains = sample_gains(sched, spec.disc.sim_dt);
    return summarize(path_costs(spectral_paths(ops, gains, Z0, paths, seed, threads)), seed);
}

// ---------------------------------------------------------------------------
// Second-moment ODE
// ---------------------------------------------------------------------------

using GainFunction = std::function<RowVector(double)>;

struct MomentSolution {
    std::vector<double> times;
    std::vector<Matrix> M;
};

inline Matrix moment_rhs(const AugmentedOperators& ops, const RowVector& K, const Matrix& M) {
    const Matrix Acl = ops.Atot - ops.Bvec * K;
    Matrix R = Acl * M;
    R += M * Acl.transpose();
    R.noalias() += ops.Ctot * M * ops.Ctot.transpose();
    return 0.5 * (R + R.transpose());
}

/// RK4 on `times` from M(0) = Z0 Z0'; the gain is evaluated at stage times.
inline MomentSolution solve_moments(const AugmentedOperators& ops, const std::vector<double>& times,
                                    const GainFunction& gain, const Vector& Z0) {
    if (times.size() < 2) throw DomainError("moment ODE needs at least two time nodes");
    MomentSolution s;
    s.times = times;
    s.M.reserve(times.size());
    s.M.push_back(Z0 * Z0.transpose());
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        const double t = times[i];
        const double h = times[i + 1] - t;
        const RowVector K0 = gain(t);
        const RowVector Kh = gain(t + 0.5 * h);
        const RowVector K1 = gain(times[i + 1]);
        const Matrix& M = s.M.back();
        const Matrix k1 = moment_rhs(ops, K0, M);
        const Matrix k2 = moment_rhs(ops, Kh, M + 0.5 * h * k1);
        const Matrix k3 = moment_rhs(ops, Kh, M + 0.5 * h * k2);
        const Matrix k4 = moment_rhs(ops, K1, M + h * k3);
        Matrix next = M + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        next = 0.5 * (next + next.transpose());
        if (!(next.cwiseAbs().maxCoeff() <= kMomentBlowup))
            throw BlowupError("second moment exceeded 1e12 at t = " + std::to_string(times[i + 1]));
        s.M.push_back(std::move(next));
    }
    return s;
}

/// int_0^T tr[(Q + delta K'K) M] dt (trapezoid on the moment grid) + tr[G M(T)].
inline double moment_cost(const AugmentedOperators& ops, const MomentSolution& m,
                          const GainFunction& gain) {
    auto integrand = [&](std::size_t i) {
        const RowVector K = gain(m.times[i]);
        return (ops.Qmat.cwiseProduct(m.M[i])).sum() + ops.delta * K.dot(m.M[i] * K.transpose());
    };
    KahanSum run;
    double f = integrand(0);
    for (std::size_t i = 0; i + 1 < m.times.size(); ++i) {
        const double f_next = integrand(i + 1);
        run.add(0.5 * (m.times[i + 1] - m.times[i]) * (f + f_next));
        f = f_next;
    }
    return run.value() + ops.Gmat.cwiseProduct(m.M.back()).sum();
}

inline GainFunction schedule_gain(const GainSchedule& sched) {
    return [&sched](double t) { return gain_at(sched, t); };
}

inline GainFunction zero_gain(Eigen::Index dim) {
    return [dim](double) { return RowVector::Zero(dim).eval(); };
}

/// Exact (up to RK4) expected cost of the schedule's feedback from Z0.
inline double moment_ode_cost(const AugmentedOperators& ops, const GainSchedule& sched,
                              const Vector& Z0) {
    const auto gain = schedule_gain(sched);
    return moment_cost(ops, solve_moments(ops, sched.times, gain, Z0), gain);
}

/// E[X_T X_T'] block of the final second moment.
inline Matrix terminal_state_moment(const AugmentedOperators& ops, const MomentSolution& m) {
    return m.M.back().topLeftCorner(ops.d, ops.d);
}

// ---------------------------------------------------------------------------
// Three-way comparison
// ---------------------------------------------------------------------------

struct OracleTolerances {
    double riccati_vs_moment_rel = 1e-3;
    double mc_sigmas = 3.0;
    double mc_discretization_rel = 0.05;
};

struct OracleReport {
    double u0 = 0.0;
    double riccati_value = 0.0;
    double moment_value = 0.0;
    CostEstimate monte_carlo;
    bool riccati_moment_ok = false;
    bool mc_moment_ok = false;
    std::vector<std::string> failures;

    [[nodiscard]] bool passed() const { return failures.empty(); }
};

inline bool within_relative(double a, double b, double rel) {
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

/// Riccati value vs moment-ODE cost vs Monte Carlo for an assembled problem.
inline OracleReport compare_oracles(const ProblemSpec& spec, const AugmentedOperators& ops,
                                    const GainSchedule& sched, long paths, std::uint64_t seed,
                                    unsigned threads = 1, const OracleTolerances& tol = {}) {
    OracleReport rep;
    rep.u0 = resolve_u0(spec, sched, ops);
    const Vector Z0 = initial_state(ops, rep.u0);
    rep.riccati_value = value(sched, Z0);
    rep.moment_value = moment_ode_cost(ops, sched, Z0);
    rep.monte_carlo = estimate_cost(spec, ops, sched, paths, seed, threads);

    rep.riccati_moment_ok =
        within_relative(rep.riccati_value, rep.moment_value, tol.riccati_vs_moment_rel);
    const double allowance = tol.mc_sigmas * rep.monte_carlo.std_err +
                             tol.mc_discretization_rel * std::abs(rep.moment_value);
    rep.mc_moment_ok = std::abs(rep.monte_carlo.mean - rep.moment_value) <= allowance;
    if (!rep.riccati_moment_ok) rep.failures.emplace_back("riccati value vs moment ODE");
    if (!rep.mc_moment_ok) rep.failures.emplace_back("monte carlo vs moment ODE");
    return rep;
}

inline OracleReport compare_oracles(const ProblemSpec& spec, unsigned threads = 1) {
    const SpectralBasis basis(spec.disc.N);
    const AugmentedOperators ops = assemble(spec, basis);
    const GainSchedule sched = solve_riccati(
        ops, spec.cost.T, stable_riccati_steps(ops, spec.cost.T, spec.disc.riccati_steps));
    return compare_oracles(spec, ops, sched, spec.disc.mc_paths, spec.disc.seed, threads);
}

}  // namespace sdeheat
