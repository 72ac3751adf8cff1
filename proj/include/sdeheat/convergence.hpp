#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdeheat/assembly.hpp"
#include "sdeheat/parallel.hpp"
#include "sdeheat/riccati.hpp"
#include "sdeheat/spectral.hpp"

namespace sdeheat {

struct ConvergenceReport {
    std::vector<int> Ns;
    std::vector<double> values;          // v_N = Z0_N' Pi_N(0) Z0_N
    std::vector<double> u0s;             // optimal (or fixed) U0 per N
    std::vector<double> gain_dists;      // |Pi_ref(0) w - embed(Pi_N(0)) w|
    std::vector<double> semigroup_errs;  // sup_t projection tail of the rho probe
    int N_ref = 0;
    double value_ref = 0.0;
    double u0_ref = 0.0;
};

/// Riccati solution at t = 0 for one mode count, with the resolved initial state.
struct ModeSolve {
    AugmentedOperators ops;
    Matrix Pi0;
    double u0 = 0.0;
    Vector Z0;
    double value = 0.0;
};

inline ModeSolve solve_for_modes(ProblemSpec spec, int N) {
    spec.disc.N = N;
    const SpectralBasis basis(N);
    ModeSolve s;
    s.ops = assemble(spec, basis);
    try {
        s.Pi0 = solve_riccati_initial(
            s.ops, spec.cost.T, stable_riccati_steps(s.ops, spec.cost.T, spec.disc.riccati_steps));
    } catch (const BlowupError& e) {
        throw BlowupError(std::string(e.what()) + " (N = " + std::to_string(N) + ")");
    }
    s.u0 = resolve_u0(spec, s.Pi0, s.ops);
    s.Z0 = initial_state(s.ops, s.u0);
    s.value = s.Z0.dot(s.Pi0 * s.Z0);
    return s;
}

/// Injection of the N-mode augmented space into the N_ref-mode one:
/// X and Y are shared, z coordinates are zero-padded.
inline Matrix embedding(Eigen::Index d, int N, int N_ref) {
    const Eigen::Index dim = d + 1 + N + 1;
    const Eigen::Index dim_ref = d + 1 + N_ref + 1;
    Matrix P = Matrix::Zero(dim_ref, dim);
    P.topLeftCorner(dim, dim).setIdentity();
    return P;
}

/// Norm of the part of `probe` beyond mode N, i.e. sup_t |(S(t) - S_N(t) P_N) probe|,
/// attained at t = 0 because the heat semigroup contracts every tail mode.
inline double semigroup_tail_error(const SpectralBasis& basis, const H1Vector& probe, int N) {
    double s = 0.0;
    for (int n = N + 1; n <= basis.N(); ++n) s += probe.coeffs(n) * probe.coeffs(n);
    return std::sqrt(s);
}

inline ConvergenceReport sweep_N(const ProblemSpec& spec, const std::vector<int>& Ns, int N_ref,
                                 unsigned threads = 1) {
    if (Ns.empty()) throw DomainError("sweep_N needs at least one mode count");
    if (N_ref <= *std::max_element(Ns.begin(), Ns.end()))
        throw DomainError("N_ref must exceed every swept N");

    std::vector<int> all = Ns;
    all.push_back(N_ref);
    const auto solves = parallel_map<ModeSolve>(
        all.size(), threads, [&](std::size_t i) { return solve_for_modes(spec, all[i]); });
    const ModeSolve& ref = solves.back();

    const Vector w = ref.Z0.normalized();
    const Vector ref_w = ref.Pi0 * w;
    const SpectralBasis ref_basis(N_ref);
    H1Vector probe = rho_coeffs(ref_basis, spec.pde.c, spec.control.mu);
    probe.coeffs.normalize();

    ConvergenceReport rep;
    rep.N_ref = N_ref;
    rep.value_ref = ref.value;
    rep.u0_ref = ref.u0;
    for (std::size_t i = 0; i < Ns.size(); ++i) {
        const auto& s = solves[i];
        const Matrix P = embedding(spec.sde.dim(), Ns[i], N_ref);
        rep.Ns.push_back(Ns[i]);
        rep.values.push_back(s.value);
        rep.u0s.push_back(s.u0);
        rep.gain_dists.push_back((ref_w - P * (s.Pi0 * (P.transpose() * w))).norm());
        rep.semigroup_errs.push_back(semigroup_tail_error(ref_basis, probe, Ns[i]));
    }
    return rep;
}

}  // namespace sdeheat
