#pragma once

// Backward stochastic Riccati equation of the augmented system
//
//   dPi/dt + Pi A + A'Pi + C'Pi C + Q - delta^{-1} Pi B B' Pi = 0,  Pi(T) = G,
//
// optimal feedback V = -K(t) Z with K = delta^{-1} B' Pi(t), and optimal cost
// Z0' Pi(0) Z0 of the delta-regularized problem.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "sdeheat/assembly.hpp"
#include "sdeheat/errors.hpp"

namespace sdeheat {

inline constexpr double kRiccatiBlowup = 1e12;

struct GainSchedule {
    std::vector<double> times;
    std::vector<Matrix> Pi;
    std::vector<RowVector> K;

    [[nodiscard]] double horizon() const { return times.back(); }
    [[nodiscard]] std::size_t nodes() const noexcept { return times.size(); }
};

/// dPi/dt; the result is symmetrized.
inline Matrix riccati_rhs(const AugmentedOperators& ops, const Matrix& Pi) {
    const Vector PB = Pi * ops.Bvec;
    Matrix R = Pi * ops.Atot;
    R += ops.Atot.transpose() * Pi;
    R.noalias() += ops.Ctot.transpose() * Pi * ops.Ctot;
    R += ops.Qmat;
    R.noalias() -= (PB * PB.transpose()) / ops.delta;
    R = -R;
    return 0.5 * (R + R.transpose());
}

/// Smallest step count >= `requested` keeping fixed-step RK4 inside its
/// stability region for the linear part of the Riccati flow.
inline int stable_riccati_steps(const AugmentedOperators& ops, double T, int requested) {
    const double a = ops.Atot.cwiseAbs().rowwise().sum().maxCoeff();
    const double c = ops.Ctot.cwiseAbs().rowwise().sum().maxCoeff();
    const double rate = 2.0 * a + c * c;
    const double needed = std::ceil(T * rate / 2.5);
    return std::max(requested, static_cast<int>(needed));
}

namespace detail {

inline void check_riccati_blowup(const Matrix& Pi, double t) {
    const double norm = Pi.cwiseAbs().rowwise().sum().maxCoeff();
    if (!(norm <= kRiccatiBlowup))
        throw BlowupError("Riccati solution exceeded 1e12 at t = " + std::to_string(t));
}

// One classical RK4 step of length h backward in time.
inline Matrix rk4_backward_step(const AugmentedOperators& ops, const Matrix& Pi, double h) {
    const Matrix k1 = riccati_rhs(ops, Pi);
    const Matrix k2 = riccati_rhs(ops, Pi - 0.5 * h * k1);
    const Matrix k3 = riccati_rhs(ops, Pi - 0.5 * h * k2);
    const Matrix k4 = riccati_rhs(ops, Pi - h * k3);
    Matrix next = Pi - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    return 0.5 * (next + next.transpose());
}

}  // namespace detail

/// Integrates backward from Pi(T) = Gmat on a uniform grid of `steps`
/// intervals and stores Pi and K at every node, forward in time.
inline GainSchedule solve_riccati(const AugmentedOperators& ops, double T, int steps) {
    if (steps < 2) throw DomainError("riccati steps must be at least 2");
    if (!(T > 0.0)) throw DomainError("horizon T must be positive");
    const double h = T / steps;
    const auto n = static_cast<std::size_t>(steps) + 1;

    GainSchedule s;
    s.times.resize(n);
    s.Pi.resize(n);
    s.K.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.times[i] = static_cast<double>(i) * h;
    s.times.back() = T;

    s.Pi.back() = ops.Gmat;
    for (std::size_t i = n - 1; i-- > 0;) {
        s.Pi[i] = detail::rk4_backward_step(ops, s.Pi[i + 1], h);
        detail::check_riccati_blowup(s.Pi[i], s.times[i]);
    }
    for (std::size_t i = 0; i < n; ++i)
        s.K[i] = (ops.Bvec.transpose() * s.Pi[i]) / ops.delta;
    return s;
}

/// Pi(0) only, without storing the trajectory.
inline Matrix solve_riccati_initial(const AugmentedOperators& ops, double T, int steps) {
    if (steps < 2) throw DomainError("riccati steps must be at least 2");
    const double h = T / steps;
    Matrix Pi = ops.Gmat;
    for (int i = steps; i-- > 0;) {
        Pi = detail::rk4_backward_step(ops, Pi, h);
        detail::check_riccati_blowup(Pi, h * i);
    }
    return Pi;
}

/// Feedback gain at time t, linearly interpolated between nodes.
inline RowVector gain_at(const GainSchedule& s, double t) {
    const double T = s.horizon();
    const double slack = 1e-12 * std::max(1.0, T);
    if (!(t >= -slack && t <= T + slack))
        throw std::out_of_range("gain_at: t = " + std::to_string(t) + " outside [0, T]");
    const std::size_t last = s.times.size() - 1;
    const double h = T / static_cast<double>(last);
    auto i = static_cast<std::size_t>(std::clamp(std::floor(t / h), 0.0, static_cast<double>(last)));
    // floor() may land one node off near a node
    while (i > 0 && t < s.times[i]) --i;
    while (i < last && t >= s.times[i + 1]) ++i;
    if (i == last || t <= s.times[i]) return s.K[i];
    const double w = (t - s.times[i]) / (s.times[i + 1] - s.times[i]);
    return (1.0 - w) * s.K[i] + w * s.K[i + 1];
}

inline double value(const GainSchedule& s, const Vector& Z0) {
    return Z0.dot(s.Pi.front() * Z0);
}

/// Minimizer of U0 -> Z0(U0)' Pi(0) Z0(U0) over Z0 = Lrho U0 + M0; 0 when the
/// quadratic coefficient is numerically zero.
inline double optimal_u0(const Matrix& Pi0, const Vector& Lrho, const Vector& M0) {
    const Vector PL = Pi0 * Lrho;
    const double denom = PL.dot(Lrho);
    const double eps0 =
        1e-10 * Pi0.cwiseAbs().rowwise().sum().maxCoeff() * Lrho.squaredNorm();
    if (!(denom > eps0)) return 0.0;
    return -PL.dot(M0) / denom;
}

inline double optimal_u0(const GainSchedule& s, const AugmentedOperators& ops) {
    return optimal_u0(s.Pi.front(), ops.Lrho, ops.M0);
}

/// U(0) as requested by the spec: the optimum or a fixed value.
inline double resolve_u0(const ProblemSpec& spec, const Matrix& Pi0,
                         const AugmentedOperators& ops) {
    if (const auto* f = std::get_if<FixedU0>(&spec.control.u0_mode)) return f->value;
    return optimal_u0(Pi0, ops.Lrho, ops.M0);
}

inline double resolve_u0(const ProblemSpec& spec, const GainSchedule& s,
                         const AugmentedOperators& ops) {
    return resolve_u0(spec, s.Pi.front(), ops);
}

}  // namespace sdeheat
