#pragma once

// Test-only reference computations. Nothing here calls into the code paths
// it is used to check.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "sdeheat/model.hpp"

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Composite Simpson rule on [a, b] with `panels` (even) subintervals.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      int panels = 20000) {
    const double h = (b - a) / panels;
    double s = f(a) + f(b);
    for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

/// H^1 inner product of two analytic functions given with their derivatives.
inline double h1_inner(const std::function<double(double)>& f,
                       const std::function<double(double)>& df,
                       const std::function<double(double)>& g,
                       const std::function<double(double)>& dg) {
    return simpson([&](double x) { return f(x) * g(x) + df(x) * dg(x); }, 0.0, 1.0);
}

/// Finite-difference solution of -r'' + k2 r = 0, r'(0) = 0, r'(1) = 1 on a
/// uniform grid with ghost-point boundary rows; tridiagonal elimination.
inline std::vector<double> rho_bvp(double k2, int points) {
    const int m = points;
    const double h = 1.0 / (m - 1);
    std::vector<double> a(m, -1.0), b(m, 2.0 + k2 * h * h), c(m, -1.0), d(m, 0.0);
    c[0] = -2.0;          // r_{-1} = r_1
    a[m - 1] = -2.0;      // r_m = r_{m-2} + 2h
    d[m - 1] = 2.0 * h;
    for (int i = 1; i < m; ++i) {
        const double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        d[i] -= w * d[i - 1];
    }
    std::vector<double> r(m);
    r[m - 1] = d[m - 1] / b[m - 1];
    for (int i = m - 2; i >= 0; --i) r[i] = (d[i] - c[i] * r[i + 1]) / b[i];
    return r;
}

/// Deterministic LQR Riccati -P' = P A + A'P + Q - P b b' P / delta, P(T) = G,
/// by classical RK4 in reversed time. Returns P at every node, forward in time.
inline std::vector<Matrix> deterministic_riccati(const Matrix& A, const Vector& b, const Matrix& Q,
                                                 const Matrix& G, double delta, double T,
                                                 int steps) {
    auto f = [&](const Matrix& P) {
        const Vector Pb = P * b;
        Matrix R = P * A + A.transpose() * P + Q - Pb * Pb.transpose() / delta;
        return Matrix(0.5 * (R + R.transpose()));
    };
    const double h = T / steps;
    std::vector<Matrix> out(static_cast<std::size_t>(steps) + 1);
    out.back() = G;
    for (int i = steps; i > 0; --i) {
        const Matrix& P = out[static_cast<std::size_t>(i)];
        const Matrix k1 = f(P);
        const Matrix k2 = f(P + 0.5 * h * k1);
        const Matrix k3 = f(P + 0.5 * h * k2);
        const Matrix k4 = f(P + h * k3);
        Matrix next = P + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out[static_cast<std::size_t>(i - 1)] = 0.5 * (next + next.transpose());
    }
    return out;
}

/// Sample mean and standard error of X_t^2 for dX = a X dt + c X dW, drawn
/// from the exact solution X_t = x0 exp((a - c^2/2) t + c W_t).
struct MeanSe {
    double mean;
    double se;
};
inline MeanSe scalar_second_moment_mc(double a, double c, double x0, double t, int paths,
                                      std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    double s = 0, ss = 0;
    for (int i = 0; i < paths; ++i) {
        const double W = std::sqrt(t) * n01(rng);
        const double x = x0 * std::exp((a - 0.5 * c * c) * t + c * W);
        s += x * x;
        ss += x * x * x * x;
    }
    const double mean = s / paths;
    const double var = (ss / paths - mean * mean) * paths / (paths - 1.0);
    return {mean, std::sqrt(var / paths)};
}

/// Reference scenario, built in code.
inline sdeheat::ProblemSpec reference_spec() {
    sdeheat::ProblemSpec s;
    s.sde.A = Matrix::Constant(1, 1, 2.0);
    s.sde.B = Matrix::Constant(1, 1, 2.0);
    s.sde.C = Matrix::Constant(1, 1, 1.0);
    s.sde.D = Matrix::Constant(1, 1, 0.5);
    s.sde.X0 = Vector::Constant(1, 1.0);
    s.pde.c = 0.5;
    s.pde.u0 = sdeheat::ConstantProfile{1.0};
    s.cost.Q = Matrix::Constant(1, 1, 10.0);
    s.cost.r = 1.0;
    s.cost.G = Matrix::Constant(1, 1, 10.0);
    s.cost.delta = 0.5;
    s.cost.T = 1.0;
    s.control.mu = 1.5;
    s.disc.N = 3;
    s.disc.riccati_steps = 2000;
    s.disc.sim_dt = 1e-3;
    s.disc.mc_paths = 10000;
    s.disc.seed = 20250101;
    s.disc.fd_grid_points = 256;
    return s;
}

}  // namespace oracle
