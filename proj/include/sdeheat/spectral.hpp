#pragma once

// Neumann-Laplacian eigenbasis on [0, 1], orthonormal in H^1:
//
//   lambda_n = pi^2 n^2,  phi_n(x) = A_n cos(n pi x),
//   A_0 = 1,  A_n = sqrt(2 / (1 + pi^2 n^2))  (n >= 1).
//
// The lifting profile rho solves -rho'' + (mu - c) rho = 0 with rho'(0) = 0,
// rho'(1) = 1, i.e. rho(x) = cosh(k x) / (k sinh k), k = sqrt(mu - c).

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdeheat/errors.hpp"
#include "sdeheat/grid.hpp"
#include "sdeheat/model.hpp"

namespace sdeheat {

inline constexpr double pi = std::numbers::pi;

/// Coordinates of an H^1 function in the (phi_0, ..., phi_N) basis.
struct H1Vector {
    Vector coeffs;

    [[nodiscard]] Eigen::Index size() const { return coeffs.size(); }
    [[nodiscard]] double norm() const { return coeffs.norm(); }
};

class SpectralBasis {
public:
    explicit SpectralBasis(int N) : N_(N) {
        if (N < 0) throw DomainError("mode count N must be non-negative");
        lambdas_.resize(static_cast<std::size_t>(N) + 1);
        norm_coeffs_.resize(lambdas_.size());
        for (int n = 0; n <= N; ++n) {
            const double npi = pi * n;
            lambdas_[static_cast<std::size_t>(n)] = npi * npi;
            norm_coeffs_[static_cast<std::size_t>(n)] =
                n == 0 ? 1.0 : std::sqrt(2.0 / (1.0 + npi * npi));
        }
    }

    [[nodiscard]] int N() const noexcept { return N_; }
    [[nodiscard]] int modes() const noexcept { return N_ + 1; }
    [[nodiscard]] const std::vector<double>& lambdas() const noexcept { return lambdas_; }
    [[nodiscard]] const std::vector<double>& norm_coeffs() const noexcept { return norm_coeffs_; }

    [[nodiscard]] double lambda(int n) const { return lambdas_.at(checked(n)); }
    [[nodiscard]] double norm_coeff(int n) const { return norm_coeffs_.at(checked(n)); }

    [[nodiscard]] double phi(int n, double x) const {
        return norm_coeffs_[checked(n)] * std::cos(n * pi * x);
    }
    [[nodiscard]] double phi_deriv(int n, double x) const {
        return -norm_coeffs_[checked(n)] * n * pi * std::sin(n * pi * x);
    }

private:
    [[nodiscard]] std::size_t checked(int n) const {
        if (n < 0 || n > N_)
            throw std::out_of_range("mode index " + std::to_string(n) + " outside 0.." +
                                    std::to_string(N_));
        return static_cast<std::size_t>(n);
    }

    int N_;
    std::vector<double> lambdas_;
    std::vector<double> norm_coeffs_;
};

inline SpectralBasis build_basis(int N) { return SpectralBasis(N); }

inline double eval_phi(const SpectralBasis& basis, int n, double x) { return basis.phi(n, x); }
inline double eval_phi_deriv(const SpectralBasis& basis, int n, double x) {
    return basis.phi_deriv(n, x);
}

// ---------------------------------------------------------------------------
// Grid quadrature
// ---------------------------------------------------------------------------

/// Composite trapezoid weights for the grid `xs`.
inline std::vector<double> trapezoid_weights(std::span<const double> xs) {
    std::vector<double> w(xs.size(), 0.0);
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double h = xs[i + 1] - xs[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    return w;
}

/// Derivative of grid data from the three-point Lagrange stencil: centered in
/// the interior, one-sided second-order at both endpoints.
inline std::vector<double> grid_derivative(std::span<const double> xs,
                                           std::span<const double> f) {
    const std::size_t m = xs.size();
    if (m < 3) throw DomainError("grid derivative needs at least 3 points");
    // derivative at xs[at] of the parabola through points i0, i0+1, i0+2
    auto stencil = [&](std::size_t i0, std::size_t at) {
        const double x0 = xs[i0], x1 = xs[i0 + 1], x2 = xs[i0 + 2], x = xs[at];
        const double l0 = ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2));
        const double l1 = ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2));
        const double l2 = ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1));
        return l0 * f[i0] + l1 * f[i0 + 1] + l2 * f[i0 + 2];
    };
    std::vector<double> d(m);
    d[0] = stencil(0, 0);
    for (std::size_t i = 1; i + 1 < m; ++i) d[i] = stencil(i - 1, i);
    d[m - 1] = stencil(m - 3, m - 1);
    return d;
}

/// <f, g>_{H^1} = int f g + int f' g' for two functions sampled on one grid.
inline double h1_inner(const GridFunction& f, const GridFunction& g) {
    if (f.xs != g.xs) throw DomainError("h1_inner: grid functions live on different grids");
    if (const auto why = grid_violation(f, 3); !why.empty()) throw DomainError("h1_inner: " + why);
    if (g.values.size() != g.xs.size()) throw DomainError("h1_inner: malformed second argument");
    const auto w = trapezoid_weights(f.xs);
    const auto df = grid_derivative(f.xs, f.values);
    const auto dg = grid_derivative(g.xs, g.values);
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
        s += w[i] * (f.values[i] * g.values[i] + df[i] * dg[i]);
    return s;
}

/// Closed form <phi_m, phi_n>_{H^1}.
inline double h1_inner_modes(const SpectralBasis& basis, int m, int n) {
    (void)basis.norm_coeff(m);
    (void)basis.norm_coeff(n);
    return m == n ? 1.0 : 0.0;
}

// ---------------------------------------------------------------------------
// Lifting profile
// ---------------------------------------------------------------------------

inline double rho_rate(double c, double mu) {
    if (!(mu > c)) throw DomainError("mu must exceed c");
    return std::sqrt(mu - c);
}

inline double rho_eval(double c, double mu, double x) {
    const double k = rho_rate(c, mu);
    return std::cosh(k * x) / (k * std::sinh(k));
}

inline double rho_deriv(double c, double mu, double x) {
    const double k = rho_rate(c, mu);
    return std::sinh(k * x) / std::sinh(k);
}

/// <rho, phi_n>_{H^1} in closed form. Integrating by parts with rho'' = k^2 rho
/// and phi_n'' = -lambda_n phi_n gives
///   int rho phi_n = phi_n(1) / (k^2 + lambda_n),
///   int rho' phi_n' = phi_n(1) - k^2 int rho phi_n.
inline H1Vector rho_coeffs(const SpectralBasis& basis, double c, double mu) {
    const double k = rho_rate(c, mu);
    const double k2 = k * k;
    H1Vector out{Vector(basis.modes())};
    for (int n = 0; n <= basis.N(); ++n) {
        const double phi1 = basis.phi(n, 1.0);
        out.coeffs(n) = (1.0 - k2) * phi1 / (k2 + basis.lambda(n)) + phi1;
    }
    return out;
}

/// Coordinates of point evaluation at x = 0: phi_n(0) = A_n.
inline H1Vector gamma0_coeffs(const SpectralBasis& basis) {
    H1Vector out{Vector(basis.modes())};
    for (int n = 0; n <= basis.N(); ++n) out.coeffs(n) = basis.norm_coeff(n);
    return out;
}

// ---------------------------------------------------------------------------
// Projection and reconstruction
// ---------------------------------------------------------------------------

/// Quadrature projector onto span(phi_0..phi_N) for data sampled on a fixed
/// grid. Basis samples and their grid derivatives are cached so repeated
/// projections cost O(N M).
class GridProjector {
public:
    GridProjector(const SpectralBasis& basis, std::vector<double> xs)
        : xs_(std::move(xs)), weights_(trapezoid_weights(xs_)) {
        if (xs_.size() < 3) throw DomainError("projection grid needs at least 3 points");
        const auto m = static_cast<Eigen::Index>(xs_.size());
        phi_.resize(basis.modes(), m);
        dphi_.resize(basis.modes(), m);
        std::vector<double> row(xs_.size());
        for (int n = 0; n <= basis.N(); ++n) {
            for (std::size_t i = 0; i < xs_.size(); ++i) row[i] = basis.phi(n, xs_[i]);
            const auto d = grid_derivative(xs_, row);
            for (Eigen::Index i = 0; i < m; ++i) {
                phi_(n, i) = row[static_cast<std::size_t>(i)] * weights_[static_cast<std::size_t>(i)];
                dphi_(n, i) = d[static_cast<std::size_t>(i)] * weights_[static_cast<std::size_t>(i)];
            }
        }
    }

    [[nodiscard]] const std::vector<double>& grid() const noexcept { return xs_; }

    [[nodiscard]] H1Vector project(std::span<const double> values) const {
        if (values.size() != xs_.size()) throw DomainError("projection: sample count mismatch");
        const auto d = grid_derivative(xs_, values);
        const Eigen::Map<const Vector> f(values.data(), static_cast<Eigen::Index>(values.size()));
        const Eigen::Map<const Vector> df(d.data(), static_cast<Eigen::Index>(d.size()));
        return H1Vector{phi_ * f + dphi_ * df};
    }

private:
    std::vector<double> xs_;
    std::vector<double> weights_;
    Matrix phi_;   // weighted basis samples, modes x points
    Matrix dphi_;  // weighted basis derivative samples
};

inline H1Vector project(const SpectralBasis& basis, const GridFunction& f) {
    if (const auto why = grid_violation(f, 3); !why.empty()) throw DomainError("project: " + why);
    return GridProjector(basis, f.xs).project(f.values);
}

/// Projection of an initial profile; constants project exactly onto phi_0.
inline H1Vector project(const SpectralBasis& basis, const InitialProfile& u0) {
    if (const auto* c = std::get_if<ConstantProfile>(&u0)) {
        H1Vector out{Vector::Zero(basis.modes())};
        out.coeffs(0) = c->value;
        return out;
    }
    return project(basis, std::get<GridFunction>(u0));
}

inline GridFunction reconstruct(const SpectralBasis& basis, const H1Vector& z,
                                std::vector<double> xs) {
    if (z.size() != basis.modes()) throw DomainError("reconstruct: coefficient count mismatch");
    GridFunction g{std::move(xs), {}};
    g.values.assign(g.xs.size(), 0.0);
    for (std::size_t i = 0; i < g.xs.size(); ++i) {
        double s = 0.0;
        for (int n = 0; n <= basis.N(); ++n) s += z.coeffs(n) * basis.phi(n, g.xs[i]);
        g.values[i] = s;
    }
    return g;
}

/// Neumann heat semigroup e^{t Delta} acting diagonally on coordinates.
inline H1Vector heat_semigroup_coeffs(const SpectralBasis& basis, double t, const H1Vector& z) {
    if (t < 0.0) throw DomainError("heat semigroup needs t >= 0");
    if (z.size() != basis.modes()) throw DomainError("heat semigroup: coefficient count mismatch");
    H1Vector out = z;
    for (int n = 1; n <= basis.N(); ++n) out.coeffs(n) *= std::exp(-basis.lambda(n) * t);
    return out;
}

}  // namespace sdeheat
