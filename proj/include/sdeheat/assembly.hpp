#pragma once

// Finite-dimensional augmented system in the state ordering (X, Y, z):
//
//   dZ = (Atot Z + Bvec V) dt + Ctot Z dW,   Y = U,  z = coordinates of u - rho U
//
//   Atot = [ A   B rho(0)   B g0' ]    Ctot = [ C   D rho(0)   D g0' ]
//          [ 0   mu         0     ]           [ 0   0          0     ]
//          [ 0   0          cI - L]           [ 0   0          0     ]
//
//   Bvec = Lrho = (0, 1, -rho^N),  M0 = (X0, 0, u0^N),  Z0 = Lrho U0 + M0
//
// with L = diag(lambda_n) and g0 = (phi_n(0))_n. The Y column carries the
// trace of the lifting, u(t,0) = z(t,0) + rho(0) U(t).

#include <Eigen/Dense>

#include "sdeheat/model.hpp"
#include "sdeheat/spectral.hpp"

namespace sdeheat {

struct AugmentedOperators {
    Eigen::Index d = 0;      // SDE dimension
    int N = 0;               // highest retained mode
    Eigen::Index dim = 0;    // d + 1 + (N + 1)
    Matrix Atot;
    Matrix Ctot;
    Vector Bvec;
    Matrix Qmat;
    Matrix Gmat;
    Vector Lrho;
    Vector M0;
    double delta = 1.0;

    [[nodiscard]] Eigen::Index y_index() const noexcept { return d; }
    [[nodiscard]] Eigen::Index z_offset() const noexcept { return d + 1; }
    [[nodiscard]] Eigen::Index z_size() const noexcept { return N + 1; }
};

inline AugmentedOperators assemble(const ProblemSpec& spec, const SpectralBasis& basis) {
    if (basis.N() != spec.disc.N) throw DomainError("basis mode count differs from spec N");
    const double c = spec.pde.c;
    const double mu = spec.control.mu;
    const double rho0 = rho_eval(c, mu, 0.0);
    const Vector rhoN = rho_coeffs(basis, c, mu).coeffs;
    const Vector g0 = gamma0_coeffs(basis).coeffs;

    AugmentedOperators ops;
    ops.d = spec.sde.dim();
    ops.N = basis.N();
    ops.dim = ops.d + 1 + basis.modes();
    ops.delta = spec.cost.delta;
    const auto d = ops.d;
    const auto y = ops.y_index();
    const auto zo = ops.z_offset();
    const auto nz = ops.z_size();

    ops.Atot = Matrix::Zero(ops.dim, ops.dim);
    ops.Atot.topLeftCorner(d, d) = spec.sde.A;
    ops.Atot.block(0, y, d, 1) = spec.sde.B * rho0;
    ops.Atot.block(0, zo, d, nz) = spec.sde.B * g0.transpose();
    ops.Atot(y, y) = mu;
    for (int n = 0; n <= basis.N(); ++n) ops.Atot(zo + n, zo + n) = c - basis.lambda(n);

    ops.Ctot = Matrix::Zero(ops.dim, ops.dim);
    ops.Ctot.topLeftCorner(d, d) = spec.sde.C;
    ops.Ctot.block(0, y, d, 1) = spec.sde.D * rho0;
    ops.Ctot.block(0, zo, d, nz) = spec.sde.D * g0.transpose();

    ops.Bvec = Vector::Zero(ops.dim);
    ops.Bvec(y) = 1.0;
    ops.Bvec.segment(zo, nz) = -rhoN;
    ops.Lrho = ops.Bvec;

    ops.Qmat = Matrix::Zero(ops.dim, ops.dim);
    ops.Qmat.topLeftCorner(d, d) = spec.cost.Q;
    ops.Qmat(y, y) = spec.cost.r;
    ops.Gmat = Matrix::Zero(ops.dim, ops.dim);
    ops.Gmat.topLeftCorner(d, d) = spec.cost.G;

    ops.M0 = Vector::Zero(ops.dim);
    ops.M0.head(d) = spec.sde.X0;
    ops.M0.segment(zo, nz) = project(basis, spec.pde.u0).coeffs;
    return ops;
}

/// Z0 = Lrho U0 + M0, i.e. (X0, U0, u0^N - rho^N U0).
inline Vector initial_state(const AugmentedOperators& ops, double u0_value) {
    return ops.Lrho * u0_value + ops.M0;
}

}  // namespace sdeheat
