#include <catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "sdeheat/convergence.hpp"

using namespace sdeheat;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("mode sweep on the scenario", "[convergence]") {
    const ConvergenceReport rep = sweep_N(oracle::reference_spec(), {2, 4, 8, 16}, 32, 2);
    REQUIRE(rep.Ns == std::vector<int>{2, 4, 8, 16});
    REQUIRE(rep.values.size() == 4);
    CHECK(rep.N_ref == 32);

    std::vector<double> gaps;
    for (double v : rep.values) gaps.push_back(std::abs(v - rep.value_ref));
    for (std::size_t i = 1; i < gaps.size(); ++i) {
        CHECK(gaps[i] < gaps[i - 1]);
        CHECK(rep.semigroup_errs[i] < rep.semigroup_errs[i - 1]);
    }
    // consecutive differences shrink, including the step to N_ref
    std::vector<double> chain = rep.values;
    chain.push_back(rep.value_ref);
    for (std::size_t i = 2; i < chain.size(); ++i)
        CHECK(std::abs(chain[i] - chain[i - 1]) < std::abs(chain[i - 1] - chain[i - 2]));

    CHECK(std::abs(rep.u0s.back() - rep.u0_ref) < std::abs(rep.u0s.front() - rep.u0_ref));
    CHECK(std::abs(rep.u0s.back() - rep.u0_ref) < 1e-2);
    CHECK_THAT(rep.value_ref, WithinRel(802.6, 1e-3));
    CHECK(rep.gain_dists.back() < rep.gain_dists.front());
    for (double e : rep.semigroup_errs) CHECK(e > 0.0);
}

TEST_CASE("sweep preconditions", "[convergence]") {
    const ProblemSpec spec = oracle::reference_spec();
    CHECK_THROWS_AS(sweep_N(spec, {2, 4, 8}, 8), DomainError);
    CHECK_THROWS_AS(sweep_N(spec, {}, 8), DomainError);
}

TEST_CASE("single-mode solve matches the assembled problem", "[convergence]") {
    const ProblemSpec spec = oracle::reference_spec();
    const ModeSolve s = solve_for_modes(spec, 3);
    CHECK(s.ops.dim == 6);
    CHECK_THAT(s.value, WithinRel(801.263, 1e-4));
    CHECK_THAT(s.u0, WithinAbs(-10.4518, 1e-3));
    CHECK(s.Z0 == initial_state(s.ops, s.u0));
}

TEST_CASE("embedding zero-pads the z block", "[convergence]") {
    const Matrix P = embedding(2, 2, 5);
    REQUIRE(P.rows() == 2 + 1 + 6);
    REQUIRE(P.cols() == 2 + 1 + 3);
    CHECK(P.topRows(6) == Matrix::Identity(6, 6));
    CHECK(P.bottomRows(3).isZero(0.0));
    CHECK(P.transpose() * P == Matrix::Identity(6, 6));
}

TEST_CASE("semigroup tail error", "[convergence]") {
    const SpectralBasis b(8);
    SECTION("vector inside the span has no tail") {
        H1Vector v{Vector::Zero(9)};
        v.coeffs.head(4).setOnes();
        CHECK(semigroup_tail_error(b, v, 3) == 0.0);
        CHECK(semigroup_tail_error(b, v, 8) == 0.0);
    }
    SECTION("tail norm is the supremum over time") {
        H1Vector p = rho_coeffs(b, 0.5, 1.5);
        p.coeffs.normalize();
        for (int N : {1, 3, 5}) {
            const double e = semigroup_tail_error(b, p, N);
            CHECK_THAT(e, WithinRel(p.coeffs.tail(8 - N).norm(), 1e-14));
            for (double t : {1e-4, 1e-2, 0.1, 1.0}) {
                const H1Vector s = heat_semigroup_coeffs(b, t, p);
                CHECK(s.coeffs.tail(8 - N).norm() <= e);
            }
        }
    }
}
