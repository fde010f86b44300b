#include <cmath>
#include <numbers>

#include "doctest.h"
#include "qfragile/linalg.hpp"
#include "test_util.hpp"

using namespace qfragile;
using namespace testutil;

namespace {

// Truncated Taylor series with scaling and squaring, independent of the library's Pade route.
ComplexMatrix taylor_exp(const ComplexMatrix& a) {
    int s = 0;
    double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    while (norm > 0.1) {
        norm /= 2.0;
        ++s;
    }
    const ComplexMatrix x = a / std::pow(2.0, s);
    ComplexMatrix term = ComplexMatrix::Identity(a.rows(), a.cols());
    ComplexMatrix sum = term;
    for (int k = 1; k < 30; ++k) {
        term = term * x / static_cast<double>(k);
        sum += term;
    }
    for (int i = 0; i < s; ++i) {
        sum = sum * sum;
    }
    return sum;
}

}  // namespace

TEST_CASE("eigendecomposition of identity and diagonal matrices") {
    const auto id = hermitian_eigendecomposition(ComplexMatrix::Identity(3, 3));
    CHECK(id.eigenvalues.isApprox(RealVector::Ones(3)));
    CHECK((id.eigenvectors.adjoint() * id.eigenvectors - ComplexMatrix::Identity(3, 3)).norm() < 1e-12);

    ComplexMatrix d = ComplexMatrix::Zero(3, 3);
    d.diagonal() << 2.0, -1.0, 0.0;
    const auto ed = hermitian_eigendecomposition(d);
    CHECK(ed.eigenvalues(0) == doctest::Approx(-1.0));
    CHECK(ed.eigenvalues(1) == doctest::Approx(0.0));
    CHECK(ed.eigenvalues(2) == doctest::Approx(2.0));
}

TEST_CASE("eigendecomposition of J_z for J = 1 built directly") {
    ComplexMatrix jz = ComplexMatrix::Zero(3, 3);
    jz(0, 0) = 1.0;
    jz(2, 2) = -1.0;
    const auto ed = hermitian_eigendecomposition(jz);
    CHECK(ed.eigenvalues(0) == doctest::Approx(-1.0));
    CHECK(std::abs(ed.eigenvalues(1)) < 1e-14);
    CHECK(ed.eigenvalues(2) == doctest::Approx(1.0));
}

TEST_CASE("eigendecomposition reconstructs random Hermitian matrices") {
    std::mt19937_64 rng(1);
    for (int d : {2, 5, 17}) {
        const ComplexMatrix h = random_hermitian(rng, d);
        const auto ed = hermitian_eigendecomposition(h);
        const ComplexMatrix back = ed.eigenvectors * ed.eigenvalues.asDiagonal() * ed.eigenvectors.adjoint();
        CHECK((back - h).cwiseAbs().maxCoeff() < 1e-12);
        for (int k = 1; k < d; ++k) {
            CHECK(ed.eigenvalues(k) >= ed.eigenvalues(k - 1));
        }
    }
}

TEST_CASE("eigendecomposition rejects non-Hermitian input") {
    ComplexMatrix a(2, 2);
    a << 0, 1, 0, 0;
    CHECK_THROWS_AS(hermitian_eigendecomposition(a), ValidationError);
}

TEST_CASE("exponential of zero is the identity") {
    CHECK(matrix_exponential(ComplexMatrix::Zero(4, 4)) == ComplexMatrix::Identity(4, 4));
}

TEST_CASE("exp(-i pi sigma_y / 2) flips spin up to spin down") {
    const ComplexMatrix u = matrix_exponential(-kI * (std::numbers::pi / 2.0) * pauli_y());
    const ComplexMatrix closed = std::cos(std::numbers::pi / 2.0) * ComplexMatrix::Identity(2, 2) -
                                 kI * std::sin(std::numbers::pi / 2.0) * pauli_y();
    CHECK((u - closed).cwiseAbs().maxCoeff() < 1e-14);
    const ComplexVector down = u * ComplexVector::Unit(2, 0);
    CHECK(std::abs(std::abs(down(1)) - 1.0) < 1e-14);
}

TEST_CASE("exponential of a diagonal matrix") {
    ComplexMatrix d = ComplexMatrix::Zero(2, 2);
    d(0, 0) = Complex(0.3, 0.0);
    d(1, 1) = Complex(-1.2, 0.5);
    const ComplexMatrix e = matrix_exponential(d);
    CHECK(std::abs(e(0, 0) - std::exp(d(0, 0))) < 1e-14);
    CHECK(std::abs(e(1, 1) - std::exp(d(1, 1))) < 1e-14);
    CHECK(std::abs(e(0, 1)) < 1e-15);
}

TEST_CASE("anti-Hermitian exponentials are unitary and match the Pade route") {
    std::mt19937_64 rng(2);
    for (int d : {2, 7, 20}) {
        const ComplexMatrix g = -kI * random_hermitian(rng, d, 2.0);
        const ComplexMatrix u = matrix_exponential(g);
        CHECK((u.adjoint() * u - ComplexMatrix::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((pade_exponential(g) - u).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("Pade route matches an independent Taylor evaluation on general matrices") {
    std::mt19937_64 rng(3);
    for (double scale : {0.05, 0.5, 3.0}) {
        const ComplexMatrix a = random_matrix(rng, 6, 6, scale);
        const ComplexMatrix ref = taylor_exp(a);
        const double rel = (pade_exponential(a) - ref).norm() / ref.norm();
        CHECK(rel < 1e-11);
        CHECK((matrix_exponential(a) - ref).norm() / ref.norm() < 1e-11);
    }
}

TEST_CASE("Pade route matches V exp(D) V^-1 for a diagonalizable matrix") {
    std::mt19937_64 rng(4);
    const ComplexMatrix v = random_matrix(rng, 5, 5) + 3.0 * ComplexMatrix::Identity(5, 5);
    ComplexVector dvals(5);
    dvals << Complex(-4, 1), Complex(0.5, 0), Complex(2, -3), Complex(-0.1, 0.2), Complex(1, 1);
    const ComplexMatrix a = v * dvals.asDiagonal() * v.inverse();
    ComplexVector ed(5);
    for (int k = 0; k < 5; ++k) {
        ed(k) = std::exp(dvals(k));
    }
    const ComplexMatrix ref = v * ed.asDiagonal() * v.inverse();
    CHECK((pade_exponential(a) - ref).norm() / ref.norm() < 1e-10);
}

TEST_CASE("density operator validation") {
    CHECK_NOTHROW(DensityOperator(ComplexMatrix::Identity(2, 2) / 2.0));
    ComplexMatrix nonherm = ComplexMatrix::Identity(2, 2) / 2.0;
    nonherm(0, 1) = 0.1;
    CHECK_THROWS_AS(DensityOperator{nonherm}, ValidationError);
    CHECK_THROWS_AS(DensityOperator{ComplexMatrix::Identity(2, 2)}, ValidationError);
    ComplexMatrix neg = ComplexMatrix::Zero(2, 2);
    neg(0, 0) = 1.1;
    neg(1, 1) = -0.1;
    CHECK_THROWS_AS(DensityOperator{neg}, ValidationError);
    const auto mixed = DensityOperator::maximally_mixed(4);
    CHECK(mixed.purity() == doctest::Approx(0.25));
}

TEST_CASE("positivity clipping distinguishes rounding from failure") {
    ComplexMatrix rho = ComplexMatrix::Zero(2, 2);
    rho(0, 0) = 1.0 + 5e-9;
    rho(1, 1) = -5e-9;
    const ComplexMatrix clipped = clip_positivity(rho, "linalg", "test");
    CHECK(clipped(1, 1).real() >= 0.0);
    CHECK(clipped.trace().real() == doctest::Approx(1.0).epsilon(1e-14));
    rho(0, 0) = 1.0 + 1e-6;
    rho(1, 1) = -1e-6;
    CHECK_THROWS_AS(clip_positivity(rho, "linalg", "test"), NumericalError);
}

TEST_CASE("Lindblad propagation with zero duration returns the input") {
    std::mt19937_64 rng(5);
    const DensityOperator rho(random_density(rng, 3));
    std::vector<JumpOperator> jumps = {{random_matrix(rng, 3, 3), 1.0}};
    for (auto method : {LindbladMethod::dense_superoperator, LindbladMethod::fixed_step_rk4}) {
        const auto out = lindblad_propagate(rho, LindbladSpec{jumps, 0.0}, method);
        CHECK((out.matrix() - rho.matrix()).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("Pauli jumps contract the Bloch vector by exp(-4 gamma t)") {
    const ComplexVector up_x = ComplexVector::Ones(2) / std::sqrt(2.0);
    const std::vector<JumpOperator> jumps = {{pauli_x(), 1.0}, {pauli_y(), 1.0}, {pauli_z(), 1.0}};
    for (double gt : {0.01, 0.1, 0.5}) {
        for (auto method : {LindbladMethod::dense_superoperator, LindbladMethod::fixed_step_rk4}) {
            const auto out = lindblad_propagate(DensityOperator::pure(up_x), LindbladSpec{jumps, gt}, method);
            const auto b = bloch(out.matrix());
            CHECK(b(0) == doctest::Approx(std::exp(-4.0 * gt)).epsilon(1e-9));
            CHECK(std::abs(b(1)) < 1e-12);
            CHECK(std::abs(b(2)) < 1e-12);
        }
    }
}

TEST_CASE("long full depolarizing drives a qubit to I/2") {
    const std::vector<JumpOperator> jumps = {{pauli_x(), 1.0}, {pauli_y(), 1.0}, {pauli_z(), 1.0}};
    const auto out = lindblad_propagate(DensityOperator::pure(ComplexVector::Unit(2, 0)), LindbladSpec{jumps, 20.0},
                                        LindbladMethod::dense_superoperator);
    CHECK((out.matrix() - ComplexMatrix::Identity(2, 2) / 2.0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dense and RK4 propagation agree and preserve trace and Hermiticity") {
    std::mt19937_64 rng(6);
    for (int d : {2, 4, 8, 16}) {
        std::vector<JumpOperator> jumps;
        for (int k = 0; k < 3; ++k) {
            jumps.push_back({random_matrix(rng, d, d, 0.5), 0.7});
        }
        const DensityOperator rho(random_density(rng, d));
        const double gt = 0.1;
        const auto dense = lindblad_propagate(rho, LindbladSpec{jumps, gt}, LindbladMethod::dense_superoperator);
        const auto rk4 = lindblad_propagate(rho, LindbladSpec{jumps, gt}, LindbladMethod::fixed_step_rk4);
        CHECK(trace_distance(dense.matrix(), rk4.matrix()) < 1e-6);
        for (const auto* out : {&dense, &rk4}) {
            CHECK(std::abs(out->trace() - 1.0) < 1e-9);
            CHECK(hermitian_defect(out->matrix()) < 1e-10);
        }
    }
}

TEST_CASE("propagator object matches the generator solution for Hermitian and general jump sets") {
    std::mt19937_64 rng(7);
    const int d = 4;
    const ComplexMatrix rho = random_density(rng, d);
    const std::vector<JumpOperator> herm = {{random_hermitian(rng, d, 0.5), 1.0}};
    const std::vector<JumpOperator> general = {{random_matrix(rng, d, d, 0.5), 1.0}};
    const LindbladPropagator ph(herm, d);
    const LindbladPropagator pg(general, d);
    CHECK(ph.hermitian_route());
    CHECK_FALSE(pg.hermitian_route());
    CHECK(trace_distance(ph.apply(rho, 0.2), rk4_propagate(herm, rho, 0.2)) < 1e-8);
    CHECK(trace_distance(pg.apply(rho, 0.2), rk4_propagate(general, rho, 0.2)) < 1e-8);
}

TEST_CASE("trace distance and commutator basics") {
    const ComplexMatrix up = projector(ComplexVector::Unit(2, 0));
    const ComplexMatrix down = projector(ComplexVector::Unit(2, 1));
    CHECK(trace_distance(up, down) == doctest::Approx(1.0));
    CHECK(trace_distance(up, up) == doctest::Approx(0.0));
    const ComplexMatrix c = commutator(pauli_x(), pauli_y());
    CHECK((c - 2.0 * kI * pauli_z()).cwiseAbs().maxCoeff() < 1e-15);
}
