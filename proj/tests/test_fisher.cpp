#include <cmath>
#include <numbers>

#include "doctest.h"
#include "qfragile/fisher.hpp"
#include "qfragile/spin.hpp"
#include "test_util.hpp"

using namespace qfragile;
using namespace testutil;

namespace {

// Closed-form jump for the rotated first Dicke state at the zero of outcome M.
double oracle_jump(double j, double m) {
    const double a = (j + m) / (2.0 * j);
    const double b = (j - m) / (2.0 * j);
    const double log_binom = std::lgamma(2.0 * j + 1.0) - std::lgamma(j - m + 1.0) - std::lgamma(j + m + 1.0);
    const double la = j + m > 0 ? (j + m) * std::log(a) : 0.0;
    const double lb = j - m > 0 ? (j - m) * std::log(b) : 0.0;
    return 8.0 * j * std::exp(la + lb + log_binom);
}

OutcomeModel linear_bernoulli() {
    OutcomeModel m;
    m.labels = {0.0, 1.0};
    m.probabilities = [](double t) { return std::vector<double>{t, 1.0 - t}; };
    m.derivatives = [](double) { return std::vector<double>{1.0, -1.0}; };
    return m;
}

Povm rotated_povm(Spin j, double beta) { return Povm::projective(rotation_y(j, beta)); }

ComplexMatrix qubit_state(double x, double y, double z) {
    return 0.5 * (ComplexMatrix::Identity(2, 2) + x * pauli_x() + y * pauli_y() + z * pauli_z());
}

}  // namespace

TEST_CASE("Fisher sum skips outcomes below the support threshold") {
    CHECK(fisher_sum({0.5, 0.5}, {1.0, -1.0}) == doctest::Approx(4.0));
    CHECK(fisher_sum({1.0, 0.0}, {0.0, 3.0}) == 0.0);
    CHECK(fisher_sum({1.0 - 1e-13, 1e-13}, {0.0, 1.0}) == 0.0);
}

TEST_CASE("Bernoulli model has CFI 1/(t(1-t))") {
    const auto model = linear_bernoulli();
    for (double t : {0.1, 0.37, 0.5, 0.9}) {
        CHECK(cfi_distribution(model, t) == doctest::Approx(1.0 / (t * (1.0 - t))).epsilon(1e-13));
    }
}

TEST_CASE("theta-independent model carries no information") {
    OutcomeModel m;
    m.labels = {0.0, 1.0, 2.0};
    m.probabilities = [](double) { return std::vector<double>{0.2, 0.3, 0.5}; };
    m.derivatives = [](double) { return std::vector<double>{0.0, 0.0, 0.0}; };
    CHECK(cfi_distribution(m, 0.4) == 0.0);
}

TEST_CASE("distribution checks reject invalid models") {
    OutcomeModel m;
    m.labels = {0.0, 1.0};
    m.probabilities = [](double) { return std::vector<double>{0.7, 0.7}; };
    m.derivatives = [](double) { return std::vector<double>{0.0, 0.0}; };
    CHECK_THROWS_AS(cfi_distribution(m, 0.0), ValidationError);
}

TEST_CASE("POVM validation") {
    CHECK_NOTHROW(Povm::computational(3));
    CHECK(Povm::computational(3).is_diagonal());
    CHECK_FALSE(rotated_povm(Spin::from_double(1.0), 0.4).is_diagonal());
    std::vector<ComplexMatrix> incomplete = {projector(ComplexVector::Unit(2, 0))};
    CHECK_THROWS_AS(Povm{incomplete}, ValidationError);
}

TEST_CASE("first Dicke probe reaches 6J-2 away from discontinuities") {
    const Spin j = Spin::from_double(16.0);
    const auto ops = angular_momentum_operators(j);
    const EncodedModel em(DensityOperator::pure(dicke_ket(j, 15.0)), ops.jy);
    CHECK(cfi_state_povm(em, rotated_povm(j, 0.7)) == doctest::Approx(94.0).epsilon(1e-9));
    CHECK(qfi(em) == doctest::Approx(94.0).epsilon(1e-10));
}

TEST_CASE("qubit phase estimation in the conjugate basis gives CFI 1") {
    const ComplexVector plus = ComplexVector::Ones(2) / std::sqrt(2.0);
    const EncodedModel em(DensityOperator::pure(plus), 0.5 * pauli_z(), 0.5);
    const Povm x_basis = Povm::projective(
        (ComplexMatrix(2, 2) << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0))
            .finished());
    CHECK(cfi_state_povm(em, x_basis) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(qfi(em) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("maximally mixed state carries no information") {
    const Spin j = Spin::from_double(3.0);
    const auto ops = angular_momentum_operators(j);
    const EncodedModel em(DensityOperator::maximally_mixed(j.dim()), ops.jy);
    CHECK(cfi_state_povm(em, rotated_povm(j, 0.9)) < 1e-12);
    CHECK(qfi(em) < 1e-12);
}

TEST_CASE("QFI of coherent states and commuting generators") {
    for (double jv : {0.5, 3.0, 16.0}) {
        const Spin j = Spin::from_double(jv);
        const auto ops = angular_momentum_operators(j);
        const EncodedModel coherent(DensityOperator::pure(dicke_ket(j, jv)), ops.jy);
        CHECK(qfi(coherent) == doctest::Approx(2.0 * jv).epsilon(1e-10));
        const EncodedModel commuting(DensityOperator::pure(dicke_ket(j, jv)), ops.jz);
        CHECK(qfi(commuting) < 1e-12);
    }
}

TEST_CASE("mixed qubit QFI equals the squared Bloch velocity") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-0.55, 0.55);
    for (int trial = 0; trial < 20; ++trial) {
        const double x = u(rng), y = u(rng), z = u(rng);
        const double expected = x * x + y * y;
        CHECK(qfi_matrix(qubit_state(x, y, z), 0.5 * pauli_z()) == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("pure-state QFI is four times the generator variance") {
    std::mt19937_64 rng(12);
    for (int d : {2, 5, 9}) {
        const ComplexVector psi = random_unit(rng, d);
        const ComplexMatrix h = random_hermitian(rng, d);
        const Complex mean = psi.dot(h * psi);
        const Complex second = psi.dot(h * h * psi);
        const double var = (second - mean * mean).real();
        CHECK(qfi_matrix(projector(psi), h) == doctest::Approx(4.0 * var).epsilon(1e-9));
    }
}

TEST_CASE("CFI is homogeneous of degree one in rho") {
    std::mt19937_64 rng(13);
    const ComplexMatrix rho = random_density(rng, 4);
    const ComplexMatrix h = random_hermitian(rng, 4);
    const Povm povm = Povm::projective(random_matrix(rng, 4, 4).householderQr().householderQ());
    CHECK(cfi_matrix(0.3 * rho, h, povm) == doctest::Approx(0.3 * cfi_matrix(rho, h, povm)).epsilon(1e-12));
}

TEST_CASE("signal bound, CFI and QFI are ordered") {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 10; ++trial) {
        const int d = 3 + trial % 4;
        const ComplexMatrix rho = random_density(rng, d, 1 + trial % 3);
        const EncodedModel em(DensityOperator(rho), random_hermitian(rng, d), 0.2);
        const Povm povm = Povm::projective(random_matrix(rng, d, d).householderQr().householderQ());
        const auto model = induced_model(em, povm);
        const double cfi = cfi_distribution(model, 0.2);
        const auto bound = signal_lower_bound(model, 0.2);
        CHECK(bound.value <= cfi * (1.0 + 1e-10) + 1e-12);
        CHECK(cfi <= qfi(em) * (1.0 + 1e-10) + 1e-12);
        CHECK(std::abs(cfi - cfi_state_povm(em, povm)) < 1e-9 * (1.0 + cfi));
    }
}

TEST_CASE("signal bound degenerates for a deterministic outcome") {
    OutcomeModel m;
    m.labels = {0.0, 1.0};
    m.probabilities = [](double) { return std::vector<double>{1.0, 0.0}; };
    m.derivatives = [](double) { return std::vector<double>{0.0, 0.0}; };
    CHECK(signal_lower_bound(m, 0.0).degenerate);
}

TEST_CASE("derivative vanishes wherever a quantum outcome probability vanishes") {
    const Spin j = Spin::from_double(4.0);
    const auto ops = angular_momentum_operators(j);
    for (int k = 1; k + 1 < j.dim(); ++k) {
        const double beta = std::acos(j.m_at(k) / 4.0);
        const auto data = outcome_data(projector(dicke_ket(j, 3.0)), ops.jy, rotated_povm(j, beta));
        CHECK(data.p[k] < 1e-20);
        CHECK(std::abs(data.dp[k]) < 1e-10);
    }
}

TEST_CASE("linear vanishing outcome is an infinite discontinuity") {
    const auto model = linear_bernoulli();
    CHECK_THROWS_AS(jump_size_distribution(model, 0.0, 0), InfiniteDiscontinuity);
    CHECK_THROWS_AS(jump_size_distribution(model, 0.5, 0), ValidationError);
}

TEST_CASE("quadratic vanishing outcome jumps by 2 p''") {
    OutcomeModel m;
    m.labels = {0.0, 1.0};
    m.probabilities = [](double t) { return std::vector<double>{std::sin(t) * std::sin(t), std::cos(t) * std::cos(t)}; };
    m.derivatives = [](double t) { return std::vector<double>{std::sin(2.0 * t), -std::sin(2.0 * t)}; };
    CHECK(jump_size_distribution(m, 0.0, 0) == doctest::Approx(4.0).epsilon(1e-6));
    m.second_derivatives = [](double t) {
        return std::vector<double>{2.0 * std::cos(2.0 * t), -2.0 * std::cos(2.0 * t)};
    };
    CHECK(jump_size_distribution(m, 0.0, 0) == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("jump for J = 1 at M = 0 is 4") {
    const Spin j = Spin::from_double(1.0);
    const auto ops = angular_momentum_operators(j);
    const ComplexVector psi = rotation_y(j, std::numbers::pi / 2.0) * dicke_ket(j, 0.0);
    const double jump = jump_size_pure(psi, ops.jy, {projector(dicke_ket(j, 0.0))});
    CHECK(jump == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(oracle_jump(1.0, 0.0) == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("pure, mixed and distribution jumps agree with the closed form") {
    for (double jv : {2.0, 4.0, 16.0}) {
        const Spin j = Spin::from_double(jv);
        const auto ops = angular_momentum_operators(j);
        const ComplexVector probe = dicke_ket(j, jv - 1.0);
        for (int k = 1; k + 1 < j.dim(); ++k) {
            const double m = j.m_at(k);
            const double beta = std::acos(m / jv);
            const ComplexMatrix u = rotation_y(j, beta);
            const ComplexVector psi = u.adjoint() * probe;
            const std::vector<ComplexMatrix> element = {projector(ComplexVector::Unit(j.dim(), k))};
            const double pure = jump_size_pure(psi, ops.jy, element);
            const double mixed = jump_size_mixed(projector(psi), ops.jy, element);
            const EncodedModel em(DensityOperator::pure(psi), ops.jy);
            const double dist = jump_size_distribution(induced_model(em, Povm::computational(j.dim())), 0.0,
                                                       static_cast<std::size_t>(k));
            const double ref = oracle_jump(jv, m);
            CHECK(pure == doctest::Approx(ref).epsilon(1e-9));
            CHECK(mixed == doctest::Approx(ref).epsilon(1e-9));
            CHECK(dist == doctest::Approx(ref).epsilon(1e-6));
        }
    }
}

TEST_CASE("CFI limit next to a discontinuity equals the pointwise value plus the jump") {
    const double jv = 4.0;
    const Spin j = Spin::from_double(jv);
    const auto ops = angular_momentum_operators(j);
    const EncodedModel em(DensityOperator::pure(dicke_ket(j, jv - 1.0)), ops.jy);
    for (double m : {-2.0, 1.0, 3.0}) {
        const double beta = std::acos(m / jv);
        const double at = cfi_state_povm(em, rotated_povm(j, beta));
        const double left = cfi_state_povm(em, rotated_povm(j, beta - 1e-4));
        const double right = cfi_state_povm(em, rotated_povm(j, beta + 1e-4));
        CHECK(left == doctest::Approx(at + oracle_jump(jv, m)).epsilon(1e-5));
        CHECK(right == doctest::Approx(at + oracle_jump(jv, m)).epsilon(1e-5));
    }
}

TEST_CASE("SNR contribution approximates the exact term for small p") {
    CHECK_THROWS_AS(snr_contribution(0.1, 0.1, 0.0, 1.0, 1.0), ValidationError);
    CHECK_THROWS_AS(snr_contribution(0.1, 0.1, 0.5, 0.0, 1.0), ValidationError);
    const double d2 = 3.0;
    const double jump = 2.0 * d2;
    const double eps = 0.01, sigma = 0.2;
    for (double delta : {1e-3, 1e-4}) {
        const double p = 0.5 * d2 * delta * delta;
        const double dp = d2 * delta;
        const double approx = snr_contribution(p, dp, eps, sigma, jump);
        const double exact = snr_exact_term(p, dp, eps, sigma);
        CHECK(approx == doctest::Approx(exact).epsilon(10.0 * p / (eps * sigma)));
    }
    CHECK(snr_exact_term(0.5, 1.0, 0.0, 1.0) == doctest::Approx(2.0));
}
