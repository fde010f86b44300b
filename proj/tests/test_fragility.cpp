#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "qfragile/experiments.hpp"
#include "qfragile/fragility.hpp"
#include "test_util.hpp"

using namespace qfragile;
using namespace testutil;

namespace {

// Direct product form of the jump for small J.
double product_jump(int j, int m) {
    const double a = static_cast<double>(j + m) / (2.0 * j);
    const double b = static_cast<double>(j - m) / (2.0 * j);
    double binom = 1.0;
    for (int k = 1; k <= j - m; ++k) {
        binom *= static_cast<double>(2 * j - (j - m) + k) / k;
    }
    return 8.0 * j * std::pow(a, j + m) * std::pow(b, j - m) * binom;
}

double min_eig_2x2(const ComplexMatrix& a) {
    const double t = 0.5 * (a(0, 0).real() + a(1, 1).real());
    const double d = 0.5 * (a(0, 0).real() - a(1, 1).real());
    return t - std::sqrt(d * d + std::norm(a(0, 1)));
}

double bisect_weight(const ComplexMatrix& rho, const ComplexVector& phi) {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (min_eig_2x2(rho - mid * projector(phi)) >= 0.0 ? lo : hi) = mid;
    }
    return lo;
}

// Dense first-Dicke state of N qubits: equal superposition of single flips.
ComplexVector dense_first_dicke(int n) {
    const Eigen::Index d = Eigen::Index{1} << n;
    ComplexVector v = ComplexVector::Zero(d);
    for (int q = 0; q < n; ++q) {
        v(Eigen::Index{1} << q) = 1.0 / std::sqrt(static_cast<double>(n));
    }
    return v;
}

ComplexMatrix dense_total_jy(int n) {
    const Eigen::Index d = Eigen::Index{1} << n;
    ComplexMatrix jy = ComplexMatrix::Zero(d, d);
    for (int q = 0; q < n; ++q) {
        ComplexMatrix a = ComplexMatrix::Identity(1, 1);
        for (int r = 0; r < n; ++r) {
            a = kron(a, r == q ? ComplexMatrix(0.5 * pauli_y()) : ComplexMatrix(ComplexMatrix::Identity(2, 2)));
        }
        jy += a;
    }
    return jy;
}

double dense_local_cfi(int n, double gamma_t, double beta) {
    const Eigen::Index d = Eigen::Index{1} << n;
    const ComplexMatrix jy = dense_total_jy(n);
    const ComplexMatrix u = matrix_exponential(-kI * beta * jy);
    const ComplexMatrix rho = apply_local_depolarizing(DensityOperator::pure(dense_first_dicke(n)), n, gamma_t).matrix();
    std::vector<ComplexMatrix> elements(static_cast<std::size_t>(n + 1), ComplexMatrix::Zero(d, d));
    for (Eigen::Index x = 0; x < d; ++x) {
        const int flips = std::popcount(static_cast<unsigned>(x));
        elements[static_cast<std::size_t>(flips)] += u.col(x) * u.col(x).adjoint();
    }
    return cfi_matrix(rho, jy, Povm(elements));
}

}  // namespace

TEST_CASE("uniform and densified grids") {
    const auto g = uniform_grid(0.0, 1.0, 5);
    REQUIRE(g.size() == 5);
    CHECK(g.front() == 0.0);
    CHECK(g.back() == 1.0);
    CHECK(g[2] == doctest::Approx(0.5));
    CHECK(uniform_grid(0.5, 1.0, 1) == std::vector<double>{0.5});
    CHECK_THROWS_AS(uniform_grid(1.0, 0.0, 3), ValidationError);

    const std::vector<double> centers = {0.3, 0.77};
    const auto dg = densified_grid(0.0, 1.0, 11, centers, 10, 0.02);
    CHECK(std::is_sorted(dg.begin(), dg.end()));
    CHECK(std::adjacent_find(dg.begin(), dg.end()) == dg.end());
    for (double c : centers) {
        CHECK(std::find(dg.begin(), dg.end(), c) != dg.end());
        const auto near = std::count_if(dg.begin(), dg.end(), [c](double b) { return std::abs(b - c) <= 0.02 + 1e-12; });
        CHECK(near >= 10);
    }
    CHECK(dg.front() >= 0.0);
    CHECK(dg.back() <= 1.0);
}

TEST_CASE("discontinuity angles") {
    const auto a = discontinuity_angles(Spin::from_double(2.0));
    REQUIRE(a.size() == 5);
    CHECK(a.front() == doctest::Approx(0.0));
    CHECK(a[1] == doctest::Approx(std::numbers::pi / 3.0));
    CHECK(a[2] == doctest::Approx(std::numbers::pi / 2.0));
    CHECK(a.back() == doctest::Approx(std::numbers::pi));
    const auto grid = default_beta_grid(Spin::from_double(16.0));
    for (double b : discontinuity_angles(Spin::from_double(16.0))) {
        CHECK(std::find(grid.begin(), grid.end(), b) != grid.end());
    }
}

TEST_CASE("discontinuity sizes") {
    CHECK(discontinuity_size(Spin::from_double(1.0), 0.0) == doctest::Approx(4.0).epsilon(1e-14));
    for (int j : {2, 3, 5, 8}) {
        for (int m = -j + 1; m < j; ++m) {
            CHECK(discontinuity_size(Spin::from_double(j), m) == doctest::Approx(product_jump(j, m)).epsilon(1e-12));
        }
    }
    const auto recs = locate_discontinuities(Spin::from_double(16.0));
    bool saw_zero = false;
    for (const auto& r : recs) {
        CHECK(r.beta_star == doctest::Approx(std::acos(r.m / 16.0)).epsilon(1e-14));
        if (r.m == 0.0) {
            saw_zero = true;
            CHECK(r.beta_star == doctest::Approx(std::numbers::pi / 2.0));
        }
    }
    CHECK(saw_zero);
}

TEST_CASE("closed-form jump matches the pure-state jump") {
    for (double jv : {4.0, 16.0}) {
        const Spin j = Spin::from_double(jv);
        const auto ops = angular_momentum_operators(j);
        for (int k = 1; k + 1 < j.dim(); ++k) {
            const double m = j.m_at(k);
            const ComplexMatrix u = rotation_y(j, std::acos(m / jv));
            const ComplexVector psi = u.adjoint() * dicke_ket(j, jv - 1.0);
            const double pure = jump_size_pure(psi, ops.jy, {projector(ComplexVector::Unit(j.dim(), k))});
            CHECK(std::abs(pure - discontinuity_size(j, m)) < 1e-8 * discontinuity_size(j, m));
        }
    }
}

TEST_CASE("noiseless sweep sits on the QFI plateau and drops by the jump") {
    const Spin j = Spin::from_double(4.0);
    const auto problem = first_dicke_problem(j);
    std::vector<double> betas = {0.2, 1.3, 2.6};
    const auto plateau = sweep_cfi(problem, betas);
    CHECK(plateau.qfi == doctest::Approx(22.0).epsilon(1e-12));
    for (double c : plateau.cfi) {
        CHECK(c == doctest::Approx(22.0).epsilon(1e-10));
    }
    std::vector<double> stars;
    std::vector<double> ms;
    for (int k = 1; k + 1 < j.dim(); ++k) {
        ms.push_back(j.m_at(k));
        stars.push_back(std::acos(j.m_at(k) / 4.0));
    }
    const auto at = sweep_cfi(problem, stars);
    for (std::size_t i = 0; i < ms.size(); ++i) {
        CHECK(at.cfi[i] == doctest::Approx(22.0 - product_jump(4, static_cast<int>(ms[i]))).epsilon(1e-9));
    }
}

TEST_CASE("sweep is independent of the thread count") {
    const Spin j = Spin::from_double(6.0);
    const auto problem = first_dicke_problem(j, CollectiveDepolarizing{j, 1e-3});
    const auto betas = uniform_grid(0.0, std::numbers::pi, 41);
    const auto one = sweep_cfi(problem, betas, 1);
    const auto three = sweep_cfi(problem, betas, 3);
    CHECK(one.cfi == three.cfi);
}

TEST_CASE("maximal fragile weight") {
    std::mt19937_64 rng(31);
    const ComplexVector phi = random_unit(rng, 3);
    CHECK(max_fragile_weight(projector(phi), phi) == doctest::Approx(1.0).epsilon(1e-10));
    const ComplexMatrix up = projector(ComplexVector::Unit(2, 0));
    CHECK(max_fragile_weight(up, ComplexVector::Unit(2, 1)) < 1e-12);
    ComplexMatrix rho = ComplexMatrix::Zero(2, 2);
    rho(0, 0) = 0.7;
    rho(1, 1) = 0.3;
    for (double a : {0.0, 0.4, 0.9, 1.4}) {
        ComplexVector v(2);
        v << std::cos(a), std::sin(a);
        CHECK(max_fragile_weight(rho, v) == doctest::Approx(bisect_weight(rho, v)).epsilon(1e-9));
    }
    ComplexVector c(2);
    c << 1.0 / std::sqrt(2.0), Complex(0.0, 1.0 / std::sqrt(2.0));
    CHECK(max_fragile_weight(rho, c) == doctest::Approx(bisect_weight(rho, c)).epsilon(1e-9));
}

TEST_CASE("decomposing a single fragile state recovers it exactly") {
    const Spin j = Spin::from_double(4.0);
    const auto candidates = first_dicke_fragile_candidates(j);
    REQUIRE(candidates.size() == 2 * static_cast<std::size_t>(j.dim() - 2));
    const Povm povm = Povm::computational(j.dim());
    auto dec = fragile_decomposition(projector(candidates[2]), candidates, povm);
    REQUIRE(dec.members.size() == 1);
    CHECK(dec.members[0].candidate == 2);
    CHECK(dec.members[0].weight == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(dec.residual_trace < 1e-8);
    const auto ops = angular_momentum_operators(j);
    CHECK(jensen_bound(dec, ops.jy, povm) ==
          doctest::Approx(cfi_matrix(projector(candidates[2]), ops.jy, povm)).epsilon(1e-6));
}

TEST_CASE("candidates without a vanishing outcome are rejected") {
    const Spin j = Spin::from_double(2.0);
    const std::vector<ComplexVector> bad = {rotation_y(j, 0.4) * dicke_ket(j, 1.0)};
    CHECK_THROWS_AS(check_fragile_candidates(bad, Povm::computational(j.dim())), ValidationError);
}

TEST_CASE("collective Jensen rows bound the CFI and conserve trace") {
    const Spin j = Spin::from_double(4.0);
    const std::vector<double> betas = {0.3, std::acos(0.5), 1.2, std::numbers::pi / 2.0, 2.4};
    for (double gt : {1e-4, 1e-2}) {
        for (const auto& row : collective_jensen_sweep(j, gt, betas)) {
            CHECK(row.fragile_trace + row.residual_trace == doctest::Approx(1.0).epsilon(1e-9));
            CHECK(row.fragile_trace >= 0.0);
            CHECK(row.jensen_bound >= row.cfi - 1e-8 * (1.0 + row.cfi));
        }
    }
}

TEST_CASE("minimizing condition residual") {
    const std::vector<double> p = {0.2, 0.8}, dp = {0.1, -0.1};
    CHECK(minimizing_condition_residual(p, dp, p, dp) < 1e-16);
    CHECK(minimizing_condition_residual(p, dp, {0.4, 1.6}, {0.2, -0.2}) == doctest::Approx(0.0));
    CHECK(minimizing_condition_residual(p, dp, {0.5, 0.5}, {0.0, 0.0}) == doctest::Approx(0.05));
    CHECK_THROWS_AS(minimizing_condition_residual(p, dp, {1.0}, {0.0}), ValidationError);
}

TEST_CASE("approximate loss") {
    const std::vector<double> p = {0.0, 1e-6, 0.5};
    const std::vector<double> sigma = {0.5, 0.5, -1.0};
    const std::vector<double> jumps = {3.0, 2.0, 0.0};
    CHECK(approximate_loss(p, sigma, 0.0, jumps) == 0.0);
    CHECK(approximate_loss(p, sigma, 1e-3, jumps) == doctest::Approx(3.0 + 2.0 / (1e-6 / 5e-4 + 1.0)));
    CHECK_THROWS_AS(approximate_loss(p, {0.5, 0.5, 0.0}, 1e-3, jumps), ValidationError);
    CHECK_THROWS_AS(approximate_loss(p, sigma, -1.0, jumps), ValidationError);
}

TEST_CASE("approximate loss tracks the exact loss at small noise") {
    const auto check = approximate_loss_check(Spin::from_double(4.0), 1.0, 1e-5);
    CHECK(check.before > check.after);
    CHECK(check.approx_loss == doctest::Approx(check.exact_loss).epsilon(0.05));
}

TEST_CASE("Loschmidt echo POVM") {
    const Spin j = Spin::from_double(3.0);
    const auto ops = angular_momentum_operators(j);
    const ComplexVector psi = dicke_ket(j, 2.0);
    const auto echo = loschmidt_echo_povm(psi, ops.jy, 0.3);
    REQUIRE(echo.povm.size() == 3);
    CHECK_FALSE(echo.degenerate);
    ComplexMatrix sum = ComplexMatrix::Zero(j.dim(), j.dim());
    for (const auto& e : echo.povm.elements()) {
        sum += e;
    }
    CHECK((sum - ComplexMatrix::Identity(j.dim(), j.dim())).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(psi.dot(echo.perp)) < 1e-12);
    const ComplexVector moved = matrix_exponential(-kI * 0.3 * ops.jy) * psi;
    CHECK(std::norm(moved.dot(psi)) + std::norm(moved.dot(echo.perp)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(loschmidt_echo_povm(psi, ops.jz, 0.3).degenerate);
}

TEST_CASE("echo measurement is fragile at zero phase") {
    const Spin j = Spin::from_double(3.0);
    const auto rows = echo_demo(j, 0.4, {0.0, 0.01}, {0.0, 1e-4, 0.4});
    REQUIRE(rows.size() == 6);
    const double q = rows[0].qfi;
    CHECK(q == doctest::Approx(16.0).epsilon(1e-10));
    CHECK(rows[0].cfi < 0.99 * q);
    CHECK(rows[1].cfi == doctest::Approx(q).epsilon(1e-3));
    CHECK(rows[4].cfi < 0.5 * rows[4].qfi);
}

TEST_CASE("sphere scan is independent of the azimuth") {
    const Spin j = Spin::from_double(4.0);
    const std::vector<double> thetas = {0.4, std::acos(0.25), 1.9};
    const std::vector<double> phis = {0.0, 0.7, 2.3, 5.0};
    for (auto probe : {SphereProbe::first_dicke, SphereProbe::coherent}) {
        const auto rows = sphere_scan(j, probe, 0.01, thetas, phis);
        REQUIRE(rows.size() == thetas.size() * phis.size());
        for (const auto& r : rows) {
            const auto ref = std::find_if(rows.begin(), rows.end(),
                                          [&](const SphereRow& o) { return o.theta_n == r.theta_n && o.phi_n == 0.0; });
            REQUIRE(ref != rows.end());
            CHECK(std::abs(r.cfi - ref->cfi) < 1e-8 * (1.0 + ref->cfi));
        }
    }
}

TEST_CASE("qubit demo matches its closed form") {
    const auto rows = qubit_demo({0.1, 0.8, 1.5}, {0.0, 0.01, 0.3});
    for (const auto& r : rows) {
        CHECK(r.cfi == doctest::Approx(r.closed_form).epsilon(1e-10));
        CHECK(r.closed_form == doctest::Approx(qubit_closed_form(r.beta, r.p)).epsilon(1e-15));
    }
}

TEST_CASE("block form round-trips the dense state") {
    std::mt19937_64 rng(32);
    const int n = 4;
    const auto basis = build_collective_basis(n);
    const ComplexMatrix w = basis.unitary();
    BlockOperator blocks;
    blocks.n_qubits = n;
    ComplexMatrix dense_in_basis = ComplexMatrix::Zero(16, 16);
    Eigen::Index offset = 0;
    for (const auto& b : basis.blocks) {
        const ComplexMatrix m = random_density(rng, b.j.dim()) / static_cast<double>(basis.blocks.size());
        dense_in_basis.block(offset, offset, b.j.dim(), b.j.dim()) = m;
        offset += b.j.dim();
    }
    const ComplexMatrix rho = w * dense_in_basis * w.adjoint();
    const auto form = to_block_form(rho, basis);
    CHECK(form.trace() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((form.dense() - dense_in_basis).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(to_block_form(projector(random_unit(rng, 16)), basis), NumericalError);
}

TEST_CASE("block-wise local-noise CFI matches the dense calculation") {
    const int n = 4;
    for (double gt : {0.0, 1e-3, 0.05}) {
        const auto setup = local_noise_setup(n, gt);
        const std::vector<double> betas = {0.3, 1.2, 2.2};
        const auto sweep = local_noise_sweep(setup, betas);
        for (std::size_t i = 0; i < betas.size(); ++i) {
            const double dense = dense_local_cfi(n, gt, betas[i]);
            CHECK(std::abs(sweep.cfi[i] - dense) < 1e-8 * (1.0 + dense));
        }
    }
    CHECK(local_noise_setup(n, 0.0).qfi == doctest::Approx(10.0).epsilon(1e-10));
}

TEST_CASE("local Jensen rows bound the CFI and conserve trace") {
    const auto setup = local_noise_setup(6, 1e-3);
    for (const auto& row : local_jensen_sweep(setup, {0.4, std::acos(1.0 / 3.0), 2.0})) {
        CHECK(row.fragile_trace + row.residual_trace == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(row.jensen_bound >= row.cfi - 1e-8 * (1.0 + row.cfi));
    }
}
