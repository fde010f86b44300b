#include "qfragile/fragility.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>

#include "qfragile/parallel.hpp"

namespace qfragile {

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr double kRangeEigenvalue = 1e-13;
constexpr double kRangeTest = 1e-9;
constexpr double kPsdSlack = 1e-10;

double weight_from_eigen(const EigenDecomposition& ed, const ComplexVector& phi) {
    const ComplexVector c = ed.eigenvectors.adjoint() * phi;
    double kernel = 0.0;
    double inv = 0.0;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        const double w = ed.eigenvalues(i);
        const double a = std::norm(c(i));
        if (w > kRangeEigenvalue) {
            inv += a / w;
        } else {
            kernel += a;
        }
    }
    if (std::sqrt(kernel) > kRangeTest || inv == 0.0) {
        return 0.0;
    }
    return std::min(1.0, 1.0 / inv);
}

double min_eigenvalue(const ComplexMatrix& a) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

// Largest q in [0, hi] with rho - q phi phi^dag >= -slack.
double bisect_weight(const ComplexMatrix& rho, const ComplexMatrix& proj, double hi) {
    double lo = 0.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (min_eigenvalue(rho - mid * proj) >= -kPsdSlack) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

double verified_weight(const ComplexMatrix& rho, const ComplexVector& phi, double q) {
    if (q <= 0.0) {
        return 0.0;
    }
    const ComplexMatrix proj = projector(phi);
    if (min_eigenvalue(rho - q * proj) >= -kPsdSlack) {
        return q;
    }
    return bisect_weight(rho, proj, q);
}

// psi with rho = psi psi^dag when rho is rank one and normalized.
std::optional<ComplexVector> pure_state_vector(const ComplexMatrix& rho) {
    if (std::abs(rho.trace().real() - 1.0) > 1e-12) {
        return std::nullopt;
    }
    const auto ed = hermitian_eigendecomposition(hermitian_part(rho));
    const Eigen::Index top = ed.eigenvalues.size() - 1;
    if (ed.eigenvalues(top) < 1.0 - 1e-12) {
        return std::nullopt;
    }
    return ComplexVector(ed.eigenvectors.col(top));
}

// p = |a_k|^2 and dp = 2 Im(conj(a_k) (H psi)_k) in the measured frame.
double amplitude_cfi(const ComplexVector& a, const ComplexVector& b, const Povm& povm) {
    double f = 0.0;
    for (std::size_t e = 0; e < povm.size(); ++e) {
        const RealVector& diag = povm.diagonal(e);
        Eigen::Index k = 0;
        diag.maxCoeff(&k);
        const double p = std::norm(a(k));
        if (p > kPureSupportThreshold) {
            const double dp = 2.0 * std::imag(std::conj(a(k)) * b(k));
            f += dp * dp / p;
        }
    }
    return f;
}

}  // namespace

std::vector<double> uniform_grid(double lo, double hi, int points) {
    if (points < 1 || !(hi >= lo)) {
        throw ValidationError("uniform_grid: need points >= 1 and hi >= lo");
    }
    if (points == 1) {
        return {lo};
    }
    std::vector<double> g(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        g[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    }
    g.back() = hi;
    return g;
}

std::vector<double> densified_grid(double lo, double hi, int points, const std::vector<double>& centers, int densify,
                                   double halfwidth) {
    struct Pt {
        double x;
        bool center;
    };
    std::vector<Pt> all;
    for (double x : uniform_grid(lo, hi, points)) {
        all.push_back({x, false});
    }
    for (double c : centers) {
        if (c < lo || c > hi) {
            continue;
        }
        all.push_back({c, true});
        if (densify > 1 && halfwidth > 0.0) {
            for (int k = 0; k < densify; ++k) {
                const double x = c - halfwidth + 2.0 * halfwidth * k / static_cast<double>(densify - 1);
                if (x >= lo && x <= hi) {
                    all.push_back({x, false});
                }
            }
        }
    }
    std::stable_sort(all.begin(), all.end(), [](const Pt& a, const Pt& b) { return a.x < b.x; });
    std::vector<double> out;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t k = i;
        double keep = all[i].x;
        bool has_center = all[i].center;
        while (k + 1 < all.size() && all[k + 1].x - all[k].x <= 1e-12) {
            ++k;
            if (all[k].center && !has_center) {
                keep = all[k].x;
                has_center = true;
            }
        }
        out.push_back(keep);
        i = k + 1;
    }
    return out;
}

std::vector<double> discontinuity_angles(Spin j) {
    if (j.twice() < 1) {
        throw ValidationError("discontinuity_angles: J must be at least 1/2");
    }
    std::vector<double> b;
    for (int k = 0; k < j.dim(); ++k) {
        b.push_back(std::acos(std::clamp(j.m_at(k) / j.value(), -1.0, 1.0)));
    }
    return b;
}

std::vector<double> default_beta_grid(Spin j, const BetaGridOptions& options) {
    return densified_grid(0.0, std::numbers::pi, options.points, discontinuity_angles(j), options.densify,
                          options.halfwidth);
}

double discontinuity_size(Spin j, double m) {
    const double jv = j.value();
    j.index_of(m);
    auto xlogx = [jv](double n) { return n == 0.0 ? 0.0 : n * std::log(n / (2.0 * jv)); };
    const double lg = std::log(8.0 * jv) + xlogx(jv + m) + xlogx(jv - m) + log_binomial(2.0 * jv, jv - m);
    return std::exp(lg);
}

std::vector<DiscontinuityRecord> locate_discontinuities(Spin j) {
    if (j.twice() < 1) {
        throw ValidationError("locate_discontinuities: J must be at least 1/2");
    }
    const auto ops = angular_momentum_operators(j);
    const YRotation rot(j);
    const ComplexVector psi = dicke_ket(j, j.value() - 1.0);
    std::vector<DiscontinuityRecord> out;
    for (int k = 1; k < j.dim() - 1; ++k) {
        const double m = j.m_at(k);
        const double beta = std::acos(m / j.value());
        const double size = discontinuity_size(j, m);
        const ComplexVector measured = rot(beta).adjoint() * psi;
        const double check = jump_size_pure(measured, ops.jy, {projector(dicke_ket(j, m))});
        if (std::abs(check - size) > 1e-6 * std::max(1.0, size)) {
            throw NumericalError("fragility-analysis", "locate_discontinuities",
                                 "closed-form size disagrees with the matrix-element formula at M = " +
                                     std::to_string(m));
        }
        out.push_back({beta, m, size});
    }
    return out;
}

SweepProblem first_dicke_problem(Spin j, NoiseChannel noise) {
    const auto ops = angular_momentum_operators(j);
    return SweepProblem{DensityOperator::pure(dicke_ket(j, j.value() - 1.0)),
                        std::move(noise),
                        ops.jy,
                        ops.jy,
                        Povm::computational(j.dim()),
                        "first-dicke J=" + std::to_string(j.value())};
}

FisherSweep sweep_cfi_state(const ComplexMatrix& noisy, const ComplexMatrix& generator,
                            const ComplexMatrix& rotation_generator, const Povm& fiducial,
                            const std::vector<double>& betas, int threads) {
    if (noisy.rows() != fiducial.dim() || generator.rows() != fiducial.dim() ||
        rotation_generator.rows() != fiducial.dim()) {
        throw ValidationError("sweep_cfi: dimension mismatch between probe, generators and POVM");
    }
    for (std::size_t i = 1; i < betas.size(); ++i) {
        if (!(betas[i] > betas[i - 1])) {
            throw ValidationError("sweep_cfi: beta grid must be strictly increasing");
        }
    }
    const auto ed = hermitian_eigendecomposition(rotation_generator);
    const bool commuting = max_abs(commutator(generator, rotation_generator)) <= 1e-12;
    FisherSweep sweep;
    sweep.beta = betas;
    sweep.cfi.assign(betas.size(), 0.0);
    sweep.qfi = qfi_matrix(noisy, generator);
    // Rank-one probes measured in a rank-one diagonal basis go through amplitudes, so exact zeros stay at
    // rounding level squared and the pure support threshold can be used.
    const bool amplitude_route = fiducial.is_diagonal() && pure_state_vector(noisy).has_value() &&
                                 std::all_of(fiducial.elements().begin(), fiducial.elements().end(),
                                             [](const ComplexMatrix& e) { return std::abs(e.trace().real() - 1.0) <= 1e-12; });
    const ComplexVector psi = amplitude_route ? *pure_state_vector(noisy) : ComplexVector();
    const ComplexVector hpsi = amplitude_route ? ComplexVector(generator * psi) : ComplexVector();
    parallel_for(betas.size(), threads, [&](std::size_t i) {
        ComplexVector d(ed.eigenvalues.size());
        for (Eigen::Index k = 0; k < d.size(); ++k) {
            d(k) = std::polar(1.0, -betas[i] * ed.eigenvalues(k));
        }
        const ComplexMatrix u = ed.eigenvectors * d.asDiagonal() * ed.eigenvectors.adjoint();
        if (amplitude_route) {
            sweep.cfi[i] = amplitude_cfi(u.adjoint() * psi, u.adjoint() * hpsi, fiducial);
            return;
        }
        const ComplexMatrix rho_b = u.adjoint() * noisy * u;
        const ComplexMatrix h_b = commuting ? generator : ComplexMatrix(u.adjoint() * generator * u);
        sweep.cfi[i] = cfi_matrix(rho_b, h_b, fiducial);
    });
    const double tol = 1e-8 * std::max(1.0, sweep.qfi);
    for (std::size_t i = 0; i < betas.size(); ++i) {
        if (sweep.cfi[i] > sweep.qfi + tol) {
            throw NumericalError("fragility-analysis", "sweep_cfi",
                                 "CFI exceeds QFI at beta = " + std::to_string(betas[i]));
        }
    }
    return sweep;
}

FisherSweep sweep_cfi(const SweepProblem& problem, const std::vector<double>& betas, int threads) {
    const DensityOperator noisy = apply_channel(problem.noise, problem.probe);
    FisherSweep sweep = sweep_cfi_state(noisy.matrix(), problem.generator, problem.rotation_generator,
                                        problem.fiducial, betas, threads);
    sweep.noise = noise_kind(problem.noise);
    sweep.probe = problem.probe_label;
    return sweep;
}

double max_fragile_weight(const ComplexMatrix& rho, const ComplexVector& phi) {
    if (phi.size() != rho.rows()) {
        throw ValidationError("max_fragile_weight: dimension mismatch");
    }
    const ComplexMatrix h = hermitian_part(rho);
    const auto ed = hermitian_eigendecomposition(h);
    return verified_weight(h, phi, weight_from_eigen(ed, phi));
}

void check_fragile_candidates(const std::vector<ComplexVector>& candidates, const Povm& povm) {
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        if (c.size() != povm.dim() || std::abs(c.norm() - 1.0) > 1e-8) {
            throw ValidationError("fragile_decomposition: candidate " + std::to_string(i) +
                                  " is not a unit vector of the right dimension");
        }
        bool fragile = false;
        for (const auto& e : povm.elements()) {
            if (c.dot(e * c).real() <= 1e-8) {
                fragile = true;
                break;
            }
        }
        if (!fragile) {
            throw ValidationError("fragile_decomposition: candidate " + std::to_string(i) +
                                  " has no vanishing outcome");
        }
    }
}

FragileDecomposition greedy_extract(const ComplexMatrix& rho, const std::vector<ComplexVector>& candidates) {
    FragileDecomposition out;
    ComplexMatrix residual = hermitian_part(rho);
    const std::size_t cap = 4 * candidates.size() + 16;
    for (std::size_t iter = 0; iter < cap && !candidates.empty(); ++iter) {
        const auto ed = hermitian_eigendecomposition(hermitian_part(residual));
        std::size_t best = 0;
        double best_w = -1.0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            const double w = weight_from_eigen(ed, candidates[i]);
            if (w > best_w) {
                best_w = w;
                best = i;
            }
        }
        if (best_w < kGreedyStopWeight) {
            break;
        }
        const double q = verified_weight(residual, candidates[best], best_w);
        if (q < kGreedyStopWeight) {
            break;
        }
        residual -= q * projector(candidates[best]);
        residual = hermitian_part(residual);
        out.members.push_back({candidates[best], q, best});
    }
    const double lo = residual.rows() > 0 ? min_eigenvalue(residual) : 0.0;
    if (lo < -1e-9) {
        throw NumericalError("fragility-analysis", "fragile_decomposition",
                             "residual has eigenvalue " + std::to_string(lo));
    }
    out.residual = residual;
    out.fragile_trace = 0.0;
    for (const auto& m : out.members) {
        out.fragile_trace += m.weight;
    }
    out.residual_trace = residual.trace().real();
    return out;
}

FragileDecomposition fragile_decomposition(const ComplexMatrix& rho, const std::vector<ComplexVector>& candidates,
                                           const Povm& povm) {
    if (rho.rows() != povm.dim()) {
        throw ValidationError("fragile_decomposition: state and POVM dimensions differ");
    }
    check_fragile_candidates(candidates, povm);
    return greedy_extract(rho, candidates);
}

double jensen_bound(FragileDecomposition& decomposition, const ComplexMatrix& h, const Povm& povm) {
    double total = 0.0;
    for (const auto& m : decomposition.members) {
        total += m.weight * cfi_matrix(projector(m.state), h, povm);
    }
    total += cfi_matrix(decomposition.residual, h, povm);
    decomposition.jensen_bound = total;
    return total;
}

double minimizing_condition_residual(const std::vector<double>& p, const std::vector<double>& dp,
                                     const std::vector<double>& g, const std::vector<double>& dg) {
    if (p.size() != g.size() || dp.size() != p.size() || dg.size() != g.size()) {
        throw ValidationError("minimizing_condition_residual: models have different outcome sets");
    }
    double r = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        r = std::max(r, std::abs(g[i] * dp[i] - p[i] * dg[i]));
    }
    return r;
}

double minimizing_condition_residual(const OutcomeModel& p, const OutcomeModel& g, double theta) {
    if (p.size() != g.size()) {
        throw ValidationError("minimizing_condition_residual: models have different outcome sets");
    }
    return minimizing_condition_residual(p.probabilities(theta), p.derivatives(theta), g.probabilities(theta),
                                         g.derivatives(theta));
}

double approximate_loss(const std::vector<double>& p, const std::vector<double>& sigma, double gamma_dt,
                        const std::vector<double>& jumps) {
    if (p.size() != sigma.size() || p.size() != jumps.size()) {
        throw ValidationError("approximate_loss: inputs have different lengths");
    }
    if (!(gamma_dt >= 0.0)) {
        throw ValidationError("approximate_loss: gamma_dt must be nonnegative");
    }
    const double s = std::accumulate(sigma.begin(), sigma.end(), 0.0);
    if (std::abs(s) > 1e-10) {
        throw ValidationError("approximate_loss: noise direction does not sum to zero (" + std::to_string(s) + ")");
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double rate = gamma_dt * sigma[i];
        if (rate == 0.0 || jumps[i] == 0.0) {
            continue;
        }
        loss += jumps[i] / (p[i] / rate + 1.0);
    }
    return loss;
}

LoschmidtPovm loschmidt_echo_povm(const ComplexVector& psi, const ComplexMatrix& h, double theta) {
    const Eigen::Index d = psi.size();
    if (h.rows() != d || std::abs(psi.norm() - 1.0) > 1e-10) {
        throw ValidationError("loschmidt_echo_povm: psi must be a unit vector matching the generator");
    }
    const ComplexMatrix pp = projector(psi);
    const ComplexMatrix id = ComplexMatrix::Identity(d, d);
    ComplexVector r = matrix_exponential(-kI * theta * h) * psi;
    r -= psi.dot(r) * psi;
    if (r.norm() < 1e-8) {
        // theta -> 0 limit of the orthogonal component
        const ComplexVector hp = h * psi;
        r = -kI * (hp - psi.dot(hp) * psi);
    }
    const double nrm = r.norm();
    if (nrm < 1e-12) {
        return LoschmidtPovm{Povm({pp, id - pp}), ComplexVector::Zero(d), true};
    }
    const ComplexVector perp = r / nrm;
    const ComplexMatrix pq = projector(perp);
    return LoschmidtPovm{Povm({pp, pq, id - pp - pq}), perp, false};
}

}  // namespace qfragile
