#include "qfragile/fisher.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace qfragile {

namespace {

constexpr Complex kI{0.0, 1.0};

// Tr(A B)
Complex trace_product(const ComplexMatrix& a, const ComplexMatrix& b) {
    return (a.transpose().cwiseProduct(b)).sum();
}

void check_distribution(const std::vector<double>& p, const char* op) {
    double sum = 0.0;
    for (double v : p) {
        if (!std::isfinite(v) || v < -1e-12) {
            throw ValidationError(std::string(op) + ": probability " + std::to_string(v) + " is negative or not finite");
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-10) {
        throw ValidationError(std::string(op) + ": probabilities sum to " + std::to_string(sum));
    }
}

ComplexMatrix unitary_from_eigen(const EigenDecomposition& ed, double theta) {
    ComplexVector d(ed.eigenvalues.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        d(i) = std::polar(1.0, -theta * ed.eigenvalues(i));
    }
    return ed.eigenvectors * d.asDiagonal() * ed.eigenvectors.adjoint();
}

}  // namespace

double fisher_sum(const std::vector<double>& p, const std::vector<double>& dp, double threshold) {
    double f = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > threshold) {
            f += dp[i] * dp[i] / p[i];
        }
    }
    return f;
}

double cfi_distribution(const OutcomeModel& model, double theta) {
    const auto p = model.probabilities(theta);
    const auto dp = model.derivatives(theta);
    if (p.size() != model.size() || dp.size() != model.size()) {
        throw ValidationError("cfi_distribution: model returned the wrong number of outcomes");
    }
    check_distribution(p, "cfi_distribution");
    return fisher_sum(p, dp, model.support_threshold);
}

Povm::Povm(std::vector<ComplexMatrix> elements) : elements_(std::move(elements)) {
    if (elements_.empty()) {
        throw ValidationError("Povm: no elements");
    }
    const Eigen::Index d = elements_.front().rows();
    ComplexMatrix total = ComplexMatrix::Zero(d, d);
    diagonal_ = true;
    for (std::size_t i = 0; i < elements_.size(); ++i) {
        auto& e = elements_[i];
        if (e.rows() != d || e.cols() != d) {
            throw ValidationError("Povm: element " + std::to_string(i) + " has inconsistent dimension");
        }
        if (hermitian_defect(e) > kHermitianTol) {
            throw ValidationError("Povm: element " + std::to_string(i) + " is not Hermitian");
        }
        e = hermitian_part(e);
        ComplexMatrix off = e;
        off.diagonal().setZero();
        const bool diag = max_abs(off) <= 1e-15;
        diagonal_ = diagonal_ && diag;
        const double lo = diag ? e.diagonal().real().minCoeff()
                               : Eigen::SelfAdjointEigenSolver<ComplexMatrix>(e, Eigen::EigenvaluesOnly)
                                     .eigenvalues()
                                     .minCoeff();
        if (lo < -1e-10) {
            throw ValidationError("Povm: element " + std::to_string(i) + " has negative eigenvalue " +
                                  std::to_string(lo));
        }
        total += e;
    }
    const double defect = max_abs(total - ComplexMatrix::Identity(d, d));
    if (defect > 1e-9) {
        throw ValidationError("Povm: elements sum to identity only within " + std::to_string(defect));
    }
    if (diagonal_) {
        for (const auto& e : elements_) {
            diagonals_.push_back(e.diagonal().real());
        }
    }
}

Povm Povm::projective(const ComplexMatrix& basis_columns) {
    std::vector<ComplexMatrix> el;
    el.reserve(static_cast<std::size_t>(basis_columns.cols()));
    for (Eigen::Index c = 0; c < basis_columns.cols(); ++c) {
        el.push_back(projector(basis_columns.col(c)));
    }
    return Povm(std::move(el));
}

Povm Povm::computational(Eigen::Index dim) { return projective(ComplexMatrix::Identity(dim, dim)); }

EncodedModel::EncodedModel(DensityOperator probe_, ComplexMatrix generator_, double theta_)
    : probe(std::move(probe_)), generator(std::move(generator_)), theta(theta_) {
    if (generator.rows() != probe.dim() || generator.cols() != probe.dim()) {
        throw ValidationError("EncodedModel: generator dimension does not match probe");
    }
    const double defect = hermitian_defect(generator);
    if (defect > kHermitianTol) {
        throw ValidationError("EncodedModel: generator not Hermitian (asymmetry " + std::to_string(defect) + ")");
    }
}

ComplexMatrix EncodedModel::encoded_state() const {
    if (theta == 0.0) {
        return probe.matrix();
    }
    const ComplexMatrix u = matrix_exponential(-kI * theta * generator);
    return u * probe.matrix() * u.adjoint();
}

OutcomeData outcome_data(const ComplexMatrix& rho, const ComplexMatrix& h, const Povm& povm, bool second_derivative) {
    if (rho.rows() != povm.dim() || h.rows() != povm.dim()) {
        throw ValidationError("outcome_data: dimension mismatch between state, generator and POVM");
    }
    OutcomeData out;
    const std::size_t n = povm.size();
    out.p.resize(n);
    out.dp.resize(n);
    if (povm.is_diagonal()) {
        const Eigen::Index d = rho.rows();
        RealVector diag_rho = rho.diagonal().real();
        RealVector diag_c(d);  // -i [H, rho]_kk = 2 Im((H rho)_kk)
        for (Eigen::Index k = 0; k < d; ++k) {
            diag_c(k) = 2.0 * h.row(k).transpose().cwiseProduct(rho.col(k)).sum().imag();
        }
        for (std::size_t i = 0; i < n; ++i) {
            out.p[i] = povm.diagonal(i).dot(diag_rho);
            out.dp[i] = povm.diagonal(i).dot(diag_c);
        }
        if (second_derivative) {
            const ComplexMatrix c = commutator(h, rho);
            const RealVector dd = commutator(h, c).diagonal().real();
            out.d2p.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                out.d2p[i] = -povm.diagonal(i).dot(dd);
            }
        }
        return out;
    }
    const ComplexMatrix c = commutator(h, rho);
    ComplexMatrix cc;
    if (second_derivative) {
        cc = commutator(h, c);
        out.d2p.resize(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
        out.p[i] = trace_product(povm[i], rho).real();
        out.dp[i] = (-kI * trace_product(povm[i], c)).real();
        if (second_derivative) {
            out.d2p[i] = -trace_product(povm[i], cc).real();
        }
    }
    return out;
}

double cfi_matrix(const ComplexMatrix& rho, const ComplexMatrix& h, const Povm& povm, double threshold) {
    const auto data = outcome_data(rho, h, povm);
    return fisher_sum(data.p, data.dp, threshold);
}

double cfi_state_povm(const EncodedModel& em, const Povm& povm) {
    if (povm.dim() != em.probe.dim()) {
        throw ValidationError("cfi_state_povm: POVM dimension does not match probe");
    }
    return cfi_matrix(em.encoded_state(), em.generator, povm);
}

OutcomeModel induced_model(const EncodedModel& em, const Povm& povm) {
    if (povm.dim() != em.probe.dim()) {
        throw ValidationError("induced_model: POVM dimension does not match probe");
    }
    auto ed = std::make_shared<const EigenDecomposition>(hermitian_eigendecomposition(em.generator));
    auto rho = std::make_shared<const ComplexMatrix>(em.probe.matrix());
    auto h = std::make_shared<const ComplexMatrix>(em.generator);
    auto pv = std::make_shared<const Povm>(povm);
    auto at = [ed, rho, h, pv](double theta, bool second) {
        const ComplexMatrix u = unitary_from_eigen(*ed, theta);
        return outcome_data(u * (*rho) * u.adjoint(), *h, *pv, second);
    };
    OutcomeModel m;
    m.labels.resize(povm.size());
    std::iota(m.labels.begin(), m.labels.end(), 0.0);
    m.probabilities = [at](double t) { return at(t, false).p; };
    m.derivatives = [at](double t) { return at(t, false).dp; };
    m.second_derivatives = [at](double t) { return at(t, true).d2p; };
    return m;
}

double qfi_matrix(const ComplexMatrix& rho, const ComplexMatrix& h) {
    if (rho.rows() != h.rows()) {
        throw ValidationError("qfi: dimension mismatch");
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(rho));
    const RealVector& w = es.eigenvalues();
    const ComplexMatrix hb = es.eigenvectors().adjoint() * h * es.eigenvectors();
    // SLD in the eigenbasis: L_ij = 2 <i|d rho|j> / (w_i + w_j), <i|d rho|j> = -i (w_j - w_i) H_ij
    double f = 0.0;
    const Eigen::Index d = w.size();
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            const double s = w(i) + w(j);
            if (s < 1e-10) {
                continue;
            }
            const double diff = w(i) - w(j);
            f += 2.0 * diff * diff / s * std::norm(hb(i, j));
        }
    }
    return f;
}

double qfi(const EncodedModel& em) { return qfi_matrix(em.probe.matrix(), em.generator); }

double jump_size_distribution(const OutcomeModel& model, double theta, std::size_t outcome) {
    if (outcome >= model.size()) {
        throw ValidationError("jump_size_distribution: outcome index out of range");
    }
    const double tau = model.support_threshold;
    const double p = model.probabilities(theta)[outcome];
    if (p > tau) {
        throw ValidationError("jump_size_distribution: outcome probability " + std::to_string(p) +
                              " is not below the support threshold");
    }
    const double dp = model.derivatives(theta)[outcome];
    if (std::abs(dp) > tau) {
        throw InfiniteDiscontinuity("jump_size_distribution: derivative " + std::to_string(dp) +
                                    " nonzero at a vanishing outcome (infinite discontinuity)");
    }
    double d2;
    if (model.second_derivatives) {
        d2 = model.second_derivatives(theta)[outcome];
    } else {
        const double h = kJumpStep;
        d2 = (model.probabilities(theta + h)[outcome] - 2.0 * p + model.probabilities(theta - h)[outcome]) / (h * h);
    }
    return 2.0 * d2;
}

double jump_size_pure(const ComplexVector& psi, const ComplexMatrix& h, const std::vector<ComplexMatrix>& elements) {
    const ComplexVector hpsi = h * psi;
    double total = 0.0;
    for (const auto& e : elements) {
        const double p = psi.dot(e * psi).real();
        if (p > kSupportThreshold) {
            throw ValidationError("jump_size_pure: element has probability " + std::to_string(p));
        }
        total += 4.0 * hpsi.dot(e * hpsi).real();
    }
    return total;
}

double jump_size_mixed(const ComplexMatrix& rho, const ComplexMatrix& h, const std::vector<ComplexMatrix>& elements) {
    const ComplexMatrix cc = commutator(h, commutator(h, rho));
    double total = 0.0;
    for (const auto& e : elements) {
        const double p = trace_product(e, rho).real();
        if (p > kSupportThreshold) {
            throw ValidationError("jump_size_mixed: element has probability " + std::to_string(p));
        }
        total += -2.0 * trace_product(e, cc).real();
    }
    return total;
}

SignalBound signal_lower_bound(const OutcomeModel& model, double theta) {
    const auto p = model.probabilities(theta);
    const auto dp = model.derivatives(theta);
    check_distribution(p, "signal_lower_bound");
    double mean = 0.0, second = 0.0, dmean = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double l = model.labels[i];
        mean += l * p[i];
        second += l * l * p[i];
        dmean += l * dp[i];
    }
    const double var = second - mean * mean;
    if (var <= 1e-14) {
        return {0.0, true};
    }
    return {dmean * dmean / var, false};
}

double snr_contribution(double p, double /*dp*/, double epsilon, double sigma, double jump) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw ValidationError("snr_contribution: epsilon must lie in (0, 1)");
    }
    if (!(sigma > 0.0)) {
        throw ValidationError("snr_contribution: sigma must be positive");
    }
    return (1.0 - epsilon) * jump * ((1.0 - epsilon) * p) / (epsilon * sigma);
}

double snr_exact_term(double p, double dp, double epsilon, double sigma) {
    const double a = 1.0 - epsilon;
    return a * a * dp * dp / (a * p + epsilon * sigma);
}

}  // namespace qfragile
