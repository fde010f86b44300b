#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "qfragile/linalg.hpp"

namespace qfragile {

inline constexpr double kSupportThreshold = 1e-12;
inline constexpr double kJumpStep = 1e-4;

struct OutcomeModel {
    std::vector<double> labels;
    std::function<std::vector<double>(double)> probabilities;
    std::function<std::vector<double>(double)> derivatives;
    std::function<std::vector<double>(double)> second_derivatives;  // may be empty
    double support_threshold = kSupportThreshold;

    std::size_t size() const { return labels.size(); }
};

// Sum of (dp)^2 / p over outcomes with p > threshold; no normalization checks.
double fisher_sum(const std::vector<double>& p, const std::vector<double>& dp,
                  double threshold = kSupportThreshold);

double cfi_distribution(const OutcomeModel& model, double theta);

class Povm {
public:
    explicit Povm(std::vector<ComplexMatrix> elements);
    static Povm projective(const ComplexMatrix& basis_columns);
    static Povm computational(Eigen::Index dim);

    const std::vector<ComplexMatrix>& elements() const { return elements_; }
    const ComplexMatrix& operator[](std::size_t i) const { return elements_[i]; }
    std::size_t size() const { return elements_.size(); }
    Eigen::Index dim() const { return elements_.front().rows(); }

    bool is_diagonal() const { return diagonal_; }
    // Diagonal of element i; only meaningful when is_diagonal().
    const RealVector& diagonal(std::size_t i) const { return diagonals_[i]; }

private:
    std::vector<ComplexMatrix> elements_;
    bool diagonal_ = false;
    std::vector<RealVector> diagonals_;
};

struct EncodedModel {
    EncodedModel(DensityOperator probe, ComplexMatrix generator, double theta = 0.0);

    DensityOperator probe;
    ComplexMatrix generator;
    double theta = 0.0;

    // e^{-i theta H} rho e^{i theta H}
    ComplexMatrix encoded_state() const;
};

struct OutcomeData {
    std::vector<double> p;
    std::vector<double> dp;
    std::vector<double> d2p;  // filled only on request
};

// Probabilities and analytic theta-derivatives of Tr(E rho_theta) with d/dtheta rho = -i[H, rho].
// rho may be unnormalized.
OutcomeData outcome_data(const ComplexMatrix& rho, const ComplexMatrix& h, const Povm& povm,
                         bool second_derivative = false);

// CFI of an arbitrary PSD matrix (degree-1 homogeneous in rho).
double cfi_matrix(const ComplexMatrix& rho, const ComplexMatrix& h, const Povm& povm,
                  double threshold = kSupportThreshold);

double cfi_state_povm(const EncodedModel& em, const Povm& povm);

OutcomeModel induced_model(const EncodedModel& em, const Povm& povm);

double qfi_matrix(const ComplexMatrix& rho, const ComplexMatrix& h);
double qfi(const EncodedModel& em);

// Infinite-discontinuity condition: first derivative nonzero where p vanishes.
class InfiniteDiscontinuity : public ValidationError {
public:
    using ValidationError::ValidationError;
};

double jump_size_distribution(const OutcomeModel& model, double theta, std::size_t outcome);
double jump_size_pure(const ComplexVector& psi, const ComplexMatrix& h, const std::vector<ComplexMatrix>& elements);
double jump_size_mixed(const ComplexMatrix& rho, const ComplexMatrix& h, const std::vector<ComplexMatrix>& elements);

struct SignalBound {
    double value = 0.0;
    bool degenerate = false;
};

SignalBound signal_lower_bound(const OutcomeModel& model, double theta);

double snr_contribution(double p, double dp, double epsilon, double sigma, double jump);
// The exact term (1-eps)^2 dp^2 / ((1-eps) p + eps sigma) that snr_contribution approximates.
double snr_exact_term(double p, double dp, double epsilon, double sigma);

}  // namespace qfragile
