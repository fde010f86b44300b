#pragma once

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace qfragile {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

// Input violated a documented precondition.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// A computation produced a result outside its numerical guarantees.
class NumericalError : public std::runtime_error {
public:
    NumericalError(std::string module, std::string operation, const std::string& what)
        : std::runtime_error(module + "/" + operation + ": " + what),
          module_(std::move(module)),
          operation_(std::move(operation)) {}

    const std::string& module() const { return module_; }
    const std::string& operation() const { return operation_; }

private:
    std::string module_;
    std::string operation_;
};

inline constexpr double kHermitianTol = 1e-10;

double max_abs(const ComplexMatrix& a);
double hermitian_defect(const ComplexMatrix& a);
bool is_square(const ComplexMatrix& a);
ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix projector(const ComplexVector& v);
ComplexMatrix hermitian_part(const ComplexMatrix& a);
double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b);

struct EigenDecomposition {
    RealVector eigenvalues;      // ascending
    ComplexMatrix eigenvectors;  // columns
};

EigenDecomposition hermitian_eigendecomposition(const ComplexMatrix& a);

ComplexMatrix matrix_exponential(const ComplexMatrix& a);
ComplexMatrix pade_exponential(const ComplexMatrix& a);

// Hermitian PSD matrix with trace in (0, 1].
class DensityOperator {
public:
    static constexpr double kHermitianTol = 1e-12;
    static constexpr double kEigenTol = 1e-10;

    DensityOperator() = default;
    explicit DensityOperator(ComplexMatrix m);
    static DensityOperator pure(const ComplexVector& psi);
    static DensityOperator maximally_mixed(Eigen::Index dim);

    const ComplexMatrix& matrix() const { return m_; }
    Eigen::Index dim() const { return m_.rows(); }
    double trace() const { return m_.trace().real(); }
    double purity() const;

private:
    ComplexMatrix m_;
};

struct JumpOperator {
    ComplexMatrix op;
    double rate = 1.0;
};

struct LindbladSpec {
    std::vector<JumpOperator> jumps;
    double duration = 0.0;
};

enum class LindbladMethod { automatic, dense_superoperator, fixed_step_rk4 };

inline constexpr Eigen::Index kDenseLindbladCap = 64;
inline constexpr double kRk4Step = 1e-4;

// Applies the generator sum_k rate_k D[L_k] to rho.
ComplexMatrix lindblad_generator_apply(const std::vector<JumpOperator>& jumps, const ComplexMatrix& rho);

// Column-major vec superoperator.
ComplexMatrix lindblad_superoperator(const std::vector<JumpOperator>& jumps, Eigen::Index dim);

ComplexMatrix rk4_propagate(const std::vector<JumpOperator>& jumps, const ComplexMatrix& rho, double duration,
                            double step = kRk4Step);

// Eigenvalues in [-1e-8, 0) are clipped and the trace restored; anything lower throws.
ComplexMatrix clip_positivity(const ComplexMatrix& rho, const char* module, const char* operation);

// Dense propagator for a fixed jump set; construction does the expensive work so it can be shared
// read-only across threads.
class LindbladPropagator {
public:
    LindbladPropagator(std::vector<JumpOperator> jumps, Eigen::Index dim);

    ComplexMatrix apply(const ComplexMatrix& rho, double duration) const;
    Eigen::Index dim() const { return dim_; }
    bool hermitian_route() const { return hermitian_; }

private:
    Eigen::Index dim_;
    bool hermitian_ = false;
    ComplexMatrix super_;
    RealVector evals_;
    ComplexMatrix evecs_;
};

DensityOperator lindblad_propagate(const DensityOperator& rho0, const LindbladSpec& spec,
                                   LindbladMethod method = LindbladMethod::automatic);

}  // namespace qfragile
