#include "qfragile/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qfragile {

namespace {

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

double one_norm(const ComplexMatrix& a) { return a.cwiseAbs().colwise().sum().maxCoeff(); }

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
}

}  // namespace

double max_abs(const ComplexMatrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

double hermitian_defect(const ComplexMatrix& a) { return max_abs(a - a.adjoint()); }

bool is_square(const ComplexMatrix& a) { return a.rows() == a.cols() && a.rows() > 0; }

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) { return a * b - b * a; }

ComplexMatrix projector(const ComplexVector& v) { return v * v.adjoint(); }

ComplexMatrix hermitian_part(const ComplexMatrix& a) { return 0.5 * (a + a.adjoint()); }

double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ValidationError("trace_distance: dimension mismatch");
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(a - b), Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

EigenDecomposition hermitian_eigendecomposition(const ComplexMatrix& a) {
    if (!is_square(a)) {
        throw ValidationError("hermitian_eigendecomposition: matrix is not square");
    }
    const double defect = hermitian_defect(a);
    if (defect > kHermitianTol) {
        throw ValidationError("hermitian_eigendecomposition: max asymmetry " + fmt(defect) + " exceeds 1e-10");
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(a));
    if (es.info() != Eigen::Success) {
        throw NumericalError("core-linalg", "hermitian_eigendecomposition", "eigensolver did not converge");
    }
    return {es.eigenvalues(), es.eigenvectors()};
}

ComplexMatrix pade_exponential(const ComplexMatrix& a) {
    static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                   1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                   670442572800.0,      33522128640.0,       1323241920.0,
                                   40840800.0,          960960.0,            16380.0,
                                   182.0,               1.0};
    static constexpr double theta13 = 5.371920351148152;

    const Eigen::Index n = a.rows();
    const double norm = one_norm(a);
    int s = 0;
    if (norm > theta13) {
        s = static_cast<int>(std::ceil(std::log2(norm / theta13)));
    }
    const ComplexMatrix x = a / std::ldexp(1.0, s);
    const ComplexMatrix id = ComplexMatrix::Identity(n, n);
    const ComplexMatrix x2 = x * x;
    const ComplexMatrix x4 = x2 * x2;
    const ComplexMatrix x6 = x4 * x2;

    const ComplexMatrix u_inner = x6 * (b[13] * x6 + b[11] * x4 + b[9] * x2) + b[7] * x6 + b[5] * x4 +
                                  b[3] * x2 + b[1] * id;
    const ComplexMatrix u = x * u_inner;
    const ComplexMatrix v = x6 * (b[12] * x6 + b[10] * x4 + b[8] * x2) + b[6] * x6 + b[4] * x4 +
                            b[2] * x2 + b[0] * id;

    ComplexMatrix r = (v - u).partialPivLu().solve(v + u);
    for (int k = 0; k < s; ++k) {
        r = r * r;
    }
    return r;
}

ComplexMatrix matrix_exponential(const ComplexMatrix& a) {
    if (!is_square(a)) {
        throw ValidationError("matrix_exponential: matrix is not square");
    }
    const Eigen::Index n = a.rows();
    if (max_abs(a) == 0.0) {
        return ComplexMatrix::Identity(n, n);
    }
    const double scale = std::max(1.0, max_abs(a));
    if (hermitian_defect(a) <= 1e-13 * scale) {
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(a));
        const ComplexVector d = es.eigenvalues().array().exp().cast<Complex>();
        return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
    }
    if (max_abs(a + a.adjoint()) <= 1e-13 * scale) {
        // a = -iK with K Hermitian
        const ComplexMatrix k = hermitian_part(Complex(0.0, 1.0) * a);
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(k);
        ComplexVector d(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            d(i) = std::polar(1.0, -es.eigenvalues()(i));
        }
        return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
    }
    return pade_exponential(a);
}

DensityOperator::DensityOperator(ComplexMatrix m) {
    if (!is_square(m)) {
        throw ValidationError("DensityOperator: matrix is not square");
    }
    if (!m.allFinite()) {
        throw ValidationError("DensityOperator: non-finite entries");
    }
    const double defect = hermitian_defect(m);
    if (defect > kHermitianTol) {
        throw ValidationError("DensityOperator: not Hermitian (max asymmetry " + fmt(defect) + ")");
    }
    m = hermitian_part(m);
    const double tr = m.trace().real();
    if (!(tr > 0.0) || tr > 1.0 + 1e-12) {
        throw ValidationError("DensityOperator: trace " + fmt(tr) + " outside (0, 1]");
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    if (lo < -kEigenTol) {
        throw ValidationError("DensityOperator: negative eigenvalue " + fmt(lo));
    }
    m_ = std::move(m);
}

DensityOperator DensityOperator::pure(const ComplexVector& psi) {
    const double nrm = psi.norm();
    if (std::abs(nrm - 1.0) > 1e-10) {
        throw ValidationError("DensityOperator::pure: vector norm " + fmt(nrm) + " is not 1");
    }
    return DensityOperator(projector(psi));
}

DensityOperator DensityOperator::maximally_mixed(Eigen::Index dim) {
    if (dim < 1) {
        throw ValidationError("DensityOperator::maximally_mixed: dimension must be positive");
    }
    return DensityOperator(ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim));
}

double DensityOperator::purity() const { return (m_ * m_).trace().real(); }

ComplexMatrix lindblad_generator_apply(const std::vector<JumpOperator>& jumps, const ComplexMatrix& rho) {
    ComplexMatrix out = ComplexMatrix::Zero(rho.rows(), rho.cols());
    for (const auto& j : jumps) {
        if (j.rate == 0.0) {
            continue;
        }
        const ComplexMatrix ldl = j.op.adjoint() * j.op;
        out += j.rate * (j.op * rho * j.op.adjoint() - 0.5 * (ldl * rho + rho * ldl));
    }
    return out;
}

ComplexMatrix lindblad_superoperator(const std::vector<JumpOperator>& jumps, Eigen::Index dim) {
    const Eigen::Index d2 = dim * dim;
    ComplexMatrix s = ComplexMatrix::Zero(d2, d2);
    const ComplexMatrix id = ComplexMatrix::Identity(dim, dim);
    for (const auto& j : jumps) {
        if (j.rate == 0.0) {
            continue;
        }
        const ComplexMatrix ldl = j.op.adjoint() * j.op;
        s += j.rate * (kron(j.op.conjugate(), j.op) - 0.5 * kron(id, ldl) - 0.5 * kron(ldl.transpose(), id));
    }
    return s;
}

ComplexMatrix rk4_propagate(const std::vector<JumpOperator>& jumps, const ComplexMatrix& rho, double duration,
                            double step) {
    if (duration == 0.0) {
        return rho;
    }
    if (!(step > 0.0)) {
        throw ValidationError("rk4_propagate: step must be positive");
    }
    const auto n = static_cast<long>(std::max(1.0, std::ceil(duration / step - 1e-9)));
    const double h = duration / static_cast<double>(n);
    ComplexMatrix r = rho;
    for (long k = 0; k < n; ++k) {
        const ComplexMatrix k1 = lindblad_generator_apply(jumps, r);
        const ComplexMatrix k2 = lindblad_generator_apply(jumps, r + 0.5 * h * k1);
        const ComplexMatrix k3 = lindblad_generator_apply(jumps, r + 0.5 * h * k2);
        const ComplexMatrix k4 = lindblad_generator_apply(jumps, r + h * k3);
        r += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return r;
}

ComplexMatrix clip_positivity(const ComplexMatrix& rho, const char* module, const char* operation) {
    const ComplexMatrix h = hermitian_part(rho);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
    const double lo = es.eigenvalues().minCoeff();
    if (lo >= 0.0) {
        return h;
    }
    if (lo < -1e-8) {
        throw NumericalError(module, operation, "eigenvalue " + fmt(lo) + " below positivity tolerance -1e-8");
    }
    const double tr = h.trace().real();
    RealVector w = es.eigenvalues().cwiseMax(0.0);
    const double s = w.sum();
    if (s > 0.0) {
        w *= tr / s;
    }
    return es.eigenvectors() * w.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

LindbladPropagator::LindbladPropagator(std::vector<JumpOperator> jumps, Eigen::Index dim) : dim_(dim) {
    if (dim < 1 || dim > kDenseLindbladCap) {
        throw ValidationError("LindbladPropagator: dense superoperator requires 1 <= dim <= 64, got " +
                              std::to_string(dim));
    }
    for (const auto& j : jumps) {
        if (j.op.rows() != dim || j.op.cols() != dim) {
            throw ValidationError("LindbladPropagator: jump operator dimension mismatch");
        }
        if (j.rate < 0.0) {
            throw ValidationError("LindbladPropagator: negative rate");
        }
    }
    super_ = lindblad_superoperator(jumps, dim);
    hermitian_ = hermitian_defect(super_) <= 1e-12 * std::max(1.0, max_abs(super_));
    if (hermitian_) {
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(super_));
        if (es.info() != Eigen::Success) {
            throw NumericalError("core-linalg", "lindblad_propagate", "superoperator eigensolver failed");
        }
        evals_ = es.eigenvalues();
        evecs_ = es.eigenvectors();
    }
}

ComplexMatrix LindbladPropagator::apply(const ComplexMatrix& rho, double duration) const {
    if (rho.rows() != dim_ || rho.cols() != dim_) {
        throw ValidationError("LindbladPropagator::apply: dimension mismatch");
    }
    if (duration < 0.0) {
        throw ValidationError("LindbladPropagator::apply: negative duration");
    }
    if (duration == 0.0) {
        return rho;
    }
    const Eigen::Map<const ComplexVector> v(rho.data(), dim_ * dim_);
    ComplexVector out;
    if (hermitian_) {
        ComplexVector c = evecs_.adjoint() * v;
        for (Eigen::Index i = 0; i < c.size(); ++i) {
            c(i) *= std::exp(evals_(i) * duration);
        }
        out = evecs_ * c;
    } else {
        out = pade_exponential(super_ * duration) * v;
    }
    const ComplexMatrix r = Eigen::Map<const ComplexMatrix>(out.data(), dim_, dim_);
    return clip_positivity(r, "core-linalg", "lindblad_propagate");
}

DensityOperator lindblad_propagate(const DensityOperator& rho0, const LindbladSpec& spec, LindbladMethod method) {
    const Eigen::Index dim = rho0.dim();
    for (const auto& j : spec.jumps) {
        if (j.op.rows() != dim || j.op.cols() != dim) {
            throw ValidationError("lindblad_propagate: jump operator dimension mismatch");
        }
        if (j.rate < 0.0) {
            throw ValidationError("lindblad_propagate: negative rate");
        }
    }
    if (spec.duration < 0.0) {
        throw ValidationError("lindblad_propagate: negative duration");
    }
    if (spec.duration == 0.0) {
        return rho0;
    }
    if (method == LindbladMethod::automatic) {
        method = dim <= kDenseLindbladCap ? LindbladMethod::dense_superoperator : LindbladMethod::fixed_step_rk4;
    }
    if (method == LindbladMethod::dense_superoperator) {
        if (dim > kDenseLindbladCap) {
            throw ValidationError("lindblad_propagate: dense superoperator requested for dim " +
                                  std::to_string(dim) + " > 64");
        }
        return DensityOperator(LindbladPropagator(spec.jumps, dim).apply(rho0.matrix(), spec.duration));
    }
    const ComplexMatrix r = rk4_propagate(spec.jumps, rho0.matrix(), spec.duration);
    return DensityOperator(clip_positivity(r, "core-linalg", "lindblad_propagate"));
}

}  // namespace qfragile
