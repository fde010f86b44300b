#include "qfragile/bosonic.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "qfragile/fragility.hpp"
#include "qfragile/noise.hpp"
#include "qfragile/parallel.hpp"
#include "qfragile/spin.hpp"
#include "qfragile/stats.hpp"

namespace qfragile {

namespace {

constexpr Complex kI{0.0, 1.0};

// log |<k|D(alpha)|n>|^2 for n in {0, 1}
double log_displaced_mass(double alpha, int n, int k) {
    const double a2 = alpha * alpha;
    if (n == 0) {
        return -a2 + k * std::log(a2) - std::lgamma(k + 1.0);
    }
    if (k == 0) {
        return -a2 + std::log(a2);
    }
    const double diff = a2 - k;
    if (diff == 0.0) {
        return -std::numeric_limits<double>::infinity();
    }
    return -a2 + (k - 1) * std::log(a2) + 2.0 * std::log(std::abs(diff)) - std::lgamma(k + 1.0);
}

double analytic_tail(double alpha, int n, int cutoff) {
    if (alpha == 0.0) {
        return 0.0;
    }
    double s = 0.0;
    for (int k = cutoff - kTailWindow + 1; k < cutoff + 400; ++k) {
        if (k < 0) {
            continue;
        }
        s += std::exp(log_displaced_mass(alpha, n, k));
    }
    return s;
}

}  // namespace

FockSpace::FockSpace(int cutoff) : cutoff_(cutoff) {
    if (cutoff < kTailWindow + 1) {
        throw ValidationError("FockSpace: cutoff must be at least 6");
    }
    const Eigen::Index d = dim();
    a_ = ComplexMatrix::Zero(d, d);
    for (Eigen::Index k = 1; k < d; ++k) {
        a_(k - 1, k) = std::sqrt(static_cast<double>(k));
    }
    adag_ = a_.adjoint();
    x_ = (a_ + adag_) / std::sqrt(2.0);
    p_ = kI * (adag_ - a_) / std::sqrt(2.0);
    n_ = adag_ * a_;
}

ComplexVector FockSpace::fock(int n) const {
    if (n < 0 || n > cutoff_) {
        throw ValidationError("FockSpace::fock: index outside the truncated space");
    }
    return ComplexVector::Unit(dim(), n);
}

double tail_mass(const ComplexVector& v, int cutoff) {
    double s = 0.0;
    for (Eigen::Index k = cutoff - kTailWindow + 1; k < v.size(); ++k) {
        s += std::norm(v(k));
    }
    return s;
}

int suggested_cutoff(double alpha, int n) {
    for (int c = kTailWindow + 1; c < 2000; ++c) {
        if (analytic_tail(alpha, n, c) < kTailMassLimit) {
            return c;
        }
    }
    return 2000;
}

ComplexMatrix displacement_operator(double alpha, const FockSpace& space) {
    if (!std::isfinite(alpha)) {
        throw ValidationError("displacement_operator: alpha must be finite");
    }
    // Exponentiate on a padded space so the kept block carries the untruncated matrix elements.
    const FockSpace padded(space.cutoff() + kDisplacementPadding);
    const Eigen::Index n = space.dim();
    const ComplexMatrix d = matrix_exponential(alpha * (padded.adag() - padded.a())).topLeftCorner(n, n);
    for (int col = 0; col <= 1; ++col) {
        const double tail = tail_mass(d.col(col), space.cutoff());
        if (tail > kTailMassLimit) {
            std::ostringstream msg;
            msg << "cutoff " << space.cutoff() << " too small for alpha = " << alpha << " (tail mass " << tail
                << "); suggested n_max >= " << suggested_cutoff(alpha, 1);
            throw NumericalError("bosonic", "displacement_operator", msg.str());
        }
    }
    return d;
}

DisplacedFockProbe displaced_fock_probe(int n, double alpha, const FockSpace& space) {
    if (n < 0 || n > 1) {
        throw ValidationError("displaced_fock_probe: Fock index must be 0 or 1");
    }
    const ComplexVector v = displacement_operator(alpha, space).col(n);
    return {n, alpha, v.normalized()};
}

BosonicSweep bosonic_cfi_sweep(int n, const std::vector<double>& alphas, double gamma_t, const FockSpace& space,
                               int threads) {
    if (!(gamma_t >= 0.0)) {
        throw ValidationError("bosonic_cfi_sweep: gamma_t must be nonnegative");
    }
    std::optional<LindbladPropagator> prop;
    if (gamma_t > 0.0) {
        prop.emplace(bosonic_quadrature_jumps(space.cutoff()), space.dim());
    }
    const Povm povm = Povm::computational(space.dim());
    BosonicSweep out;
    out.alpha = alphas;
    out.cfi.assign(alphas.size(), 0.0);
    out.probe_n = n;
    out.gamma_t = gamma_t;
    out.qfi_noiseless = qfi_matrix(projector(space.fock(n)), space.p());
    parallel_for(alphas.size(), threads, [&](std::size_t i) {
        const auto probe = displaced_fock_probe(n, alphas[i], space);
        ComplexMatrix rho = projector(probe.state);
        if (prop) {
            rho = prop->apply(rho, gamma_t);
        }
        out.cfi[i] = cfi_matrix(rho, space.p(), povm);
    });
    return out;
}

ScalingFit hpa_scaling_check(const std::vector<double>& j_values, int n) {
    if (j_values.size() < 3) {
        throw ValidationError("hpa_scaling_check: at least 3 J values are required for a fit");
    }
    if (n < 1) {
        throw ValidationError("hpa_scaling_check: n must be at least 1");
    }
    ScalingFit fit;
    fit.j_values = j_values;
    for (double jv : j_values) {
        if (jv < 8.0) {
            throw ValidationError("hpa_scaling_check: J values must be at least 8");
        }
        const Spin j = Spin::from_double(jv);
        const double m0 = j.is_integer() ? 0.0 : 0.5;
        fit.ratio_m0.push_back(discontinuity_size(j, m0) / (6.0 * jv - 2.0));
        fit.jump_n1.push_back(discontinuity_size(j, jv - n));
    }
    fit.slope_ratio_m0 = loglog_slope(j_values, fit.ratio_m0);
    fit.slope_jump_fixed_n = loglog_slope(j_values, fit.jump_n1);
    return fit;
}

}  // namespace qfragile
