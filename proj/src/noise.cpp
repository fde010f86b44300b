#include "qfragile/noise.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace qfragile {

namespace {

constexpr Complex kI{0.0, 1.0};

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_gamma_t(double g, const char* op) {
    if (!std::isfinite(g) || g < 0.0) {
        throw ValidationError(std::string(op) + ": gamma_t must be finite and nonnegative");
    }
}

}  // namespace

std::string noise_kind(const NoiseChannel& channel) {
    return std::visit(overloaded{
                          [](const NoNoise&) { return std::string("none"); },
                          [](const CollectiveDepolarizing&) { return std::string("collective-depolarizing"); },
                          [](const LocalDepolarizing&) { return std::string("local-depolarizing"); },
                          [](const IdentityMixing&) { return std::string("identity-mixing"); },
                          [](const CustomLindblad&) { return std::string("custom-lindblad"); },
                          [](const BosonicQuadrature&) { return std::string("bosonic-quadrature"); },
                      },
                      channel);
}

void validate_channel(const NoiseChannel& channel) {
    std::visit(overloaded{
                   [](const NoNoise&) {},
                   [](const CollectiveDepolarizing& c) { check_gamma_t(c.gamma_t, "collective-depolarizing"); },
                   [](const LocalDepolarizing& c) {
                       check_gamma_t(c.gamma_t, "local-depolarizing");
                       if (c.n_qubits < 1 || c.n_qubits > 10) {
                           throw ValidationError("local-depolarizing: qubit count must be in [1, 10]");
                       }
                   },
                   [](const IdentityMixing& c) {
                       if (!(c.epsilon >= 0.0 && c.epsilon <= 1.0)) {
                           throw ValidationError("identity-mixing: epsilon must lie in [0, 1]");
                       }
                   },
                   [](const CustomLindblad& c) {
                       check_gamma_t(c.spec.duration, "custom-lindblad");
                       for (const auto& j : c.spec.jumps) {
                           if (!is_square(j.op) || j.rate < 0.0) {
                               throw ValidationError("custom-lindblad: jumps must be square with nonnegative rate");
                           }
                       }
                   },
                   [](const BosonicQuadrature& c) {
                       check_gamma_t(c.gamma_t, "bosonic-quadrature");
                       if (c.cutoff < 6) {
                           throw ValidationError("bosonic-quadrature: cutoff must be at least 6");
                       }
                   },
               },
               channel);
}

DensityOperator apply_channel(const NoiseChannel& channel, const DensityOperator& rho) {
    validate_channel(channel);
    return std::visit(
        overloaded{
            [&](const NoNoise&) { return rho; },
            [&](const CollectiveDepolarizing& c) { return apply_collective_depolarizing(rho, c.j, c.gamma_t); },
            [&](const LocalDepolarizing& c) { return apply_local_depolarizing(rho, c.n_qubits, c.gamma_t); },
            [&](const IdentityMixing& c) { return identity_mix(rho, c.epsilon); },
            [&](const CustomLindblad& c) { return lindblad_propagate(rho, c.spec, c.method); },
            [&](const BosonicQuadrature& c) {
                if (rho.dim() != c.cutoff + 1) {
                    throw ValidationError("bosonic-quadrature: state dimension does not match cutoff");
                }
                return lindblad_propagate(rho, LindbladSpec{bosonic_quadrature_jumps(c.cutoff), c.gamma_t});
            },
        },
        channel);
}

std::vector<JumpOperator> collective_depolarizing_jumps(Spin j) {
    const auto ops = angular_momentum_operators(j);
    return {{ops.jx, 1.0}, {ops.jy, 1.0}, {ops.jz, 1.0}};
}

DensityOperator apply_collective_depolarizing(const DensityOperator& rho, Spin j, double gamma_t,
                                              LindbladMethod method) {
    check_gamma_t(gamma_t, "apply_collective_depolarizing");
    if (rho.dim() != j.dim()) {
        throw ValidationError("apply_collective_depolarizing: state dimension " + std::to_string(rho.dim()) +
                              " does not match 2J+1 = " + std::to_string(j.dim()));
    }
    if (gamma_t == 0.0) {
        return rho;
    }
    if (method != LindbladMethod::fixed_step_rk4 && j.dim() <= kDenseLindbladCap) {
        return DensityOperator(collective_propagator(j)->apply(rho.matrix(), gamma_t));
    }
    return lindblad_propagate(rho, LindbladSpec{collective_depolarizing_jumps(j), gamma_t}, method);
}

std::shared_ptr<const LindbladPropagator> collective_propagator(Spin j) {
    static std::mutex mutex;
    static std::map<int, std::shared_ptr<const LindbladPropagator>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(j.twice());
    if (it != cache.end()) {
        return it->second;
    }
    auto prop = std::make_shared<const LindbladPropagator>(collective_depolarizing_jumps(j), j.dim());
    cache.emplace(j.twice(), prop);
    return prop;
}

double local_depolarizing_weight(double gamma_t) { return -std::expm1(-4.0 * gamma_t); }

std::vector<JumpOperator> local_depolarizing_jumps(int n_qubits) {
    if (n_qubits < 1 || n_qubits > 10) {
        throw ValidationError("local_depolarizing_jumps: qubit count must be in [1, 10]");
    }
    const Eigen::Index d = Eigen::Index{1} << n_qubits;
    std::vector<JumpOperator> jumps;
    for (int q = 0; q < n_qubits; ++q) {
        const Eigen::Index bit = Eigen::Index{1} << (n_qubits - 1 - q);
        ComplexMatrix sx = ComplexMatrix::Zero(d, d), sy = ComplexMatrix::Zero(d, d), sz = ComplexMatrix::Zero(d, d);
        for (Eigen::Index x = 0; x < d; ++x) {
            const bool down = (x & bit) != 0;
            sx(x ^ bit, x) = 1.0;
            // sigma_y |0> = i|1>, sigma_y |1> = -i|0>
            sy(x ^ bit, x) = down ? -kI : kI;
            sz(x, x) = down ? -1.0 : 1.0;
        }
        jumps.push_back({sx, 1.0});
        jumps.push_back({sy, 1.0});
        jumps.push_back({sz, 1.0});
    }
    return jumps;
}

ComplexMatrix local_depolarizing_matrix(const ComplexMatrix& rho, int n_qubits, double gamma_t) {
    const Eigen::Index d = Eigen::Index{1} << n_qubits;
    if (rho.rows() != d || rho.cols() != d) {
        throw ValidationError("apply_local_depolarizing: state dimension does not match 2^N");
    }
    const double p = local_depolarizing_weight(gamma_t);
    if (p == 0.0) {
        return rho;
    }
    ComplexMatrix r = rho;
    ComplexMatrix t(d, d);
    for (int q = 0; q < n_qubits; ++q) {
        const Eigen::Index bit = Eigen::Index{1} << (n_qubits - 1 - q);
        for (Eigen::Index y = 0; y < d; ++y) {
            for (Eigen::Index x = 0; x < d; ++x) {
                if (((x ^ y) & bit) != 0) {
                    t(x, y) = 0.0;
                } else {
                    t(x, y) = 0.5 * (r(x & ~bit, y & ~bit) + r(x | bit, y | bit));
                }
            }
        }
        r = (1.0 - p) * r + p * t;
    }
    return r;
}

DensityOperator apply_local_depolarizing(const DensityOperator& rho, int n_qubits, double gamma_t) {
    check_gamma_t(gamma_t, "apply_local_depolarizing");
    if (n_qubits < 1 || n_qubits > 10) {
        throw ValidationError("apply_local_depolarizing: qubit count must be in [1, 10]");
    }
    return DensityOperator(local_depolarizing_matrix(rho.matrix(), n_qubits, gamma_t));
}

DensityOperator identity_mix(const DensityOperator& rho, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw ValidationError("identity_mix: epsilon " + std::to_string(epsilon) + " outside [0, 1]");
    }
    const Eigen::Index d = rho.dim();
    return DensityOperator((1.0 - epsilon) * rho.matrix() +
                           epsilon * ComplexMatrix::Identity(d, d) / static_cast<double>(d));
}

std::vector<JumpOperator> bosonic_quadrature_jumps(int cutoff) {
    const Eigen::Index d = cutoff + 1;
    ComplexMatrix a = ComplexMatrix::Zero(d, d);
    for (Eigen::Index n = 1; n < d; ++n) {
        a(n - 1, n) = std::sqrt(static_cast<double>(n));
    }
    const ComplexMatrix ad = a.adjoint();
    const ComplexMatrix x = (a + ad) / std::sqrt(2.0);
    const ComplexMatrix p = kI * (ad - a) / std::sqrt(2.0);
    return {{x, 1.0}, {p, 1.0}};
}

double support_change_rate(const ComplexMatrix& element, const ComplexMatrix& jump, const DensityOperator& rho) {
    return support_change_rate(element, std::vector<JumpOperator>{{jump, 1.0}}, rho);
}

double support_change_rate(const ComplexMatrix& element, const std::vector<JumpOperator>& jumps,
                           const DensityOperator& rho) {
    const double tr = rho.trace();
    if (std::abs(rho.purity() - tr * tr) > 1e-9) {
        throw ValidationError("support_change_rate: state is not pure");
    }
    if (element.rows() != rho.dim()) {
        throw ValidationError("support_change_rate: dimension mismatch");
    }
    const double p = (element * rho.matrix()).trace().real();
    if (p > 1e-12) {
        throw ValidationError("support_change_rate: element is not orthogonal to the state (p = " +
                              std::to_string(p) + ")");
    }
    double total = 0.0;
    for (const auto& j : jumps) {
        total += j.rate * (element * j.op * rho.matrix() * j.op.adjoint()).trace().real();
    }
    return total;
}

ComplexMatrix orthonormal_completion(const ComplexVector& psi) {
    const Eigen::Index d = psi.size();
    ComplexMatrix fam(d, d);
    fam.col(0) = psi / psi.norm();
    Eigen::Index filled = 1;
    for (Eigen::Index k = 0; k < d && filled < d; ++k) {
        ComplexVector u = ComplexVector::Unit(d, k);
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index c = 0; c < filled; ++c) {
                u -= fam.col(c).dot(u) * fam.col(c);
            }
        }
        const double nrm = u.norm();
        if (nrm > 1e-8) {
            fam.col(filled++) = u / nrm;
        }
    }
    return fam;
}

ComplexMatrix pathological_jump_operator(Spin j, double m, const ComplexVector& psi, double beta_m,
                                         const std::optional<ComplexMatrix>& base) {
    if (psi.size() != j.dim() || std::abs(psi.norm() - 1.0) > 1e-10) {
        throw ValidationError("pathological_jump_operator: psi must be a unit vector of dimension 2J+1");
    }
    const int target = j.index_of(m);
    const ComplexMatrix a = base ? *base : angular_momentum_operators(j).jz;
    if (a.rows() != j.dim() || a.cols() != j.dim()) {
        throw ValidationError("pathological_jump_operator: base operator dimension mismatch");
    }
    const ComplexMatrix frame = rotation_y(j, beta_m);  // columns |M'>_beta
    const Complex overlap = frame.col(target).dot(psi);
    if (std::abs(overlap) > 1e-10) {
        throw ValidationError("pathological_jump_operator: <M|_beta psi> = " + std::to_string(std::abs(overlap)) +
                              " is not zero; beta_M is not a discontinuity angle of psi");
    }
    const ComplexMatrix fam = orthonormal_completion(psi);
    const ComplexMatrix elems = frame.adjoint() * a * fam;  // <M'|_beta A |psi_i>
    ComplexMatrix coeff = elems;
    coeff(target, 0) = 0.0;
    return frame * coeff * fam.adjoint();
}

}  // namespace qfragile
