#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qfragile/linalg.hpp"
#include "qfragile/spin.hpp"

namespace qfragile {

struct NoNoise {};

struct CollectiveDepolarizing {
    Spin j;
    double gamma_t = 0.0;
};

struct LocalDepolarizing {
    int n_qubits = 1;
    double gamma_t = 0.0;
};

struct IdentityMixing {
    double epsilon = 0.0;
};

struct CustomLindblad {
    LindbladSpec spec;
    LindbladMethod method = LindbladMethod::automatic;
};

struct BosonicQuadrature {
    int cutoff = 40;
    double gamma_t = 0.0;
};

using NoiseChannel =
    std::variant<NoNoise, CollectiveDepolarizing, LocalDepolarizing, IdentityMixing, CustomLindblad, BosonicQuadrature>;

std::string noise_kind(const NoiseChannel& channel);
void validate_channel(const NoiseChannel& channel);

DensityOperator apply_channel(const NoiseChannel& channel, const DensityOperator& rho);

std::vector<JumpOperator> collective_depolarizing_jumps(Spin j);
// Shared dense propagator for the collective jump set, built once per J.
std::shared_ptr<const LindbladPropagator> collective_propagator(Spin j);
DensityOperator apply_collective_depolarizing(const DensityOperator& rho, Spin j, double gamma_t,
                                              LindbladMethod method = LindbladMethod::automatic);

double local_depolarizing_weight(double gamma_t);
std::vector<JumpOperator> local_depolarizing_jumps(int n_qubits);
ComplexMatrix local_depolarizing_matrix(const ComplexMatrix& rho, int n_qubits, double gamma_t);
DensityOperator apply_local_depolarizing(const DensityOperator& rho, int n_qubits, double gamma_t);

DensityOperator identity_mix(const DensityOperator& rho, double epsilon);

// Jumps sqrt(gamma) X and sqrt(gamma) P on a truncated Fock space of dimension cutoff + 1.
std::vector<JumpOperator> bosonic_quadrature_jumps(int cutoff);

double support_change_rate(const ComplexMatrix& element, const ComplexMatrix& jump, const DensityOperator& rho);
double support_change_rate(const ComplexMatrix& element, const std::vector<JumpOperator>& jumps,
                           const DensityOperator& rho);

// Orthonormal family with psi first, completed by Gram-Schmidt over the standard basis in index order.
ComplexMatrix orthonormal_completion(const ComplexVector& psi);

// Jump operator whose only deviation from `base` (default J_z) is a vanishing <M|_beta L |psi> element,
// where |M>_beta = exp(-i beta J_y)|J,M>.
ComplexMatrix pathological_jump_operator(Spin j, double m, const ComplexVector& psi, double beta_m,
                                         const std::optional<ComplexMatrix>& base = std::nullopt);

}  // namespace qfragile
