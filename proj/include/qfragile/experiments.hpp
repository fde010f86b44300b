#pragma once

#include <optional>
#include <vector>

#include "qfragile/fragility.hpp"

namespace qfragile {

struct JensenRow {
    double beta = 0.0;
    double cfi = 0.0;
    double jensen_bound = 0.0;
    double fragile_trace = 0.0;
    double residual_trace = 0.0;
};

// exp(-i s beta_M J_y)|J,J-1> for interior M and s = +-1.
std::vector<ComplexVector> first_dicke_fragile_candidates(Spin j);

std::vector<JensenRow> collective_jensen_sweep(Spin j, double gamma_t, const std::vector<double>& betas,
                                               int threads = 1);

// Block-diagonal operator in the collective basis of N qubits.
struct BlockOperator {
    struct Block {
        Spin j;
        int copy = 0;
        ComplexMatrix m;
    };
    int n_qubits = 0;
    std::vector<Block> blocks;

    double trace() const;
    ComplexMatrix dense() const;
};

// Splits W^dag rho W into blocks; throws if off-block entries exceed tol.
BlockOperator to_block_form(const ComplexMatrix& rho, const CollectiveBasis& basis, double tol = 1e-10);

// Outcome data for the total-J_z measurement with generator J_y acting blockwise.
OutcomeData block_outcome_data(const BlockOperator& rho);
double block_cfi(const BlockOperator& rho);

struct LocalNoiseSetup {
    CollectiveBasis basis;
    BlockOperator noisy;
    double qfi = 0.0;
};

// First Dicke state of N qubits through the local depolarizing product channel.
LocalNoiseSetup local_noise_setup(int n_qubits, double gamma_t);

BlockOperator rotate_blocks(const BlockOperator& rho, double beta);

FisherSweep local_noise_sweep(const LocalNoiseSetup& setup, const std::vector<double>& betas, int threads = 1);

std::vector<JensenRow> local_jensen_sweep(const LocalNoiseSetup& setup, const std::vector<double>& betas,
                                          int threads = 1);

enum class SphereProbe { first_dicke, coherent };

struct SphereRow {
    double theta_n = 0.0;
    double phi_n = 0.0;
    double cfi = 0.0;
    double epsilon = 0.0;
};

// Probe R_z(phi) R_y(theta)|J,J-1> (or |J,J>), identity mixing, J_z measurement, generator
// R_z(phi) J_y R_z(phi)^dag.
std::vector<SphereRow> sphere_scan(Spin j, SphereProbe probe, double epsilon, const std::vector<double>& thetas,
                                   const std::vector<double>& phis, int threads = 1);

struct LossCheck {
    double before = 0.0;
    double after = 0.0;
    double exact_loss = 0.0;
    double approx_loss = 0.0;
};

// Collective noise on the first Dicke state measured at beta_M.
LossCheck approximate_loss_check(Spin j, double m, double gamma_dt);

// Half-width of the dip in the M-th outcome's Fisher term where its loss falls to half the jump.
double well_half_width(Spin j, double m, double gamma_dt);

struct QubitRow {
    double beta = 0.0;
    double p = 0.0;
    double cfi = 0.0;
    double closed_form = 0.0;
};

double qubit_closed_form(double delta, double p);
std::vector<QubitRow> qubit_demo(const std::vector<double>& betas, const std::vector<double>& ps, double theta = 0.0);

struct EchoRow {
    double theta = 0.0;
    double cfi = 0.0;
    double qfi = 0.0;
    double epsilon = 0.0;
};

std::vector<EchoRow> echo_demo(Spin j, double design_theta, const std::vector<double>& epsilons,
                               const std::vector<double>& thetas);

}  // namespace qfragile
