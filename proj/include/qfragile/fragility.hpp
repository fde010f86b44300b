#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "qfragile/fisher.hpp"
#include "qfragile/linalg.hpp"
#include "qfragile/noise.hpp"
#include "qfragile/spin.hpp"

namespace qfragile {

std::vector<double> uniform_grid(double lo, double hi, int points);

// Uniform points plus `densify` points within +-halfwidth of each center; centers are included exactly.
std::vector<double> densified_grid(double lo, double hi, int points, const std::vector<double>& centers,
                                   int densify, double halfwidth);

struct BetaGridOptions {
    int points = 1001;
    int densify = 50;
    double halfwidth = 0.02;
};

// arccos(M/J) for every M from J down to -J, ascending in beta.
std::vector<double> discontinuity_angles(Spin j);
std::vector<double> default_beta_grid(Spin j, const BetaGridOptions& options = {});

struct DiscontinuityRecord {
    double beta_star = 0.0;
    double m = 0.0;
    double delta_f = 0.0;
};

// 8J ((J+M)/2J)^(J+M) ((J-M)/2J)^(J-M) C(2J, J-M), evaluated in log space.
double discontinuity_size(Spin j, double m);
std::vector<DiscontinuityRecord> locate_discontinuities(Spin j);

struct FisherSweep {
    std::vector<double> beta;
    std::vector<double> cfi;
    double qfi = 0.0;
    std::string noise;
    std::string probe;
    std::vector<DiscontinuityRecord> discontinuities;
};

// Measured model p(lambda) = Tr(U_b^dag rho_theta U_b E_lambda) with U_b = exp(-i beta G).
struct SweepProblem {
    DensityOperator probe;
    NoiseChannel noise;
    ComplexMatrix generator;
    ComplexMatrix rotation_generator;
    Povm fiducial;
    std::string probe_label;
};

// Support threshold for rank-one probes evaluated through amplitudes (exact zeros sit near 1e-32).
inline constexpr double kPureSupportThreshold = 1e-24;

SweepProblem first_dicke_problem(Spin j, NoiseChannel noise = NoNoise{});

FisherSweep sweep_cfi(const SweepProblem& problem, const std::vector<double>& betas, int threads = 1);

// Same as sweep_cfi but on an already-noisy state.
FisherSweep sweep_cfi_state(const ComplexMatrix& noisy, const ComplexMatrix& generator,
                            const ComplexMatrix& rotation_generator, const Povm& fiducial,
                            const std::vector<double>& betas, int threads = 1);

double max_fragile_weight(const ComplexMatrix& rho, const ComplexVector& phi);

struct FragileMember {
    ComplexVector state;
    double weight = 0.0;
    std::size_t candidate = 0;
};

struct FragileDecomposition {
    std::vector<FragileMember> members;
    ComplexMatrix residual;
    double fragile_trace = 0.0;
    double residual_trace = 0.0;
    double jensen_bound = std::numeric_limits<double>::quiet_NaN();
};

inline constexpr double kGreedyStopWeight = 1e-6;

// Throws if a candidate has no vanishing outcome under the POVM (tolerance 1e-8).
void check_fragile_candidates(const std::vector<ComplexVector>& candidates, const Povm& povm);

FragileDecomposition fragile_decomposition(const ComplexMatrix& rho, const std::vector<ComplexVector>& candidates,
                                           const Povm& povm);

// Greedy extraction without the candidate check; shared by the block-wise local-noise path.
FragileDecomposition greedy_extract(const ComplexMatrix& rho, const std::vector<ComplexVector>& candidates);

double jensen_bound(FragileDecomposition& decomposition, const ComplexMatrix& h, const Povm& povm);

double minimizing_condition_residual(const std::vector<double>& p, const std::vector<double>& dp,
                                     const std::vector<double>& g, const std::vector<double>& dg);
double minimizing_condition_residual(const OutcomeModel& p, const OutcomeModel& g, double theta);

// Sum over outcomes of jump / (p / (gdt sigma) + 1).
double approximate_loss(const std::vector<double>& p, const std::vector<double>& sigma, double gamma_dt,
                        const std::vector<double>& jumps);

struct LoschmidtPovm {
    Povm povm;
    ComplexVector perp;
    bool degenerate = false;
};

LoschmidtPovm loschmidt_echo_povm(const ComplexVector& psi, const ComplexMatrix& h, double theta);

}  // namespace qfragile
