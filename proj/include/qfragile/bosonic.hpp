#pragma once

#include <vector>

#include "qfragile/fisher.hpp"
#include "qfragile/linalg.hpp"

namespace qfragile {

// Truncated Fock space |0> .. |n_max>; X = (a + a^dag)/sqrt(2), P = i(a^dag - a)/sqrt(2).
class FockSpace {
public:
    explicit FockSpace(int cutoff = 40);

    int cutoff() const { return cutoff_; }
    Eigen::Index dim() const { return cutoff_ + 1; }
    const ComplexMatrix& a() const { return a_; }
    const ComplexMatrix& adag() const { return adag_; }
    const ComplexMatrix& x() const { return x_; }
    const ComplexMatrix& p() const { return p_; }
    const ComplexMatrix& number() const { return n_; }
    ComplexVector fock(int n) const;

private:
    int cutoff_;
    ComplexMatrix a_, adag_, x_, p_, n_;
};

inline constexpr double kTailMassLimit = 1e-10;
inline constexpr int kTailWindow = 5;
inline constexpr int kDisplacementPadding = 40;

// Mass on |k> with k > n_max - 5.
double tail_mass(const ComplexVector& v, int cutoff);

// Matrix elements <k|exp(alpha (a^dag - a))|n> for k, n <= n_max; throws when D(alpha)|0> or D(alpha)|1>
// leaks into the tail.
ComplexMatrix displacement_operator(double alpha, const FockSpace& space);

struct DisplacedFockProbe {
    int n = 0;
    double alpha = 0.0;
    ComplexVector state;
};

DisplacedFockProbe displaced_fock_probe(int n, double alpha, const FockSpace& space);

// Smallest cutoff keeping the tail of D(alpha)|n> below the limit.
int suggested_cutoff(double alpha, int n);

struct BosonicSweep {
    std::vector<double> alpha;
    std::vector<double> cfi;
    int probe_n = 0;
    double gamma_t = 0.0;
    double qfi_noiseless = 0.0;
};

// Number-basis CFI of D(alpha)|n> after quadrature noise, encoded by exp(-i theta P).
BosonicSweep bosonic_cfi_sweep(int n, const std::vector<double>& alphas, double gamma_t, const FockSpace& space,
                               int threads = 1);

struct ScalingFit {
    std::vector<double> j_values;
    std::vector<double> ratio_m0;   // Delta F / F at the M = 0 branch (smallest |M| for half-integer J)
    std::vector<double> jump_n1;    // Delta F at M = J - n
    double slope_ratio_m0 = 0.0;
    double slope_jump_fixed_n = 0.0;
};

ScalingFit hpa_scaling_check(const std::vector<double>& j_values, int n = 1);

}  // namespace qfragile
