#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "qfragile/spin.hpp"

namespace qfragile {

using ProbabilityFamily = std::function<std::vector<double>(double theta)>;

struct MleConfig {
    double theta_min = -0.2;
    double theta_max = 0.2;
    int resolution = 2001;
    int samples = 40;
    int runs = 10000;
    std::vector<double> theta0s;  // explicit truths
    bool average = true;          // adds the theta0-averaged row
    double average_min = -0.1;
    double average_max = 0.1;
    int average_points = 11;
    bool fold = true;
    std::uint64_t seed = 0;

    void validate() const;
};

struct BiasResult {
    double beta = 0.0;
    std::optional<double> theta0;  // empty for the averaged row
    double mean_bias = 0.0;
    double sem = 0.0;
    double mean_abs_bias = 0.0;  // for averaged rows: mean over theta0 of |bias|
    int runs = 0;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t run_seed(std::uint64_t master, std::uint64_t counter);
double uniform01(std::mt19937_64& rng);

std::vector<int> sample_outcomes(const std::vector<double>& probabilities, int n, std::uint64_t seed);

class LikelihoodTable {
public:
    LikelihoodTable(const ProbabilityFamily& family, double theta_min, double theta_max, int resolution);

    const std::vector<double>& grid() const { return grid_; }
    std::size_t outcomes() const { return outcomes_; }
    // log p at grid point g for outcome l; -inf outside the support
    double log_p(std::size_t g, std::size_t l) const { return log_p_[g * outcomes_ + l]; }

private:
    std::vector<double> grid_;
    std::size_t outcomes_ = 0;
    std::vector<double> log_p_;
};

double mle_estimate(const std::vector<int>& samples, const LikelihoodTable& table, bool fold = true);

// Bias of the (optionally folded) estimate; folded estimates are compared with |theta0|.
std::vector<BiasResult> bias_monte_carlo(const std::vector<double>& betas,
                                         const std::function<ProbabilityFamily(double beta)>& family_for_beta,
                                         const MleConfig& config, int threads = 1);

// Measurement family of the first Dicke state under collective noise: p depends on beta - theta.
std::function<ProbabilityFamily(double beta)> first_dicke_family(Spin j, double gamma_t);

}  // namespace qfragile
