#include "qfragile/estimation.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "qfragile/fisher.hpp"
#include "qfragile/noise.hpp"
#include "qfragile/parallel.hpp"
#include "qfragile/stats.hpp"

namespace qfragile {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_probabilities(const std::vector<double>& p) {
    double s = 0.0;
    for (double v : p) {
        if (!std::isfinite(v) || v < -1e-12) {
            throw ValidationError("sample_outcomes: invalid probability " + std::to_string(v));
        }
        s += v;
    }
    if (p.empty() || std::abs(s - 1.0) > 1e-10) {
        throw ValidationError("sample_outcomes: probabilities sum to " + std::to_string(s));
    }
}

}  // namespace

void MleConfig::validate() const {
    if (!(theta_max > theta_min)) {
        throw ValidationError("MleConfig: empty theta interval");
    }
    if (resolution < 3) {
        throw ValidationError("MleConfig: resolution must be at least 3");
    }
    if (samples < 1 || runs < 1) {
        throw ValidationError("MleConfig: samples and runs must be at least 1");
    }
    if (average && (!(average_max > average_min) || average_points < 1)) {
        throw ValidationError("MleConfig: invalid averaging interval");
    }
    if (theta0s.empty() && !average) {
        throw ValidationError("MleConfig: no theta0 values and averaging disabled");
    }
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t run_seed(std::uint64_t master, std::uint64_t counter) { return splitmix64(master ^ splitmix64(counter)); }

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<int> sample_outcomes(const std::vector<double>& probabilities, int n, std::uint64_t seed) {
    check_probabilities(probabilities);
    if (n < 0) {
        throw ValidationError("sample_outcomes: negative sample count");
    }
    std::vector<double> cdf(probabilities.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        acc += std::max(0.0, probabilities[i]);
        cdf[i] = acc;
    }
    std::size_t last = 0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        if (probabilities[i] > 0.0) {
            last = i;
        }
    }
    std::mt19937_64 rng(seed);
    std::vector<int> out(static_cast<std::size_t>(n));
    for (auto& o : out) {
        const double u = uniform01(rng) * acc;
        std::size_t k = 0;
        while (k < last && !(u < cdf[k])) {
            ++k;
        }
        o = static_cast<int>(k);
    }
    return out;
}

LikelihoodTable::LikelihoodTable(const ProbabilityFamily& family, double theta_min, double theta_max, int resolution) {
    if (!(theta_max > theta_min) || resolution < 3) {
        throw ValidationError("LikelihoodTable: invalid grid");
    }
    grid_.resize(static_cast<std::size_t>(resolution));
    for (int i = 0; i < resolution; ++i) {
        grid_[static_cast<std::size_t>(i)] =
            theta_min + (theta_max - theta_min) * static_cast<double>(i) / static_cast<double>(resolution - 1);
    }
    for (std::size_t g = 0; g < grid_.size(); ++g) {
        const auto p = family(grid_[g]);
        if (g == 0) {
            outcomes_ = p.size();
            log_p_.resize(grid_.size() * outcomes_);
        } else if (p.size() != outcomes_) {
            throw ValidationError("LikelihoodTable: family changed its outcome count");
        }
        for (std::size_t l = 0; l < outcomes_; ++l) {
            log_p_[g * outcomes_ + l] = p[l] > kSupportThreshold ? std::log(p[l]) : kNegInf;
        }
    }
}

double mle_estimate(const std::vector<int>& samples, const LikelihoodTable& table, bool fold) {
    if (samples.empty()) {
        throw ValidationError("mle_estimate: empty sample list");
    }
    std::vector<int> counts(table.outcomes(), 0);
    for (int s : samples) {
        if (s < 0 || static_cast<std::size_t>(s) >= table.outcomes()) {
            throw ValidationError("mle_estimate: sample outside the outcome set");
        }
        ++counts[static_cast<std::size_t>(s)];
    }
    const auto& grid = table.grid();
    double best = kNegInf;
    double best_theta = 0.0;
    bool found = false;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double ll = 0.0;
        for (std::size_t l = 0; l < counts.size() && ll != kNegInf; ++l) {
            if (counts[l] > 0) {
                ll += counts[l] * table.log_p(g, l);
            }
        }
        if (ll == kNegInf) {
            continue;
        }
        if (!found || ll > best || (ll == best && std::abs(grid[g]) < std::abs(best_theta))) {
            best = ll;
            best_theta = grid[g];
            found = true;
        }
    }
    if (!found) {
        throw NumericalError("estimation", "mle_estimate", "impossible sample: every grid point has zero likelihood");
    }
    return fold ? std::abs(best_theta) : best_theta;
}

std::vector<BiasResult> bias_monte_carlo(const std::vector<double>& betas,
                                         const std::function<ProbabilityFamily(double beta)>& family_for_beta,
                                         const MleConfig& config, int threads) {
    config.validate();
    std::vector<double> truths = config.theta0s;
    const std::size_t explicit_count = truths.size();
    if (config.average) {
        for (int k = 0; k < config.average_points; ++k) {
            truths.push_back(config.average_points == 1
                                 ? 0.5 * (config.average_min + config.average_max)
                                 : config.average_min + (config.average_max - config.average_min) * k /
                                                            static_cast<double>(config.average_points - 1));
        }
    }
    const auto runs = static_cast<std::size_t>(config.runs);
    std::vector<BiasResult> out;
    for (std::size_t b = 0; b < betas.size(); ++b) {
        const ProbabilityFamily family = family_for_beta(betas[b]);
        const LikelihoodTable table(family, config.theta_min, config.theta_max, config.resolution);
        std::vector<MeanSem> per_truth;
        for (std::size_t t = 0; t < truths.size(); ++t) {
            const double theta0 = truths[t];
            const auto p = family(theta0);
            const double target = config.fold ? std::abs(theta0) : theta0;
            std::vector<double> err(runs);
            const std::uint64_t base = (static_cast<std::uint64_t>(b) * truths.size() + t) * runs;
            parallel_for(runs, threads, [&](std::size_t r) {
                const auto s = sample_outcomes(p, config.samples, run_seed(config.seed, base + r));
                err[r] = mle_estimate(s, table, config.fold) - target;
            });
            per_truth.push_back(mean_sem(err));
        }
        for (std::size_t t = 0; t < explicit_count; ++t) {
            const auto& ms = per_truth[t];
            out.push_back({betas[b], truths[t], ms.mean, ms.sem, std::abs(ms.mean), config.runs});
        }
        if (config.average) {
            double m = 0.0, m_abs = 0.0, var = 0.0;
            const auto k = static_cast<double>(config.average_points);
            for (std::size_t t = explicit_count; t < truths.size(); ++t) {
                m += per_truth[t].mean;
                m_abs += std::abs(per_truth[t].mean);
                var += per_truth[t].sem * per_truth[t].sem;
            }
            out.push_back({betas[b], std::nullopt, m / k, std::sqrt(var) / k, m_abs / k,
                           config.runs * config.average_points});
        }
    }
    return out;
}

std::function<ProbabilityFamily(double beta)> first_dicke_family(Spin j, double gamma_t) {
    const DensityOperator pure = DensityOperator::pure(dicke_ket(j, j.value() - 1.0));
    auto rho = std::make_shared<const ComplexMatrix>(apply_collective_depolarizing(pure, j, gamma_t).matrix());
    auto rot = std::make_shared<const YRotation>(j);
    return [rho, rot](double beta) -> ProbabilityFamily {
        return [rho, rot, beta](double theta) {
            const ComplexMatrix u = (*rot)(beta - theta);
            const ComplexMatrix r = u.adjoint() * (*rho) * u;
            std::vector<double> p(static_cast<std::size_t>(r.rows()));
            double s = 0.0;
            for (Eigen::Index k = 0; k < r.rows(); ++k) {
                p[static_cast<std::size_t>(k)] = std::max(0.0, r(k, k).real());
                s += p[static_cast<std::size_t>(k)];
            }
            for (auto& v : p) {
                v /= s;
            }
            return p;
        };
    };
}

}  // namespace qfragile
