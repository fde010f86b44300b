#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include "qfragile/linalg.hpp"

namespace qfragile {

// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3) {
        throw ValidationError("loglog_slope: at least 3 points are required for a fit");
    }
    const auto n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            throw ValidationError("loglog_slope: values must be positive");
        }
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct MeanSem {
    double mean = 0.0;
    double sem = 0.0;
};

// Summation in index order.
inline MeanSem mean_sem(const std::vector<double>& v) {
    const auto n = static_cast<double>(v.size());
    if (v.empty()) {
        return {};
    }
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    const double mean = s / n;
    if (v.size() < 2) {
        return {mean, 0.0};
    }
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

}  // namespace qfragile
