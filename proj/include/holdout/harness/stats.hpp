#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

#include "holdout/errors.hpp"

namespace holdout::harness {

struct Summary {
    std::size_t count = 0;
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation (n - 1)
    double se = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// Two-pass mean and sample deviation.
inline Summary summarize(std::span<const double> xs) {
    Summary s;
    s.count = xs.size();
    if (xs.empty()) return s;
    s.min = s.max = xs[0];
    for (double x : xs) {
        s.mean += x;
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
    }
    s.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
        s.se = s.sd / std::sqrt(static_cast<double>(xs.size()));
    }
    return s;
}

/// Least-squares slope of y on x.
inline double ols_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw InputError("slope needs at least two paired points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw InputError("slope needs distinct x values");
    return sxy / sxx;
}

}  // namespace holdout::harness
