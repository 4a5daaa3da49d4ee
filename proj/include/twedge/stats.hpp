#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "twedge/errors.hpp"

namespace twedge {

// Linear-interpolation quantile of a sample (numpy's default rule).
inline double quantile(std::vector<double> v, double p) {
    require(!v.empty(), "EmptySample", "quantile of empty sample");
    require(p >= 0.0 && p <= 1.0, "BadProbability", "quantile prob outside [0,1]");
    std::sort(v.begin(), v.end());
    if (v.size() == 1) return v[0];
    double h = p * static_cast<double>(v.size() - 1);
    auto i = static_cast<std::size_t>(std::floor(h));
    if (i + 1 >= v.size()) return v.back();
    double frac = h - static_cast<double>(i);
    return v[i] + frac * (v[i + 1] - v[i]);
}

inline double median(const std::vector<double>& v) { return quantile(v, 0.5); }

// Fraction of samples <= x.
inline double ecdf_at(const std::vector<double>& sorted, double x) {
    auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
    return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

inline double binomial_se(double p_hat, std::size_t n) {
    return std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(n));
}

// Two-sample Kolmogorov-Smirnov distance sup_x |F_a(x) - F_b(x)|.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
    require(!a.empty() && !b.empty(), "EmptySample", "KS distance of empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

// Least-squares slope of y against x.
inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, "BadInput", "ols_slope needs >= 2 paired points");
    double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i]; sy += y[i]; sxx += x[i] * x[i]; sxy += x[i] * y[i];
    }
    double denom = n * sxx - sx * sx;
    require(std::fabs(denom) > 0, "BadInput", "ols_slope on degenerate x");
    return (n * sxy - sx * sy) / denom;
}

} // namespace twedge
