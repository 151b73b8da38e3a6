#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace testutil {

// One-sample Kolmogorov-Smirnov statistic against Exp(1).
inline double ks_exponential(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = 1.0 - std::exp(-x[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    return d;
}

// Asymptotic KS critical value at level 0.01.
inline double ks_critical_01(std::size_t n) { return 1.628 / std::sqrt(static_cast<double>(n)); }

// Upper 0.01 quantile of chi-square(k) by the Wilson-Hilferty approximation.
inline double chi2_upper_01(double k) {
    const double z = 2.3263478740408408;
    const double a = 2.0 / (9.0 * k);
    return k * std::pow(1.0 - a + z * std::sqrt(a), 3.0);
}

inline double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double stddev(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace testutil
