#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "order_stats.hpp"

namespace rgibbs {

inline constexpr std::size_t ess_min_draws = 100;

/// Effective sample size with Geyer's initial positive sequence: sum of
/// autocorrelation pairs until a pair turns non-positive, made monotone.
/// Clamped to [1, n].
inline double effective_sample_size(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < ess_min_draws) {
        throw diagnostics_error("effective_sample_size: need at least " + std::to_string(ess_min_draws) +
                                " draws, got " + std::to_string(n));
    }
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> c(x.size());
    for (std::size_t t = 0; t < n; ++t) c[t] = x[t] - mean;
    const auto autocov = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t t = 0; t + lag < n; ++t) s += c[t] * c[t + lag];
        return s / static_cast<double>(n);
    };
    const double c0 = autocov(0);
    if (!(c0 > 0.0)) return 1.0;
    double sum = 0.0;
    double prev_pair = inf;
    for (std::size_t lag = 0; lag + 1 < n; lag += 2) {
        double pair = (autocov(lag) + autocov(lag + 1)) / c0;
        if (!(pair > 0.0)) break;
        pair = std::min(pair, prev_pair);
        prev_pair = pair;
        sum += pair;
    }
    const double tau = std::max(2.0 * sum - 1.0, 1.0 / static_cast<double>(n));
    return std::clamp(static_cast<double>(n) / tau, 1.0, static_cast<double>(n));
}

/// Column `component` of a row-major draw matrix.
inline std::vector<double> column(const std::vector<std::vector<double>>& draws, std::size_t component) {
    std::vector<double> out;
    out.reserve(draws.size());
    for (const auto& row : draws) out.push_back(row.at(component));
    return out;
}

/// Kolmogorov-Smirnov distance between a sample and a continuous cdf.
inline double ks_statistic(std::span<const double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw diagnostics_error("ks_statistic: empty sample");
    std::vector<double> v(sample.begin(), sample.end());
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f = cdf(v[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

/// Two-sample Kolmogorov-Smirnov distance.
inline double ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw diagnostics_error("ks_two_sample: empty sample");
    std::vector<double> x(a.begin(), a.end());
    std::vector<double> y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double t = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= t) ++i;
        while (j < y.size() && y[j] <= t) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
    }
    return d;
}

struct Summary {
    double mean = 0.0;
    double sd = 0.0;
    double q025 = 0.0;
    double q50 = 0.0;
    double q975 = 0.0;
};

inline Summary summarize(std::span<const double> x) {
    if (x.empty()) throw diagnostics_error("summarize: empty sample");
    Summary s;
    const double n = static_cast<double>(x.size());
    for (double v : x) s.mean += v;
    s.mean /= n;
    double ss = 0.0;
    for (double v : x) ss += (v - s.mean) * (v - s.mean);
    s.sd = x.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    std::vector<double> v(x.begin(), x.end());
    std::sort(v.begin(), v.end());
    s.q025 = empirical_quantile_sorted(v, 0.025);
    s.q50 = empirical_quantile_sorted(v, 0.5);
    s.q975 = empirical_quantile_sorted(v, 0.975);
    return s;
}

}  // namespace rgibbs
