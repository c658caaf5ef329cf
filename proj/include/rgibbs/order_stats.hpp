#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "distributions.hpp"
#include "errors.hpp"

namespace rgibbs {

/// Position of the p-quantile among the order statistics of a sample of
/// size N under the default linear-interpolation estimator:
/// h = (N-1)p + 1, i = floor(h), g = h - i.
struct QuantileIndex {
    double p = 0.0;
    double h = 1.0;
    std::size_t i = 1;  // 1-based
    double g = 0.0;

    [[nodiscard]] bool deterministic() const noexcept { return g == 0.0; }
};

/// Fractional parts within this distance of an integer are snapped so that
/// e.g. p = 1/3 with N = 1000 lands exactly on an order statistic.
inline constexpr double quantile_snap_tol = 1e-9;

inline QuantileIndex quantile_index(double p, std::size_t n) {
    if (n == 0) throw parameter_error("quantile_index: N must be >= 1");
    if (!(p >= 0.0 && p <= 1.0)) throw parameter_error("quantile_index: p must lie in [0, 1]");
    QuantileIndex q;
    q.p = p;
    q.h = static_cast<double>(n - 1) * p + 1.0;
    double fl = std::floor(q.h);
    double g = q.h - fl;
    if (g > 1.0 - quantile_snap_tol) {
        fl += 1.0;
        g = 0.0;
    } else if (g < quantile_snap_tol) {
        g = 0.0;
    }
    q.i = static_cast<std::size_t>(fl);
    if (q.i >= n) {
        q.i = n;
        g = 0.0;
    }
    q.g = g;
    return q;
}

inline double empirical_quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw parameter_error("empirical_quantile: empty sample");
    const QuantileIndex q = quantile_index(p, sorted.size());
    const double lo = sorted[q.i - 1];
    if (q.g == 0.0) return lo;
    return (1.0 - q.g) * lo + q.g * sorted[q.i];
}

inline double empirical_quantile(std::span<const double> x, double p) {
    std::vector<double> v(x.begin(), x.end());
    std::sort(v.begin(), v.end());
    return empirical_quantile_sorted(v, p);
}

namespace detail {

// k-th smallest (0-based) of a scratch copy.
inline double kth(std::vector<double>& v, std::size_t k) {
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    return v[k];
}

inline double median_inplace(std::vector<double>& v) {
    const std::size_t n = v.size();
    if (n == 0) throw parameter_error("median: empty sample");
    const double hi = kth(v, n / 2);
    if (n % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2));
    return 0.5 * (lo + hi);
}

}  // namespace detail

inline double median(std::span<const double> x) {
    std::vector<double> v(x.begin(), x.end());
    return detail::median_inplace(v);
}

/// Median absolute deviation about the median, without consistency factor.
inline double mad(std::span<const double> x) {
    std::vector<double> v(x.begin(), x.end());
    const double m = detail::median_inplace(v);
    for (double& e : v) e = std::abs(e - m);
    return detail::median_inplace(v);
}

inline double iqr(std::span<const double> x) {
    std::vector<double> v(x.begin(), x.end());
    std::sort(v.begin(), v.end());
    return empirical_quantile_sorted(v, 0.75) - empirical_quantile_sorted(v, 0.25);
}

/// Ranks (1-based, strictly increasing) of a subset of the order statistics
/// of a sample of size N.
struct OrderStatSpec {
    std::size_t n = 0;
    std::vector<std::size_t> indices;

    void validate() const {
        if (n == 0) throw parameter_error("OrderStatSpec: N must be >= 1");
        for (std::size_t k = 0; k < indices.size(); ++k) {
            if (indices[k] < 1 || indices[k] > n) {
                throw parameter_error("OrderStatSpec: index " + std::to_string(indices[k]) + " outside [1, N]");
            }
            if (k > 0 && indices[k] <= indices[k - 1]) {
                throw parameter_error("OrderStatSpec: indices must be strictly increasing");
            }
        }
    }
};

/// log-density of (X_(i_1), ..., X_(i_M)) at `values` for an i.i.d. sample
/// of size N from `d`. Returns -inf outside the support or when `values`
/// is not strictly increasing.
template <ContinuousFamily D>
double joint_orderstat_logdensity(const D& d, const OrderStatSpec& spec, std::span<const double> values) {
    if (values.size() != spec.indices.size()) {
        throw parameter_error("joint_orderstat_logdensity: expected " + std::to_string(spec.indices.size()) +
                              " values, got " + std::to_string(values.size()));
    }
    spec.validate();
    const std::size_t m = values.size();
    double out = std::lgamma(static_cast<double>(spec.n) + 1.0);
    std::size_t prev_rank = 0;
    double prev_x = -inf;
    for (std::size_t k = 0; k <= m; ++k) {
        const std::size_t rank = k < m ? spec.indices[k] : spec.n + 1;
        const double x = k < m ? values[k] : inf;
        if (!(x > prev_x)) return -inf;
        const std::size_t gap = rank - prev_rank - 1;
        if (gap > 0) {
            const double log_mass = log_interval_mass(d, Interval{prev_x, x});
            if (!(log_mass > -inf)) return -inf;
            out += static_cast<double>(gap) * log_mass - std::lgamma(static_cast<double>(gap) + 1.0);
        }
        if (k < m) {
            const double lf = d.log_pdf(x);
            if (!(lf > -inf)) return -inf;
            out += lf;
        }
        prev_rank = rank;
        prev_x = x;
    }
    return std::isnan(out) ? -inf : out;
}

namespace detail {

inline double orderstat_p(std::size_t i, std::size_t n) {
    const double nn = static_cast<double>(n);
    const double p = n > 1 ? static_cast<double>(i) / (nn - 1.0) : 0.5;
    return std::clamp(p, 1.0 / (nn + 1.0), nn / (nn + 1.0));
}

// Non-throwing core; NaN when the density vanishes at the quantile.
template <ContinuousFamily D>
double orderstat_variance_or_nan(const D& d, std::size_t i, std::size_t n) {
    const double p = orderstat_p(i, n);
    const double f = d.pdf(d.quantile(p));
    if (!(f > 0.0) || !std::isfinite(f)) return std::numeric_limits<double>::quiet_NaN();
    const double v = p * (1.0 - p) / ((static_cast<double>(n) + 2.0) * f * f);
    return std::isfinite(v) && v > 0.0 ? v : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

/// Asymptotic variance of X_(i), p(1-p) / ((N+2) f(Q(p))^2) with p = i/(N-1)
/// clamped to [1/(N+1), N/(N+1)]. Finite even for heavy-tailed families.
template <ContinuousFamily D>
double orderstat_variance_approx(const D& d, std::size_t i, std::size_t n) {
    if (n == 0 || i < 1 || i > n) throw parameter_error("orderstat_variance_approx: need 1 <= i <= N");
    const double v = detail::orderstat_variance_or_nan(d, i, n);
    if (std::isnan(v)) throw parameter_error("orderstat_variance_approx: zero density at the quantile");
    return v;
}

}  // namespace rgibbs
