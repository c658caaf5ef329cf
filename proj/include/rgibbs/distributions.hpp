#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>

#include <boost/math/special_functions/erf.hpp>

#include "errors.hpp"
#include "rng.hpp"

namespace rgibbs {

inline constexpr double inf = std::numeric_limits<double>::infinity();

/// Open interval on the extended real line; either end may be infinite.
struct Interval {
    double lo = -inf;
    double hi = inf;

    [[nodiscard]] bool contains(double x) const noexcept { return lo < x && x < hi; }
    [[nodiscard]] bool valid() const noexcept { return lo < hi; }
    [[nodiscard]] bool bounded() const noexcept { return std::isfinite(lo) && std::isfinite(hi); }
};

/// A continuous univariate family evaluated at fixed parameters. The
/// parameter object is the distribution: `Gaussian{0, 1}.cdf(x)`.
template <class D>
concept ContinuousFamily = requires(const D& d, double x, Rng& rng) {
    { d.pdf(x) } -> std::convertible_to<double>;
    { d.log_pdf(x) } -> std::convertible_to<double>;
    { d.cdf(x) } -> std::convertible_to<double>;
    { d.sf(x) } -> std::convertible_to<double>;
    { d.quantile(x) } -> std::convertible_to<double>;
    { d.isf(x) } -> std::convertible_to<double>;
    { d.sample(rng) } -> std::convertible_to<double>;
    { d.support() } -> std::convertible_to<Interval>;
    { d.mode() } -> std::convertible_to<double>;
};

namespace detail {

inline void require_probability(double p, const char* what) {
    if (!(p > 0.0 && p < 1.0)) {
        throw parameter_error(std::string(what) + ": probability must lie in (0, 1), got " + std::to_string(p));
    }
}

inline void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw parameter_error(std::string(what) + " must be finite");
}

inline void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw parameter_error(std::string(what) + " must be finite and > 0, got " + std::to_string(v));
    }
}

}  // namespace detail

class Gaussian {
public:
    static constexpr std::string_view family_name = "gaussian";
    static constexpr std::array<std::string_view, 2> param_names{"mu", "sigma2"};

    Gaussian(double mu, double sigma2) : mu_(mu), sigma2_(sigma2) {
        detail::require_finite(mu, "gaussian mu");
        detail::require_positive(sigma2, "gaussian sigma2");
        sigma_ = std::sqrt(sigma2);
    }

    [[nodiscard]] double mu() const noexcept { return mu_; }
    [[nodiscard]] double sigma2() const noexcept { return sigma2_; }
    [[nodiscard]] double sigma() const noexcept { return sigma_; }
    [[nodiscard]] std::array<double, 2> params() const noexcept { return {mu_, sigma2_}; }

    [[nodiscard]] double pdf(double x) const noexcept {
        const double z = (x - mu_) / sigma_;
        return std::exp(-0.5 * z * z) * std::numbers::inv_sqrtpi / (std::numbers::sqrt2 * sigma_);
    }
    [[nodiscard]] double log_pdf(double x) const noexcept {
        const double z = (x - mu_) / sigma_;
        return -0.5 * z * z - std::log(sigma_) - 0.5 * std::log(2.0 * std::numbers::pi);
    }
    [[nodiscard]] double cdf(double x) const noexcept {
        return 0.5 * std::erfc(-(x - mu_) / (sigma_ * std::numbers::sqrt2));
    }
    [[nodiscard]] double sf(double x) const noexcept {
        return 0.5 * std::erfc((x - mu_) / (sigma_ * std::numbers::sqrt2));
    }
    [[nodiscard]] double quantile(double p) const {
        detail::require_probability(p, "gaussian quantile");
        return mu_ - sigma_ * std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
    }
    [[nodiscard]] double isf(double q) const {
        detail::require_probability(q, "gaussian isf");
        return mu_ + sigma_ * std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
    }
    [[nodiscard]] double sample(Rng& rng) const { return mu_ + sigma_ * rng.normal(); }
    [[nodiscard]] Interval support() const noexcept { return {}; }
    [[nodiscard]] double mode() const noexcept { return mu_; }

private:
    double mu_;
    double sigma2_;
    double sigma_;
};

class Cauchy {
public:
    static constexpr std::string_view family_name = "cauchy";
    static constexpr std::array<std::string_view, 2> param_names{"x0", "gamma"};

    Cauchy(double x0, double gamma) : x0_(x0), gamma_(gamma) {
        detail::require_finite(x0, "cauchy x0");
        detail::require_positive(gamma, "cauchy gamma");
    }

    [[nodiscard]] double x0() const noexcept { return x0_; }
    [[nodiscard]] double gamma() const noexcept { return gamma_; }
    [[nodiscard]] std::array<double, 2> params() const noexcept { return {x0_, gamma_}; }

    [[nodiscard]] double pdf(double x) const noexcept {
        const double z = (x - x0_) / gamma_;
        return 1.0 / (std::numbers::pi * gamma_ * (1.0 + z * z));
    }
    [[nodiscard]] double log_pdf(double x) const noexcept {
        const double z = (x - x0_) / gamma_;
        return -std::log(std::numbers::pi * gamma_) - std::log1p(z * z);
    }
    // atan2 keeps full relative precision in both tails.
    [[nodiscard]] double cdf(double x) const noexcept {
        return std::atan2(1.0, -(x - x0_) / gamma_) / std::numbers::pi;
    }
    [[nodiscard]] double sf(double x) const noexcept {
        return std::atan2(1.0, (x - x0_) / gamma_) / std::numbers::pi;
    }
    [[nodiscard]] double quantile(double p) const {
        detail::require_probability(p, "cauchy quantile");
        if (p < 0.5) return x0_ - gamma_ / std::tan(std::numbers::pi * p);
        return x0_ + gamma_ / std::tan(std::numbers::pi * (1.0 - p));
    }
    [[nodiscard]] double isf(double q) const {
        detail::require_probability(q, "cauchy isf");
        if (q < 0.5) return x0_ + gamma_ / std::tan(std::numbers::pi * q);
        return x0_ - gamma_ / std::tan(std::numbers::pi * (1.0 - q));
    }
    [[nodiscard]] double sample(Rng& rng) const { return quantile(rng.uniform()); }
    [[nodiscard]] Interval support() const noexcept { return {}; }
    [[nodiscard]] double mode() const noexcept { return x0_; }

private:
    double x0_;
    double gamma_;
};

/// Three-parameter Weibull with location x0, scale gamma and shape beta,
/// supported on [x0, +inf).
class TranslatedWeibull {
public:
    static constexpr std::string_view family_name = "weibull3";
    static constexpr std::array<std::string_view, 3> param_names{"x0", "gamma", "beta"};

    TranslatedWeibull(double x0, double gamma, double beta) : x0_(x0), gamma_(gamma), beta_(beta) {
        detail::require_finite(x0, "weibull x0");
        detail::require_positive(gamma, "weibull gamma");
        detail::require_positive(beta, "weibull beta");
    }

    [[nodiscard]] double x0() const noexcept { return x0_; }
    [[nodiscard]] double gamma() const noexcept { return gamma_; }
    [[nodiscard]] double beta() const noexcept { return beta_; }
    [[nodiscard]] std::array<double, 3> params() const noexcept { return {x0_, gamma_, beta_}; }

    [[nodiscard]] double pdf(double x) const noexcept {
        if (x < x0_) return 0.0;
        const double t = (x - x0_) / gamma_;
        if (t == 0.0) {
            if (beta_ == 1.0) return 1.0 / gamma_;
            return beta_ < 1.0 ? inf : 0.0;
        }
        return beta_ / gamma_ * std::pow(t, beta_ - 1.0) * std::exp(-std::pow(t, beta_));
    }
    [[nodiscard]] double log_pdf(double x) const noexcept {
        if (x < x0_) return -inf;
        const double t = (x - x0_) / gamma_;
        if (t == 0.0) return std::log(pdf(x));
        const double lt = std::log(t);
        return std::log(beta_ / gamma_) + (beta_ - 1.0) * lt - std::exp(beta_ * lt);
    }
    [[nodiscard]] double cdf(double x) const noexcept {
        if (x <= x0_) return 0.0;
        return -std::expm1(-std::pow((x - x0_) / gamma_, beta_));
    }
    [[nodiscard]] double sf(double x) const noexcept {
        if (x <= x0_) return 1.0;
        return std::exp(-std::pow((x - x0_) / gamma_, beta_));
    }
    [[nodiscard]] double quantile(double p) const {
        detail::require_probability(p, "weibull quantile");
        return x0_ + gamma_ * std::pow(-std::log1p(-p), 1.0 / beta_);
    }
    [[nodiscard]] double isf(double q) const {
        detail::require_probability(q, "weibull isf");
        return x0_ + gamma_ * std::pow(-std::log(q), 1.0 / beta_);
    }
    [[nodiscard]] double log_sf(double x) const noexcept {
        if (x <= x0_) return 0.0;
        return -std::pow((x - x0_) / gamma_, beta_);
    }
    /// Inverse of log_sf, for right tails whose survival underflows.
    [[nodiscard]] double isf_log(double log_q) const noexcept {
        return x0_ + gamma_ * std::pow(-log_q, 1.0 / beta_);
    }
    [[nodiscard]] double sample(Rng& rng) const { return isf(rng.uniform()); }
    [[nodiscard]] Interval support() const noexcept { return {x0_, inf}; }
    [[nodiscard]] double mode() const noexcept {
        if (beta_ <= 1.0) return x0_;
        return x0_ + gamma_ * std::pow((beta_ - 1.0) / beta_, 1.0 / beta_);
    }

private:
    double x0_;
    double gamma_;
    double beta_;
};

/// Generic quantile by bracketed bisection on the cdf, for families without
/// a closed-form inverse. Converges to an absolute bracket width of 1e-12
/// relative to the bracket scale.
template <ContinuousFamily D>
double invert_cdf(const D& d, double p) {
    detail::require_probability(p, "invert_cdf");
    const Interval sup = d.support();
    double lo = std::isfinite(sup.lo) ? sup.lo : d.mode() - 1.0;
    double hi = std::isfinite(sup.hi) ? sup.hi : d.mode() + 1.0;
    for (double step = 1.0; d.cdf(lo) > p; step *= 2.0) lo -= step;
    for (double step = 1.0; d.cdf(hi) < p; step *= 2.0) hi += step;
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (d.cdf(mid) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= 1e-12 * std::max(1.0, std::abs(mid))) break;
    }
    return 0.5 * (lo + hi);
}

/// Inverse-CDF window for drawing from a family restricted to an interval.
///
/// Intervals whose lower end sits above the median are handled in survival
/// coordinates so that right-tail masses keep their relative precision.
struct TruncationWindow {
    Interval iv;
    bool upper = false;  // window expressed in survival-function coordinates
    double a = 0.0;      // lower end of the window in the chosen coordinates
    double width = 0.0;  // probability mass of the interval
    bool log_upper = false;  // survival underflowed; sample from log-survival
    double ls_lo = 0.0;
    double ls_hi = 0.0;

    [[nodiscard]] double mass() const noexcept { return width; }
};

template <class D>
concept HasLogSurvival = requires(const D& d, double x) {
    { d.log_sf(x) } -> std::convertible_to<double>;
    { d.isf_log(x) } -> std::convertible_to<double>;
};

template <ContinuousFamily D>
TruncationWindow truncation_window(const D& d, Interval iv) {
    if (!(iv.lo < iv.hi)) throw parameter_error("truncation interval must satisfy lo < hi");
    TruncationWindow w;
    w.iv = iv;
    const double c_lo = d.cdf(iv.lo);
    if (c_lo > 0.5) {
        const double s_lo = d.sf(iv.lo);
        const double s_hi = d.sf(iv.hi);
        w.upper = true;
        w.a = s_hi;
        w.width = std::max(0.0, s_lo - s_hi);
        if constexpr (HasLogSurvival<D>) {
            if (s_lo < 1e-250) {
                w.ls_lo = d.log_sf(iv.lo);
                w.ls_hi = d.log_sf(iv.hi);
                w.log_upper = w.ls_lo > w.ls_hi;
            }
        }
    } else {
        w.a = c_lo;
        w.width = std::max(0.0, d.cdf(iv.hi) - c_lo);
    }
    return w;
}

template <ContinuousFamily D>
double interval_mass(const D& d, Interval iv) {
    return truncation_window(d, iv).mass();
}

/// log P(lo < X < hi), -inf when the mass is zero.
template <ContinuousFamily D>
double log_interval_mass(const D& d, Interval iv) {
    const TruncationWindow w = truncation_window(d, iv);
    if (w.log_upper) return w.ls_lo + std::log1p(-std::exp(w.ls_hi - w.ls_lo));
    return w.width > 0.0 ? std::log(w.width) : -inf;
}

/// Draw strictly inside `w.iv` from the family restricted to it.
template <ContinuousFamily D>
double sample_in_window(const D& d, const TruncationWindow& w, Rng& rng) {
    const Interval& iv = w.iv;
    if constexpr (HasLogSurvival<D>) {
        if (w.log_upper) {
            const double shrink = -std::expm1(w.ls_hi - w.ls_lo);
            for (int attempt = 0; attempt < 32; ++attempt) {
                const double ls = w.ls_lo + std::log1p(-rng.uniform() * shrink);
                const double x = d.isf_log(ls);
                if (iv.contains(x)) return x;
            }
        }
    }
    if (w.width > 0.0) {
        for (int attempt = 0; attempt < 32; ++attempt) {
            const double u = w.a + rng.uniform() * w.width;
            if (!(u > 0.0 && u < 1.0)) continue;
            const double x = w.upper ? d.isf(u) : d.quantile(u);
            if (iv.contains(x)) return x;
        }
    }
    // The window is too narrow for the inverse cdf to resolve (or its mass
    // underflowed). On a bounded interval with positive density the
    // restricted law is indistinguishable from uniform at this resolution.
    if (iv.bounded()) {
        const double mid = 0.5 * (iv.lo + iv.hi);
        if (d.pdf(mid) > 0.0) {
            for (int attempt = 0; attempt < 64; ++attempt) {
                const double x = iv.lo + rng.uniform() * (iv.hi - iv.lo);
                if (iv.contains(x)) return x;
            }
            if (iv.contains(mid)) return mid;
        }
    }
    throw infeasible_error("cannot sample from a zero-mass interval (" + std::to_string(iv.lo) + ", " +
                           std::to_string(iv.hi) + ")");
}

template <ContinuousFamily D>
double sample_truncated(const D& d, Interval iv, Rng& rng) {
    if (iv.lo == -inf && iv.hi == inf) return d.sample(rng);
    return sample_in_window(d, truncation_window(d, iv), rng);
}

}  // namespace rgibbs
