#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>

#include "distributions.hpp"
#include "errors.hpp"
#include "orderstat_engine.hpp"
#include "rng.hpp"

namespace rgibbs {

/// Normal-inverse-gamma: sigma2 ~ InvGamma(alpha, beta), mu | sigma2 ~
/// N(mu0, sigma2 / nu).
struct NigParams {
    double mu0 = 0.0;
    double nu = 1.0;
    double alpha = 1.0;
    double beta = 1.0;

    void validate() const {
        if (!std::isfinite(mu0) || !(nu > 0.0) || !(alpha > 0.0) || !(beta > 0.0)) {
            throw parameter_error("NIG parameters need finite mu0 and nu, alpha, beta > 0");
        }
    }

    /// Marginal of sigma2 is InvGamma(alpha, beta); of mu, a Student t with
    /// 2 alpha degrees of freedom, location mu0 and scale sqrt(beta / (alpha nu)).
    [[nodiscard]] double mu_scale() const noexcept { return std::sqrt(beta / (alpha * nu)); }
    [[nodiscard]] double sigma2_mean() const noexcept { return alpha > 1.0 ? beta / (alpha - 1.0) : inf; }
};

struct EfficiencyConstants {
    static constexpr double eff_med = 2.0 / std::numbers::pi;
    static constexpr double eff_mad = 0.3675;
    /// 1 / Phi^{-1}(3/4): converts a MAD into a Gaussian standard deviation.
    static constexpr double c = 1.482602218505602;
};

/// Conjugate update from the sample size, mean and biased variance.
inline NigParams nig_posterior_from_moments(const NigParams& prior, double n, double mean, double var) {
    prior.validate();
    NigParams post;
    post.nu = prior.nu + n;
    post.mu0 = (prior.nu * prior.mu0 + n * mean) / post.nu;
    post.alpha = prior.alpha + 0.5 * n;
    const double shift = mean - prior.mu0;
    post.beta = prior.beta + 0.5 * (n * var + n * prior.nu / (prior.nu + n) * shift * shift);
    return post;
}

inline NigParams nig_posterior_given_x(std::span<const double> x, const NigParams& prior) {
    if (x.empty()) throw parameter_error("nig_posterior_given_x: empty sample");
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return nig_posterior_from_moments(prior, n, mean, ss / n);
}

inline Gaussian sample_nig(const NigParams& p, Rng& rng) {
    p.validate();
    const double sigma2 = p.beta / rng.gamma(p.alpha);
    const double mu = p.mu0 + std::sqrt(sigma2 / p.nu) * rng.normal();
    return Gaussian(mu, sigma2);
}

/// Closed-form approximation of the posterior given only the median m and
/// MAD s of N Gaussian observations.
inline NigParams nig_approx_medmad(double m, double s, double n, const NigParams& prior) {
    prior.validate();
    if (!(s > 0.0)) throw parameter_error("nig_approx_medmad: MAD must be > 0");
    if (!(n >= 0.0)) throw parameter_error("nig_approx_medmad: N must be >= 0");
    const double n_med = EfficiencyConstants::eff_med * n;
    const double n_mad = EfficiencyConstants::eff_mad * n;
    const double cs = EfficiencyConstants::c * s;
    NigParams post;
    post.nu = prior.nu + n_med;
    post.mu0 = (prior.nu * prior.mu0 + n_med * m) / post.nu;
    post.alpha = prior.alpha + 0.5 * n_mad;
    const double shift = m - prior.mu0;
    post.beta = prior.beta + 0.5 * (n_mad * cs * cs + n_mad * prior.nu / (prior.nu + n_mad) * shift * shift);
    return post;
}

/// Gaussian priors: conjugate NIG, or known variance with a flat prior on mu.
struct GaussianPrior {
    enum class Kind { nig, known_variance };
    Kind kind = Kind::nig;
    NigParams nig{0.0, 0.001, 0.001, 0.001};
    double sigma2 = 1.0;

    static GaussianPrior known_variance(double s2) {
        GaussianPrior p;
        p.kind = Kind::known_variance;
        p.sigma2 = s2;
        return p;
    }
    [[nodiscard]] bool proper() const noexcept { return kind == Kind::nig; }
};

struct CauchyPriors {
    double loc_center = 0.0;
    double loc_scale = 10.0;
    double scale_shape = 1.0;
    double scale_rate = 0.01;

    void validate() const {
        if (!(loc_scale > 0.0) || !(scale_shape > 0.0) || !(scale_rate > 0.0)) {
            throw parameter_error("Cauchy priors need positive scale, shape and rate");
        }
    }
    [[nodiscard]] bool proper() const noexcept { return true; }
};

/// Flat prior on the location, Gamma(shape, rate) on scale and shape.
struct WeibullPriors {
    double gamma_shape = 1.0;
    double gamma_rate = 0.01;
    double beta_shape = 1.0;
    double beta_rate = 0.01;

    void validate() const {
        if (!(gamma_shape > 0.0) || !(gamma_rate > 0.0) || !(beta_shape > 0.0) || !(beta_rate > 0.0)) {
            throw parameter_error("Weibull priors need positive shapes and rates");
        }
    }
    [[nodiscard]] bool proper() const noexcept { return false; }
};

namespace detail {

inline double log_gamma_density(double x, double shape, double rate) {
    if (!(x > 0.0)) return -inf;
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

inline double log_cauchy_density(double x, double center, double scale) {
    const double z = (x - center) / scale;
    return -std::log(std::numbers::pi * scale) - std::log1p(z * z);
}

template <ContinuousFamily D>
double log_likelihood(const D& d, std::span<const double> x) {
    double out = 0.0;
    for (double v : x) out += d.log_pdf(v);
    return std::isnan(out) ? -inf : out;
}

inline double log_likelihood(const Cauchy& d, std::span<const double> x) {
    const double inv = 1.0 / d.gamma();
    double out = 0.0;
    for (double v : x) {
        const double z = (v - d.x0()) * inv;
        out -= std::log1p(z * z);
    }
    out -= static_cast<double>(x.size()) * std::log(std::numbers::pi * d.gamma());
    return std::isnan(out) ? -inf : out;
}

inline double log_likelihood(const TranslatedWeibull& d, std::span<const double> x) {
    const double inv = 1.0 / d.gamma();
    const double b = d.beta();
    double sum_log = 0.0;
    double sum_pow = 0.0;
    for (double v : x) {
        const double t = (v - d.x0()) * inv;
        if (!(t > 0.0)) return -inf;
        const double lt = std::log(t);
        sum_log += lt;
        sum_pow += std::exp(b * lt);
    }
    const double out = static_cast<double>(x.size()) * std::log(b * inv) + (b - 1.0) * sum_log - sum_pow;
    return std::isnan(out) ? -inf : out;
}

}  // namespace detail

/// Per-component random-walk scales with acceptance bookkeeping.
template <std::size_t K>
struct RandomWalkTuning {
    std::array<double, K> log_sd{};
    std::array<AcceptanceCounter, K> accept{};
};

inline double log_prior(const Cauchy& d, const CauchyPriors& p) {
    return detail::log_cauchy_density(d.x0(), p.loc_center, p.loc_scale) +
           detail::log_gamma_density(d.gamma(), p.scale_shape, p.scale_rate);
}

inline double log_prior(const TranslatedWeibull& d, const WeibullPriors& p) {
    return detail::log_gamma_density(d.gamma(), p.gamma_shape, p.gamma_rate) +
           detail::log_gamma_density(d.beta(), p.beta_shape, p.beta_rate);
}

namespace detail {

// One Metropolis step on component k of a parameter vector. Positive
// components (log_walk set) move on the log scale; the Jacobian enters the
// ratio.
template <class Make, class Target, std::size_t K>
void rw_step(std::array<double, K>& theta, double& cur, std::size_t k, bool log_walk, Make make, Target target,
             Rng& rng, RandomWalkTuning<K>& tune, const ScaleAdapter* adapt) {
    std::array<double, K> cand = theta;
    const double sd = std::exp(tune.log_sd[k]);
    double log_jac = 0.0;
    if (log_walk) {
        const double l = std::log(theta[k]) + sd * rng.normal();
        cand[k] = std::exp(l);
        log_jac = l - std::log(theta[k]);
    } else {
        cand[k] = theta[k] + sd * rng.normal();
    }
    bool ok = false;
    bool valid = true;
    for (double v : cand) valid = valid && std::isfinite(v);
    for (std::size_t t = 1; t < K; ++t) valid = valid && cand[t] > 0.0;  // scale and shape
    if (valid) {
        const double prop = target(make(cand));
        ok = prop > -inf && std::log(rng.uniform()) < prop - cur + log_jac;
        if (ok) {
            theta = cand;
            cur = prop;
        }
    }
    tune.accept[k].add(ok);
    if (adapt != nullptr) adapt->update(tune.log_sd[k], ok);
}

}  // namespace detail

/// Random-walk Metropolis within Gibbs targeting prior x `loglik`: the
/// location moves on its own scale, scale and shape on the log scale.
template <class LogLik>
Cauchy mh_theta_step(const Cauchy& cur_d, LogLik loglik, const CauchyPriors& pri, Rng& rng, RandomWalkTuning<2>& tune,
                     const ScaleAdapter* adapt = nullptr) {
    std::array<double, 2> th{cur_d.x0(), cur_d.gamma()};
    const auto make = [](const std::array<double, 2>& a) { return Cauchy(a[0], a[1]); };
    const auto target = [&](const Cauchy& d) { return log_prior(d, pri) + loglik(d); };
    double cur = target(cur_d);
    detail::rw_step(th, cur, 0, false, make, target, rng, tune, adapt);
    detail::rw_step(th, cur, 1, true, make, target, rng, tune, adapt);
    return make(th);
}

template <class LogLik>
TranslatedWeibull mh_theta_step(const TranslatedWeibull& cur_d, LogLik loglik, const WeibullPriors& pri, Rng& rng,
                                RandomWalkTuning<3>& tune, const ScaleAdapter* adapt = nullptr) {
    std::array<double, 3> th{cur_d.x0(), cur_d.gamma(), cur_d.beta()};
    const auto make = [](const std::array<double, 3>& a) { return TranslatedWeibull(a[0], a[1], a[2]); };
    const auto target = [&](const TranslatedWeibull& d) { return log_prior(d, pri) + loglik(d); };
    double cur = target(cur_d);
    detail::rw_step(th, cur, 0, false, make, target, rng, tune, adapt);
    detail::rw_step(th, cur, 1, true, make, target, rng, tune, adapt);
    detail::rw_step(th, cur, 2, true, make, target, rng, tune, adapt);
    return make(th);
}

/// Random-walk Metropolis within Gibbs on (x0, log gamma), targeting
/// prior x likelihood of the full latent sample.
inline Cauchy mh_theta_update(const Cauchy& cur_d, std::span<const double> x, const CauchyPriors& pri, Rng& rng,
                              RandomWalkTuning<2>& tune, const ScaleAdapter* adapt = nullptr) {
    return mh_theta_step(cur_d, [&](const Cauchy& d) { return detail::log_likelihood(d, x); }, pri, rng, tune, adapt);
}

/// Same on (x0, log gamma, log beta); a location above min(X) has zero
/// likelihood and is rejected.
inline TranslatedWeibull mh_theta_update(const TranslatedWeibull& cur_d, std::span<const double> x,
                                         const WeibullPriors& pri, Rng& rng, RandomWalkTuning<3>& tune,
                                         const ScaleAdapter* adapt = nullptr) {
    const double xmin = x.empty() ? inf : *std::min_element(x.begin(), x.end());
    const auto loglik = [&](const TranslatedWeibull& d) {
        return d.x0() < xmin ? detail::log_likelihood(d, x) : -inf;
    };
    return mh_theta_step(cur_d, loglik, pri, rng, tune, adapt);
}

/// Exact Gibbs draw of (mu, sigma2) given the full latent sample.
inline Gaussian gaussian_theta_update(std::span<const double> x, const GaussianPrior& pri, Rng& rng) {
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    if (pri.kind == GaussianPrior::Kind::known_variance) {
        return Gaussian(mean + std::sqrt(pri.sigma2 / n) * rng.normal(), pri.sigma2);
    }
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return sample_nig(nig_posterior_from_moments(pri.nig, n, mean, ss / n), rng);
}

}  // namespace rgibbs
