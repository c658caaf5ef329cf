#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <chrono>
#include <numbers>
#include <optional>
#include <queue>
#include <string>
#include <thread>
#include <vector>

#include "distributions.hpp"
#include "errors.hpp"
#include "posterior_updates.hpp"
#include "rng.hpp"
#include "sampler.hpp"

namespace rgibbs {

struct AbcConfig {
    std::size_t n_sims = 100000;
    std::size_t keep = 1000;
    std::uint64_t seed = 1;
    std::size_t threads = 0;  // 0: hardware concurrency
    std::size_t pilot = 0;    // 0: min(n_sims, 10000)
    std::size_t chunk = 1024;

    void validate() const {
        if (n_sims == 0) throw config_error("abc: n_sims must be > 0");
        if (keep == 0) throw config_error("abc: keep must be > 0");
        if (keep > n_sims) {
            throw config_error("abc: keep (" + std::to_string(keep) + ") must not exceed n_sims (" +
                               std::to_string(n_sims) + ")");
        }
        if (chunk == 0) throw config_error("abc: chunk must be > 0");
    }
};

struct AbcOutput {
    std::vector<std::string> param_names;
    std::vector<std::vector<double>> draws;  // sorted by distance
    std::vector<double> distances;
    std::vector<double> observed;
    std::vector<double> scale;  // prior-predictive sd of each summary
    std::size_t n_sims = 0;
    std::size_t invalid = 0;  // kept slots whose prior draw overflowed
    double wall_seconds = 0.0;
    std::string generator = Rng::generator_name;
};

namespace detail {

inline std::optional<Gaussian> prior_draw(const GaussianPrior& p, Rng& rng) {
    if (!p.proper()) throw config_error("abc: the known-variance Gaussian prior has a flat mean and cannot be sampled");
    const double sigma2 = p.nig.beta / rng.gamma(p.nig.alpha);
    const double mu = p.nig.mu0 + std::sqrt(sigma2 / p.nig.nu) * rng.normal();
    if (!std::isfinite(mu) || !(sigma2 > 0.0) || !std::isfinite(sigma2)) return std::nullopt;
    return Gaussian(mu, sigma2);
}

inline std::optional<Cauchy> prior_draw(const CauchyPriors& p, Rng& rng) {
    const double x0 = p.loc_center + p.loc_scale * std::tan(std::numbers::pi * (rng.uniform() - 0.5));
    const double g = rng.gamma(p.scale_shape) / p.scale_rate;
    if (!std::isfinite(x0) || !(g > 0.0) || !std::isfinite(g)) return std::nullopt;
    return Cauchy(x0, g);
}

inline std::optional<TranslatedWeibull> prior_draw(const WeibullPriors&, Rng&) {
    throw config_error("abc: the Weibull location prior is flat and cannot be sampled");
}

struct AbcHit {
    double distance;
    std::size_t index;
    std::vector<double> params;

    bool operator<(const AbcHit& o) const noexcept {
        return distance != o.distance ? distance < o.distance : index < o.index;
    }
};

// Simulation `index` always uses the stream of its chunk, so results do not
// depend on the thread count.
template <ContinuousFamily D, class Prior, class Visit>
void simulate_chunk(const RobustConstraint& c, const Prior& prior, std::uint64_t seed, std::uint64_t stream,
                    std::size_t first, std::size_t last, Visit&& visit) {
    Rng rng(seed, stream);
    const std::size_t n = sample_size(c);
    std::vector<double> x(n);
    for (std::size_t s = first; s < last; ++s) {
        const auto theta = prior_draw(prior, rng);
        if (!theta) {
            visit(s, static_cast<const D*>(nullptr), std::vector<double>{});
            continue;
        }
        for (double& v : x) v = theta->sample(rng);
        visit(s, &*theta, compute_summary(c, x));
    }
}

}  // namespace detail

/// Rejection ABC: draw theta from the prior, simulate N observations, keep
/// the `keep` simulations whose summaries are closest to the observed ones.
/// Each summary component is divided by its prior-predictive sd.
template <ContinuousFamily D>
AbcOutput abc_rejection(const RobustConstraint& observed, const typename FamilyTraits<D>::prior_type& prior,
                        const AbcConfig& cfg) {
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();
    AbcOutput out;
    for (auto name : D::param_names) out.param_names.emplace_back(name);
    out.observed = observed_summary(observed);
    out.n_sims = cfg.n_sims;
    const std::size_t dim = out.observed.size();

    // Pilot run on its own stream for the standardization.
    const std::size_t pilot = cfg.pilot == 0 ? std::min<std::size_t>(cfg.n_sims, 10000) : cfg.pilot;
    std::vector<double> sum(dim, 0.0);
    std::vector<double> sum2(dim, 0.0);
    std::vector<double> shift = out.observed;
    std::size_t used = 0;
    detail::simulate_chunk<D>(observed, prior, cfg.seed, 0, 0, pilot,
                              [&](std::size_t, const D* theta, const std::vector<double>& s) {
                                  if (theta == nullptr) return;
                                  for (std::size_t k = 0; k < dim; ++k) {
                                      if (!std::isfinite(s[k])) return;
                                  }
                                  for (std::size_t k = 0; k < dim; ++k) {
                                      const double d = s[k] - shift[k];
                                      sum[k] += d;
                                      sum2[k] += d * d;
                                  }
                                  ++used;
                              });
    out.scale.assign(dim, 1.0);
    if (used >= 2) {
        const double u = static_cast<double>(used);
        for (std::size_t k = 0; k < dim; ++k) {
            const double var = (sum2[k] - sum[k] * sum[k] / u) / (u - 1.0);
            if (var > 0.0 && std::isfinite(var)) out.scale[k] = std::sqrt(var);
        }
    }

    const std::size_t chunks = (cfg.n_sims + cfg.chunk - 1) / cfg.chunk;
    std::size_t threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
    threads = std::min(threads, chunks);
    std::atomic<std::size_t> next{0};
    std::vector<std::priority_queue<detail::AbcHit>> best(threads);
    const auto worker = [&](std::size_t w) {
        auto& heap = best[w];
        for (std::size_t ch = next++; ch < chunks; ch = next++) {
            const std::size_t first = ch * cfg.chunk;
            const std::size_t last = std::min(cfg.n_sims, first + cfg.chunk);
            detail::simulate_chunk<D>(observed, prior, cfg.seed, ch + 1, first, last,
                                      [&](std::size_t idx, const D* theta, const std::vector<double>& s) {
                                          double d = inf;
                                          std::vector<double> p;
                                          if (theta != nullptr) {
                                              double acc = 0.0;
                                              for (std::size_t k = 0; k < dim; ++k) {
                                                  const double z = (s[k] - out.observed[k]) / out.scale[k];
                                                  acc += z * z;
                                              }
                                              d = std::isnan(acc) ? inf : std::sqrt(acc);
                                              const auto a = theta->params();
                                              p.assign(a.begin(), a.end());
                                          }
                                          detail::AbcHit hit{d, idx, std::move(p)};
                                          if (heap.size() < cfg.keep) {
                                              heap.push(std::move(hit));
                                          } else if (hit < heap.top()) {
                                              heap.pop();
                                              heap.push(std::move(hit));
                                          }
                                      });
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < threads; ++w) pool.emplace_back(worker, w);
    worker(0);
    for (auto& t : pool) t.join();

    std::vector<detail::AbcHit> all;
    for (auto& h : best) {
        while (!h.empty()) {
            all.push_back(h.top());
            h.pop();
        }
    }
    std::sort(all.begin(), all.end());
    all.resize(std::min(all.size(), cfg.keep));
    for (auto& h : all) {
        if (h.params.empty()) {
            ++out.invalid;
            continue;
        }
        out.draws.push_back(std::move(h.params));
        out.distances.push_back(h.distance);
    }
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

}  // namespace rgibbs
