#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "diagnostics.hpp"
#include "distributions.hpp"
#include "errors.hpp"
#include "med_iqr_conditional.hpp"
#include "med_mad_conditional.hpp"
#include "order_stats.hpp"
#include "orderstat_engine.hpp"
#include "posterior_updates.hpp"
#include "quantile_conditional.hpp"
#include "rng.hpp"

namespace rgibbs {

using RobustConstraint = std::variant<QuantileConstraints, MedIqrConstraints, MedMadConstraints>;

inline std::size_t sample_size(const RobustConstraint& c) {
    return std::visit([](const auto& v) { return v.n; }, c);
}

inline const char* constraint_name(const RobustConstraint& c) {
    switch (c.index()) {
        case 0: return "quantiles";
        case 1: return "mediqr";
        default: return "medmad";
    }
}

/// Observed summary vector of a constraint, in the order used by ABC.
inline std::vector<double> observed_summary(const RobustConstraint& c) {
    if (const auto* q = std::get_if<QuantileConstraints>(&c)) return q->values;
    if (const auto* r = std::get_if<MedIqrConstraints>(&c)) return {r->m, r->iqr};
    const auto& d = std::get<MedMadConstraints>(c);
    return {d.m, d.s};
}

/// The same summaries computed from a sample.
inline std::vector<double> compute_summary(const RobustConstraint& c, std::vector<double>& x) {
    if (const auto* q = std::get_if<QuantileConstraints>(&c)) {
        std::sort(x.begin(), x.end());
        std::vector<double> out;
        for (double p : q->probs) out.push_back(empirical_quantile_sorted(x, p));
        return out;
    }
    if (std::holds_alternative<MedIqrConstraints>(c)) {
        std::sort(x.begin(), x.end());
        return {empirical_quantile_sorted(x, 0.5),
                empirical_quantile_sorted(x, 0.75) - empirical_quantile_sorted(x, 0.25)};
    }
    const double m = detail::median_inplace(x);
    for (double& v : x) v = std::abs(v - m);
    return {m, detail::median_inplace(x)};
}

struct GibbsConfig {
    std::size_t iterations = 10000;
    std::optional<std::size_t> burn_in;  // default: 5N after a deterministic start, else max(1000, T/10)
    std::size_t thin = 1;
    std::uint64_t seed = 1;
    std::uint64_t chain = 0;
    InitMode init = InitMode::automatic;
    MedMadInitOptions medmad_init;
    MedMadRule medmad_rule = MedMadRule::exact;
    std::size_t n_pairs = 0;  // 0 means N
    bool adapt = true;        // Robbins-Monro scale tuning during burn-in
    // Cauchy and Weibull with quantile or median/IQR data: random-walk steps
    // on theta given only the pinned order statistics, between the latent
    // sweep and the zone refill.
    std::size_t collapsed_steps = 5;
    std::optional<std::vector<double>> theta0;
    bool audit = false;  // recompute the robust statistics after every iteration
    std::function<void(std::size_t, std::span<const double>, std::span<const double>)> observer;
};

struct ChainOutput {
    std::vector<std::string> param_names;
    std::vector<std::vector<double>> draws;
    std::vector<std::pair<std::string, double>> acceptance;
    std::vector<std::size_t> census;  // median/MAD visit counts per census cell
    std::size_t burn_in = 0;
    std::size_t latent_draws = 0;
    double max_residual = 0.0;        // only with GibbsConfig::audit
    std::size_t audit_failures = 0;
    double wall_seconds = 0.0;
    std::string generator = Rng::generator_name;
};

template <class D>
struct FamilyTraits;

template <>
struct FamilyTraits<Gaussian> {
    using prior_type = GaussianPrior;
    static Gaussian make(std::span<const double> p) { return Gaussian(p[0], p[1]); }
};

template <>
struct FamilyTraits<Cauchy> {
    using prior_type = CauchyPriors;
    static Cauchy make(std::span<const double> p) { return Cauchy(p[0], p[1]); }
};

template <>
struct FamilyTraits<TranslatedWeibull> {
    using prior_type = WeibullPriors;
    static TranslatedWeibull make(std::span<const double> p) { return TranslatedWeibull(p[0], p[1], p[2]); }
};

namespace detail {

inline double normal_quantile(double p) { return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p); }

// Rough location, MAD-like spread and lowest plausible value implied by a
// constraint; used only to build a starting point.
struct RoughScale {
    double loc = 0.0;
    double mad = 1.0;
    double lowest = 0.0;
};

inline RoughScale rough_scale(const RobustConstraint& c) {
    RoughScale r;
    if (const auto* q = std::get_if<QuantileConstraints>(&c)) {
        std::size_t mid = 0;
        for (std::size_t j = 0; j < q->size(); ++j) {
            if (std::abs(q->probs[j] - 0.5) < std::abs(q->probs[mid] - 0.5)) mid = j;
        }
        r.loc = q->values[mid];
        if (q->size() >= 2) {
            const double z = normal_quantile(q->probs.back()) - normal_quantile(q->probs.front());
            r.mad = (q->values.back() - q->values.front()) / z / EfficiencyConstants::c;
        } else {
            r.mad = std::max(1.0, 0.1 * std::abs(r.loc));
        }
        r.lowest = q->values.front() - r.mad;
    } else if (const auto* m = std::get_if<MedIqrConstraints>(&c)) {
        r.loc = m->m;
        r.mad = 0.5 * m->iqr;
        r.lowest = m->m - 0.75 * m->iqr;
    } else {
        const auto& d = std::get<MedMadConstraints>(c);
        r.loc = d.m;
        r.mad = d.s;
        r.lowest = d.m - 1.5 * d.s;
    }
    return r;
}

inline Gaussian default_theta0(const RobustConstraint& c, const GaussianPrior& p, Gaussian*) {
    const RoughScale r = rough_scale(c);
    const double sd = EfficiencyConstants::c * r.mad;
    return Gaussian(r.loc, p.kind == GaussianPrior::Kind::known_variance ? p.sigma2 : sd * sd);
}

inline Cauchy default_theta0(const RobustConstraint& c, const CauchyPriors&, Cauchy*) {
    const RoughScale r = rough_scale(c);
    return Cauchy(r.loc, r.mad);
}

// Shape 2; scale matched to the spread, location below every ladder point.
inline TranslatedWeibull default_theta0(const RobustConstraint& c, const WeibullPriors&, TranslatedWeibull*) {
    const RoughScale r = rough_scale(c);
    const double gamma = r.mad / 0.3;
    const double x0 = std::min(r.loc - 0.83 * gamma, r.lowest - r.mad);
    return TranslatedWeibull(x0, gamma, 2.0);
}

inline Gaussian theta_step(const Gaussian&, std::span<const double> x, const GaussianPrior& p, Rng& rng,
                           RandomWalkTuning<2>&, const ScaleAdapter*) {
    return gaussian_theta_update(x, p, rng);
}

inline Cauchy theta_step(const Cauchy& cur, std::span<const double> x, const CauchyPriors& p, Rng& rng,
                         RandomWalkTuning<2>& tune, const ScaleAdapter* adapt) {
    return mh_theta_update(cur, x, p, rng, tune, adapt);
}

inline TranslatedWeibull theta_step(const TranslatedWeibull& cur, std::span<const double> x,
                                    const WeibullPriors& p, Rng& rng, RandomWalkTuning<3>& tune,
                                    const ScaleAdapter* adapt) {
    return mh_theta_update(cur, x, p, rng, tune, adapt);
}

template <std::size_t K>
void initial_walk(RandomWalkTuning<K>& tune, double mad, std::size_t n) {
    const double rn = std::sqrt(static_cast<double>(std::max<std::size_t>(n, 1)));
    tune.log_sd[0] = std::log(2.0 * mad / rn);
    for (std::size_t k = 1; k < K; ++k) tune.log_sd[k] = std::log(1.0 / rn);
}

using LatentState = std::variant<QuantileState, MedIqrState, MedMadState>;

template <ContinuousFamily D>
LatentState init_latent(const RobustConstraint& c, const D& theta0, Rng& rng, const GibbsConfig& cfg) {
    if (const auto* q = std::get_if<QuantileConstraints>(&c)) return init_quantile_state(*q, theta0, rng);
    if (const auto* m = std::get_if<MedIqrConstraints>(&c)) return init_mediqr_state(*m, theta0, rng, cfg.init);
    MedMadInitOptions opt = cfg.medmad_init;
    if (cfg.init != InitMode::automatic) opt.mode = cfg.init;
    return init_medmad_state(std::get<MedMadConstraints>(c), theta0, rng, opt, cfg.medmad_rule);
}

inline bool deterministic_start(const RobustConstraint& c, const GibbsConfig& cfg, const Interval& sup) {
    if (std::holds_alternative<QuantileConstraints>(c)) return true;
    InitMode mode = cfg.init;
    if (mode == InitMode::automatic && std::holds_alternative<MedMadConstraints>(c)) mode = cfg.medmad_init.mode;
    if (mode == InitMode::automatic) return !(sup.lo == -inf && sup.hi == inf);
    return mode == InitMode::deterministic;
}

}  // namespace detail

/// 5N after a deterministic start, else max(1000, T/10); never more than T/2.
inline std::size_t default_burn_in(std::size_t iterations, std::size_t n, bool deterministic_init) {
    const std::size_t b = deterministic_init ? 5 * n : std::max<std::size_t>(1000, iterations / 10);
    return std::min(b, iterations / 2);
}

/// Two-block Gibbs sampler: X given the robust statistics and theta, then
/// theta given X.
template <ContinuousFamily D>
ChainOutput run_chain(const RobustConstraint& constraint, const typename FamilyTraits<D>::prior_type& prior,
                      const GibbsConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    constexpr std::size_t K = D::param_names.size();
    const std::size_t n = sample_size(constraint);
    if (cfg.iterations == 0) throw config_error("iterations must be > 0");
    if (cfg.thin == 0) throw config_error("thin must be >= 1");

    D theta = cfg.theta0 ? FamilyTraits<D>::make(*cfg.theta0)
                         : detail::default_theta0(constraint, prior, static_cast<D*>(nullptr));
    const bool det = detail::deterministic_start(constraint, cfg, theta.support());
    const std::size_t burn = cfg.burn_in.value_or(default_burn_in(cfg.iterations, n, det));
    if (burn >= cfg.iterations) {
        throw config_error("burn-in (" + std::to_string(burn) + ") must be smaller than the iteration count (" +
                           std::to_string(cfg.iterations) + ")");
    }

    Rng rng(cfg.seed, cfg.chain);
    detail::LatentState latent = detail::init_latent(constraint, theta, rng, cfg);

    RandomWalkTuning<K> tune;
    detail::initial_walk(tune, detail::rough_scale(constraint).mad, n);
    RandomWalkTuning<K> pinned_tune = tune;
    const auto collapsed = [&](PinnedOrderStats& eng, const ScaleAdapter* adapt) {
        if constexpr (!std::is_same_v<D, Gaussian>) {
            const auto loglik = [&](const D& d) { return eng.log_density(d, eng.free_values()); };
            for (std::size_t k = 0; k < cfg.collapsed_steps; ++k) {
                theta = mh_theta_step(theta, loglik, prior, rng, pinned_tune, adapt);
            }
        }
    };
    ScaleAdapter adapter;
    AcceptanceCounter latent_acc;

    ChainOutput out;
    out.burn_in = burn;
    for (auto name : D::param_names) out.param_names.emplace_back(name);
    out.draws.reserve((cfg.iterations - burn) / cfg.thin);
    if (const auto* mm = std::get_if<MedMadState>(&latent)) out.census.assign(mm->census_cells(), 0);

    const std::size_t n_pairs = cfg.n_pairs == 0 ? n : cfg.n_pairs;
    std::vector<double> params(K);
    for (std::size_t t = 0; t < cfg.iterations; ++t) {
        adapter.steps = t;
        const ScaleAdapter* adapt = cfg.adapt && t < burn ? &adapter : nullptr;
        std::span<const double> x;
        if (auto* q = std::get_if<QuantileState>(&latent)) {
            const std::size_t acc = q->engine().mh_sweep(theta, rng, adapt);
            latent_acc.proposed += q->engine().free_coordinates().size();
            latent_acc.accepted += acc;
            collapsed(q->engine(), adapt);
            q->engine().refill(theta, rng);
            out.latent_draws += n - q->engine().spec().indices.size();
            x = q->x();
        } else if (auto* r = std::get_if<MedIqrState>(&latent)) {
            const std::size_t acc = r->engine().mh_sweep(theta, rng, adapt);
            latent_acc.proposed += r->engine().free_coordinates().size();
            latent_acc.accepted += acc;
            collapsed(r->engine(), adapt);
            r->engine().refill(theta, rng);
            out.latent_draws += n - r->engine().spec().indices.size();
            x = r->x();
        } else {
            auto& mm = std::get<MedMadState>(latent);
            mm.sweep(theta, rng, n_pairs);
            ++out.census[mm.census_index()];
            x = mm.x();
        }
        if (cfg.audit) {
            double res = 0.0;
            bool ok = true;
            std::visit(
                [&](const auto& st) {
                    const auto a = st.audit();
                    ok = a.ok();
                    if constexpr (std::is_same_v<std::decay_t<decltype(st)>, QuantileState>) {
                        res = a.max_residual;
                    } else if constexpr (std::is_same_v<std::decay_t<decltype(st)>, MedIqrState>) {
                        res = std::max(a.median_residual, a.iqr_residual);
                    } else {
                        res = std::max(a.median_residual, a.mad_residual);
                    }
                },
                latent);
            out.max_residual = std::max(out.max_residual, res);
            out.audit_failures += ok ? 0 : 1;
        }

        theta = detail::theta_step(theta, x, prior, rng, tune, adapt);

        const auto p = theta.params();
        std::copy(p.begin(), p.end(), params.begin());
        if (cfg.observer) cfg.observer(t, x, params);
        if (t >= burn && (t - burn + 1) % cfg.thin == 0) out.draws.push_back(params);
    }

    if (const auto* mm = std::get_if<MedMadState>(&latent)) {
        out.latent_draws = mm->latent_draws();
        if (!mm->constraints().odd()) {
            out.acceptance.emplace_back("median_pair", mm->median_pair_acceptance().rate());
            out.acceptance.emplace_back("mad_pair", mm->mad_pair_acceptance().rate());
        }
    } else if (latent_acc.proposed > 0) {
        out.acceptance.emplace_back("orderstats", latent_acc.rate());
    }
    if constexpr (!std::is_same_v<D, Gaussian>) {
        for (std::size_t k = 0; k < K; ++k) {
            out.acceptance.emplace_back(std::string(D::param_names[k]), tune.accept[k].rate());
        }
        for (std::size_t k = 0; k < K; ++k) {
            if (pinned_tune.accept[k].proposed > 0) {
                out.acceptance.emplace_back("pinned_" + std::string(D::param_names[k]), pinned_tune.accept[k].rate());
            }
        }
    }
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

}  // namespace rgibbs
