#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "med_iqr_conditional.hpp"
#include "med_mad_conditional.hpp"
#include "quantile_conditional.hpp"
#include "sampler.hpp"

namespace rgibbs {

/// One run of the constraint-preservation check.
struct InvariantCase {
    std::string engine;
    std::string family;
    std::size_t n = 0;
    std::size_t iterations = 0;
    double max_residual = 0.0;
    std::size_t failures = 0;
    double wall_seconds = 0.0;

    [[nodiscard]] bool ok(double tol = 1e-9) const noexcept { return failures == 0 && max_residual < tol; }
};

/// Constraints exercised by the preservation suite.
inline std::vector<RobustConstraint> invariant_constraints(bool quantiles, bool mediqr, bool medmad) {
    std::vector<RobustConstraint> out;
    if (quantiles) {
        // Quantiles of N(0.3, 1) at p_j = j / (M + 1).
        out.emplace_back(QuantileConstraints(1000, {0.5}, {0.3}));
        out.emplace_back(QuantileConstraints(1000, {0.25, 0.5, 0.75}, {-0.374489750196, 0.3, 0.974489750196}));
        std::vector<double> p;
        std::vector<double> v;
        for (int j = 1; j <= 9; ++j) {
            p.push_back(j / 10.0);
            v.push_back(0.3 + detail::normal_quantile(j / 10.0));
        }
        out.emplace_back(QuantileConstraints(1000, p, v));
    }
    if (mediqr) {
        for (std::size_t n : {101, 103, 100, 102}) out.emplace_back(MedIqrConstraints(0.3, 1.35, n));
    }
    if (medmad) {
        for (std::size_t n : {9, 101, 12, 100}) out.emplace_back(MedMadConstraints(0.3, 0.7, n));
    }
    return out;
}

namespace detail {

template <ContinuousFamily D>
InvariantCase invariant_case(const RobustConstraint& c, const typename FamilyTraits<D>::prior_type& prior,
                             const char* family, std::size_t iterations, std::uint64_t seed) {
    GibbsConfig cfg;
    cfg.iterations = iterations;
    cfg.burn_in = 0;
    cfg.seed = seed;
    cfg.audit = true;
    const ChainOutput out = run_chain<D>(c, prior, cfg);
    InvariantCase r;
    r.engine = constraint_name(c);
    r.family = family;
    r.n = sample_size(c);
    r.iterations = iterations;
    r.max_residual = out.max_residual;
    r.failures = out.audit_failures;
    r.wall_seconds = out.wall_seconds;
    return r;
}

}  // namespace detail

/// Runs every constraint under the Gaussian, Cauchy and Weibull families with
/// an audit after each iteration.
inline std::vector<InvariantCase> invariant_suite(const std::vector<RobustConstraint>& constraints,
                                                  std::size_t iterations, std::uint64_t seed = 1) {
    std::vector<InvariantCase> out;
    for (const auto& c : constraints) {
        out.push_back(detail::invariant_case<Gaussian>(c, GaussianPrior{}, "gaussian", iterations, seed));
        out.push_back(detail::invariant_case<Cauchy>(c, CauchyPriors{}, "cauchy", iterations, seed));
        out.push_back(detail::invariant_case<TranslatedWeibull>(c, WeibullPriors{}, "weibull", iterations, seed));
    }
    return out;
}

struct CensusRun {
    std::string start;
    std::vector<std::size_t> census;
    std::size_t covered_at = 0;  // sweep at which every cell had been seen, 0 if never

    [[nodiscard]] bool covered() const noexcept { return covered_at > 0; }
};

/// Median/MAD chains with theta held fixed, started from every deterministic
/// ladder. Odd N starts from each (k, delta); even N from each pin-side pair.
template <ContinuousFamily D>
std::vector<CensusRun> medmad_census(const MedMadConstraints& c, const D& theta, std::size_t sweeps,
                                     std::uint64_t seed = 1) {
    std::vector<MedMadInitOptions> starts;
    std::vector<std::string> labels;
    if (c.odd()) {
        for (std::size_t k = 1; k <= c.half(); ++k) {
            for (int delta : {0, 1}) {
                MedMadInitOptions o;
                o.mode = InitMode::deterministic;
                o.k = k;
                o.delta = delta;
                starts.push_back(o);
                labels.push_back("k=" + std::to_string(k) + ",delta=" + std::to_string(delta));
            }
        }
    } else {
        for (bool near : {false, true}) {
            for (bool far : {false, true}) {
                MedMadInitOptions o;
                o.mode = InitMode::deterministic;
                o.near_pin_above = near;
                o.far_pin_above = far;
                starts.push_back(o);
                labels.push_back(std::string("near=") + (near ? "above" : "below") + ",far=" +
                                 (far ? "above" : "below"));
            }
        }
    }
    std::vector<CensusRun> out;
    for (std::size_t s = 0; s < starts.size(); ++s) {
        Rng rng(seed, s);
        MedMadState st = init_medmad_state(c, theta, rng, starts[s]);
        CensusRun run;
        run.start = labels[s];
        run.census.assign(st.census_cells(), 0);
        std::size_t seen = 0;
        for (std::size_t t = 1; t <= sweeps; ++t) {
            gibbs_sweep_medmad(st, theta, rng);
            if (run.census[st.census_index()]++ == 0 && ++seen == run.census.size()) run.covered_at = t;
        }
        out.push_back(std::move(run));
    }
    return out;
}

struct NegativeControl {
    std::string engine;
    bool healthy_passes = false;
    bool corruption_detected = false;

    [[nodiscard]] bool ok() const noexcept { return healthy_passes && corruption_detected; }
};

/// Builds a valid state for each engine, checks that its audit passes, then
/// overwrites one pinned coordinate and checks that the audit fails.
inline std::vector<NegativeControl> corrupted_state_controls(std::uint64_t seed = 1) {
    const Gaussian g(0, 1);
    Rng rng(seed);
    std::vector<NegativeControl> out;
    {
        QuantileState st = init_quantile_state(QuantileConstraints(41, {0.22, 0.51, 0.83}, {-0.8, 0.05, 0.95}), g, rng);
        NegativeControl r{"quantiles", st.audit().ok(), false};
        auto& x = st.engine().raw();
        x[st.engine().spec().indices[1] - 1] += 0.25;
        r.corruption_detected = !st.audit().ok();
        out.push_back(r);
    }
    {
        MedIqrState st = init_mediqr_state(MedIqrConstraints(0.0, 1.0, 21), g, rng);
        NegativeControl r{"mediqr", st.audit().ok(), false};
        auto& x = st.engine().raw();
        x[st.engine().spec().indices[0] - 1] -= 0.25;
        r.corruption_detected = !st.audit().ok();
        out.push_back(r);
    }
    for (std::size_t n : {9, 12}) {
        MedMadState st = init_medmad_state(MedMadConstraints(0.0, 1.0, n), g, rng);
        NegativeControl r{n % 2 ? "medmad_odd" : "medmad_even", st.audit().ok(), false};
        st.raw()[st.mad_pins()[0]] *= 1.1;
        r.corruption_detected = !st.audit().ok();
        out.push_back(r);
    }
    return out;
}

}  // namespace rgibbs
