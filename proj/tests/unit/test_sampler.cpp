#include <catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include <rgibbs/diagnostics.hpp>
#include <rgibbs/sampler.hpp>

using namespace rgibbs;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<RobustConstraint> constraints() {
    return {QuantileConstraints(41, {0.22, 0.51, 0.83}, {1.2, 2.05, 2.95}),
            MedIqrConstraints(2.0, 1.5, 25), MedMadConstraints(2.0, 0.8, 25), MedMadConstraints(2.0, 0.8, 24)};
}

bool has_rate(const ChainOutput& out, const std::string& name) {
    for (const auto& [k, v] : out.acceptance) {
        if (k == name) return v >= 0.0 && v <= 1.0;
    }
    return false;
}

}  // namespace

TEST_CASE("default burn-in") {
    CHECK(default_burn_in(10000, 9, true) == 45);
    CHECK(default_burn_in(10000, 9, false) == 1000);
    CHECK(default_burn_in(100000, 9, false) == 10000);
    CHECK(default_burn_in(1000, 9, false) == 500);
    CHECK(default_burn_in(100, 1000, true) == 50);
}

TEST_CASE("configuration errors") {
    const RobustConstraint c = MedMadConstraints(0, 1, 9);
    GibbsConfig cfg;
    cfg.iterations = 100;
    cfg.burn_in = 100;
    CHECK_THROWS_AS(run_chain<Gaussian>(c, GaussianPrior{}, cfg), config_error);
    cfg.burn_in = 10;
    cfg.thin = 0;
    CHECK_THROWS_AS(run_chain<Gaussian>(c, GaussianPrior{}, cfg), config_error);
    cfg.thin = 1;
    cfg.iterations = 0;
    CHECK_THROWS_AS(run_chain<Gaussian>(c, GaussianPrior{}, cfg), config_error);
}

TEST_CASE("draw count follows burn-in and thinning") {
    const RobustConstraint c = MedMadConstraints(0, 1, 9);
    GibbsConfig cfg;
    cfg.iterations = 1000;
    cfg.burn_in = 100;
    cfg.thin = 7;
    const ChainOutput out = run_chain<Cauchy>(c, CauchyPriors{}, cfg);
    CHECK(out.draws.size() == (1000 - 100) / 7);
    CHECK(out.burn_in == 100);
    CHECK(out.param_names == std::vector<std::string>{"x0", "gamma"});
    for (const auto& d : out.draws) REQUIRE(d.size() == 2);
}

TEST_CASE("same seed gives identical chains, other chains differ") {
    const RobustConstraint c = MedMadConstraints(1, 2, 15);
    GibbsConfig cfg;
    cfg.iterations = 2000;
    cfg.seed = 77;
    const ChainOutput a = run_chain<Cauchy>(c, CauchyPriors{}, cfg);
    const ChainOutput b = run_chain<Cauchy>(c, CauchyPriors{}, cfg);
    CHECK(a.draws == b.draws);
    CHECK(a.census == b.census);
    cfg.chain = 1;
    const ChainOutput d = run_chain<Cauchy>(c, CauchyPriors{}, cfg);
    CHECK(a.draws != d.draws);
}

TEST_CASE("every constraint runs under every family with exact constraints") {
    GibbsConfig cfg;
    cfg.iterations = 600;
    cfg.audit = true;
    for (const auto& c : constraints()) {
        INFO(constraint_name(c) << " N = " << sample_size(c));
        const ChainOutput g = run_chain<Gaussian>(c, GaussianPrior{}, cfg);
        const ChainOutput y = run_chain<Cauchy>(c, CauchyPriors{}, cfg);
        const ChainOutput w = run_chain<TranslatedWeibull>(c, WeibullPriors{}, cfg);
        for (const ChainOutput* o : {&g, &y, &w}) {
            CHECK(o->audit_failures == 0);
            CHECK(o->max_residual < 1e-9);
            CHECK(o->latent_draws > 0);
            CHECK_FALSE(o->draws.empty());
        }
        CHECK(has_rate(y, "x0"));
        CHECK(has_rate(w, "beta"));
        CHECK(has_rate(w, "pinned_beta") == !std::holds_alternative<MedMadConstraints>(c));
        if (std::holds_alternative<MedMadConstraints>(c)) {
            CHECK_FALSE(g.census.empty());
            if (sample_size(c) % 2 == 0) CHECK(has_rate(g, "median_pair"));
        } else {
            CHECK(has_rate(g, "orderstats"));
        }
    }
}

TEST_CASE("observer sees every iteration") {
    GibbsConfig cfg;
    cfg.iterations = 300;
    std::size_t calls = 0;
    std::size_t last = 0;
    cfg.observer = [&](std::size_t t, std::span<const double> x, std::span<const double> p) {
        ++calls;
        last = t;
        REQUIRE(x.size() == 11);
        REQUIRE(p.size() == 2);
    };
    run_chain<Gaussian>(MedIqrConstraints(0, 1, 11), GaussianPrior{}, cfg);
    CHECK(calls == 300);
    CHECK(last == 299);
}

TEST_CASE("infeasible starting parameters are reported") {
    GibbsConfig cfg;
    cfg.iterations = 100;
    cfg.theta0 = std::vector{5.0, 1.0, 2.0};
    CHECK_THROWS_AS(run_chain<TranslatedWeibull>(MedMadConstraints(0, 1, 9), WeibullPriors{}, cfg),
                    infeasible_error);
}

TEST_CASE("known variance keeps sigma2 fixed") {
    GibbsConfig cfg;
    cfg.iterations = 500;
    const ChainOutput out =
        run_chain<Gaussian>(MedMadConstraints(0, 0.7, 5), GaussianPrior::known_variance(1.0), cfg);
    for (const auto& d : out.draws) REQUIRE(d[1] == 1.0);
}

TEST_CASE("Gaussian median/MAD posterior sits near the large-N approximation") {
    const double m = -2.0;
    const double s = 3.0;
    const std::size_t n = 301;
    GibbsConfig cfg;
    cfg.iterations = 6000;
    cfg.seed = 5;
    const ChainOutput out = run_chain<Gaussian>(MedMadConstraints(m, s, n), GaussianPrior{}, cfg);
    const NigParams approx = nig_approx_medmad(m, s, n, GaussianPrior{}.nig);
    const Summary mu = summarize(column(out.draws, 0));
    const Summary s2 = summarize(column(out.draws, 1));
    const double mu_sd = std::sqrt(approx.beta / (approx.nu * (approx.alpha - 1.0)));
    CHECK(std::abs(mu.mean - approx.mu0) < 4.0 * mu_sd);
    CHECK_THAT(s2.mean, WithinRel(approx.sigma2_mean(), 0.15));
}

TEST_CASE("pinned-statistic theta steps can be switched off") {
    GibbsConfig cfg;
    cfg.iterations = 400;
    cfg.collapsed_steps = 0;
    cfg.audit = true;
    const ChainOutput out =
        run_chain<Cauchy>(QuantileConstraints(41, {0.22, 0.51, 0.83}, {1.2, 2.05, 2.95}), CauchyPriors{}, cfg);
    CHECK_FALSE(has_rate(out, "pinned_x0"));
    CHECK(out.audit_failures == 0);
}
