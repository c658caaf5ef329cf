#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include <rgibbs/abc.hpp>
#include <rgibbs/diagnostics.hpp>

using namespace rgibbs;
using Catch::Matchers::WithinAbs;

TEST_CASE("configuration errors") {
    const RobustConstraint c = MedMadConstraints(0, 1, 9);
    AbcConfig cfg;
    cfg.n_sims = 100;
    cfg.keep = 101;
    CHECK_THROWS_AS(abc_rejection<Cauchy>(c, CauchyPriors{}, cfg), config_error);
    cfg.keep = 10;
    CHECK_THROWS_AS(abc_rejection<Gaussian>(c, GaussianPrior::known_variance(1.0), cfg), config_error);
    CHECK_THROWS_AS(abc_rejection<TranslatedWeibull>(c, WeibullPriors{}, cfg), config_error);
}

TEST_CASE("keep equal to n_sims returns every simulation") {
    AbcConfig cfg;
    cfg.n_sims = 500;
    cfg.keep = 500;
    cfg.threads = 2;
    const AbcOutput out = abc_rejection<Cauchy>(MedMadConstraints(0, 1, 9), CauchyPriors{}, cfg);
    CHECK(out.draws.size() + out.invalid == 500);
    CHECK(std::is_sorted(out.distances.begin(), out.distances.end()));
    CHECK(out.observed == std::vector{0.0, 1.0});
    CHECK(out.scale.size() == 2);
}

TEST_CASE("results do not depend on the thread count") {
    const RobustConstraint c = QuantileConstraints(21, {0.25, 0.5, 0.75}, {-1, 0, 1});
    AbcConfig cfg;
    cfg.n_sims = 5000;
    cfg.keep = 50;
    cfg.chunk = 300;
    cfg.threads = 1;
    const AbcOutput a = abc_rejection<Gaussian>(c, GaussianPrior{}, cfg);
    cfg.threads = 4;
    const AbcOutput b = abc_rejection<Gaussian>(c, GaussianPrior{}, cfg);
    CHECK(a.draws == b.draws);
    CHECK(a.distances == b.distances);
}

TEST_CASE("a smaller keep takes the closest prefix") {
    const RobustConstraint c = MedIqrConstraints(1.0, 2.0, 21);
    AbcConfig cfg;
    cfg.n_sims = 4000;
    cfg.keep = 400;
    const AbcOutput wide = abc_rejection<Cauchy>(c, CauchyPriors{}, cfg);
    cfg.keep = 40;
    const AbcOutput tight = abc_rejection<Cauchy>(c, CauchyPriors{}, cfg);
    REQUIRE(tight.draws.size() == 40);
    CHECK(tight.distances.back() <= wide.distances.back());
    CHECK(std::equal(tight.draws.begin(), tight.draws.end(), wide.draws.begin()));
}

TEST_CASE("accepted parameters concentrate around the truth") {
    // Summaries of a N(3, 4) sample of size 200: median 3, MAD 2 * 0.6745.
    const RobustConstraint c = MedMadConstraints(3.0, 1.349, 200);
    AbcConfig cfg;
    cfg.n_sims = 20000;
    cfg.keep = 200;
    GaussianPrior prior;
    prior.nig = {0.0, 0.01, 2.0, 2.0};
    const AbcOutput out = abc_rejection<Gaussian>(c, prior, cfg);
    const Summary mu = summarize(column(out.draws, 0));
    const Summary s2 = summarize(column(out.draws, 1));
    CHECK_THAT(mu.q50, WithinAbs(3.0, 0.5));
    CHECK_THAT(s2.q50, WithinAbs(4.0, 1.5));
}
