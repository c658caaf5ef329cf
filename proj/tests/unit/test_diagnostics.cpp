#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <rgibbs/diagnostics.hpp>
#include <rgibbs/distributions.hpp>

using namespace rgibbs;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("ESS of white noise is about n") {
    Rng rng(1);
    std::vector<double> x(20000);
    for (double& v : x) v = rng.normal();
    const double ess = effective_sample_size(x);
    CHECK_THAT(ess, WithinRel(20000.0, 0.1));
    CHECK(ess <= 20000.0);
}

TEST_CASE("ESS of an AR(1) chain") {
    Rng rng(2);
    const double phi = 0.9;
    std::vector<double> x(100000);
    double v = 0.0;
    for (double& e : x) {
        v = phi * v + rng.normal();
        e = v;
    }
    // n (1 - phi) / (1 + phi)
    CHECK_THAT(effective_sample_size(x), WithinRel(100000.0 * 0.1 / 1.9, 0.15));
}

TEST_CASE("ESS edge cases") {
    CHECK(effective_sample_size(std::vector<double>(500, 3.0)) == 1.0);
    std::vector<double> ramp(1000);
    for (std::size_t k = 0; k < ramp.size(); ++k) ramp[k] = static_cast<double>(k);
    const double ess = effective_sample_size(ramp);
    CHECK(ess >= 1.0);
    CHECK(ess < 10.0);
    CHECK_THROWS_AS(effective_sample_size(std::vector<double>(99, 1.0)), diagnostics_error);
}

TEST_CASE("KS statistics") {
    CHECK_THAT(ks_statistic(std::vector{0.5}, [](double x) { return x; }), WithinAbs(0.5, 1e-15));
    CHECK(ks_two_sample(std::vector{1.0, 2.0}, std::vector{1.0, 2.0}) == 0.0);
    CHECK(ks_two_sample(std::vector{1.0, 2.0}, std::vector{3.0, 4.0}) == 1.0);
    Rng rng(3);
    std::vector<double> x(50000);
    const Gaussian g(0, 1);
    for (double& v : x) v = g.sample(rng);
    CHECK(ks_statistic(x, [&](double v) { return g.cdf(v); }) < 0.01);
    CHECK_THROWS_AS(ks_two_sample(std::vector<double>{}, x), diagnostics_error);
}

TEST_CASE("summaries") {
    const Summary s = summarize(std::vector{1.0, 2.0, 3.0, 4.0, 5.0});
    CHECK(s.mean == 3.0);
    CHECK_THAT(s.sd, WithinRel(std::sqrt(2.5), 1e-15));
    CHECK(s.q50 == 3.0);
    CHECK_THAT(s.q025, WithinAbs(1.1, 1e-12));
    CHECK_THAT(s.q975, WithinAbs(4.9, 1e-12));
    CHECK(column({{1, 2}, {3, 4}}, 1) == std::vector<double>{2, 4});
}
