#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include <rgibbs/diagnostics.hpp>
#include <rgibbs/posterior_updates.hpp>

using namespace rgibbs;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("conjugate update by hand") {
    const NigParams post = nig_posterior_given_x(std::vector{0.0, 0.0}, {0, 1, 1, 1});
    CHECK(post.mu0 == 0.0);
    CHECK(post.nu == 3.0);
    CHECK(post.alpha == 2.0);
    CHECK(post.beta == 1.0);

    const NigParams flat = nig_posterior_given_x(std::vector{2.0, 2.0, 2.0}, {2, 0.5, 3, 1.7});
    CHECK(flat.mu0 == 2.0);
    CHECK(flat.beta == 1.7);

    // mean 2, biased variance 8/3, shift 2 against mu0 = 0 with nu = 1
    const NigParams p = nig_posterior_given_x(std::vector{0.0, 2.0, 4.0}, {0, 1, 1, 1});
    CHECK_THAT(p.mu0, WithinRel(1.5, 1e-15));
    CHECK_THAT(p.beta, WithinRel(1.0 + 0.5 * (8.0 + 3.0 / 4.0 * 4.0), 1e-15));

    CHECK_THROWS_AS(nig_posterior_given_x(std::vector<double>{}, {0, 1, 1, 1}), parameter_error);
    CHECK_THROWS_AS(nig_posterior_given_x(std::vector{1.0}, {0, 0, 1, 1}), parameter_error);
}

TEST_CASE("NIG sampling moments and determinism") {
    Rng rng(1);
    const NigParams p{0, 1, 3, 2};
    double s2 = 0.0;
    double mu = 0.0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) {
        const Gaussian g = sample_nig(p, rng);
        s2 += g.sigma2();
        mu += g.mu();
    }
    CHECK_THAT(s2 / n, WithinRel(p.sigma2_mean(), 0.02));
    CHECK(std::abs(mu / n) < 0.02);

    Rng a(9);
    Rng b(9);
    CHECK(sample_nig(p, a).mu() == sample_nig(p, b).mu());
}

TEST_CASE("median/MAD approximation constants") {
    const NigParams prior{0, 0.001, 0.001, 0.001};
    const NigParams post = nig_approx_medmad(-2, 3, 1000, prior);
    CHECK_THAT(post.nu - prior.nu, WithinAbs(636.6197723675814, 1e-9));
    CHECK_THAT(2.0 * (post.alpha - prior.alpha), WithinAbs(367.5, 1e-9));
    CHECK_THAT(EfficiencyConstants::c * 3.0, WithinAbs(4.4478, 1e-4));
    CHECK_THAT(post.mu0, WithinAbs(-2.0, 1e-5));

    const NigParams same = nig_approx_medmad(-2, 3, 0, prior);
    CHECK(same.mu0 == prior.mu0);
    CHECK(same.nu == prior.nu);
    CHECK(same.alpha == prior.alpha);
    CHECK(same.beta == prior.beta);

    const NigParams centred = nig_approx_medmad(1.0, 2.0, 50, {1.0, 2.0, 3.0, 4.0});
    const double nmad = EfficiencyConstants::eff_mad * 50;
    const double cs = EfficiencyConstants::c * 2.0;
    CHECK_THAT(centred.beta, WithinRel(4.0 + 0.5 * nmad * cs * cs, 1e-14));

    CHECK_THROWS_AS(nig_approx_medmad(0, 0, 10, prior), parameter_error);
}

TEST_CASE("known-variance Gaussian update") {
    Rng rng(2);
    const std::vector<double> x{1.0, 2.0, 3.0, 6.0};
    const GaussianPrior prior = GaussianPrior::known_variance(4.0);
    double s = 0.0;
    double s2 = 0.0;
    const int n = 50000;
    for (int k = 0; k < n; ++k) {
        const Gaussian g = gaussian_theta_update(x, prior, rng);
        REQUIRE(g.sigma2() == 4.0);
        s += g.mu();
        s2 += g.mu() * g.mu();
    }
    const double mean = s / n;
    CHECK_THAT(mean, WithinAbs(3.0, 0.02));
    CHECK_THAT(s2 / n - mean * mean, WithinRel(1.0, 0.03));
    CHECK_FALSE(prior.proper());
}

TEST_CASE("Cauchy random-walk update recovers the truth from full data") {
    Rng rng(3);
    const Cauchy truth(-2, 3);
    std::vector<double> x(1000);
    for (double& v : x) v = truth.sample(rng);
    Cauchy cur(0, 1);
    RandomWalkTuning<2> tune;
    tune.log_sd = {std::log(0.2), std::log(0.1)};
    std::vector<double> x0;
    std::vector<double> gamma;
    for (int t = 0; t < 10000; ++t) {
        cur = mh_theta_update(cur, x, CauchyPriors{}, rng, tune);
        REQUIRE(cur.gamma() > 0.0);
        if (t >= 2000) {
            x0.push_back(cur.x0());
            gamma.push_back(cur.gamma());
        }
    }
    const Summary a = summarize(x0);
    const Summary b = summarize(gamma);
    CHECK(std::abs(a.mean + 2.0) < 3.0 * a.sd);
    CHECK(std::abs(b.mean - 3.0) < 3.0 * b.sd);
    CHECK(tune.accept[0].rate() > 0.1);
    CHECK(tune.accept[1].rate() > 0.1);
}

TEST_CASE("Weibull update never moves the location above the data") {
    Rng rng(4);
    const TranslatedWeibull truth(10, 2, 3);
    std::vector<double> x(500);
    for (double& v : x) v = truth.sample(rng);
    const double xmin = *std::min_element(x.begin(), x.end());
    TranslatedWeibull cur(9, 2.5, 2);
    RandomWalkTuning<3> tune;
    tune.log_sd = {std::log(0.5), std::log(0.1), std::log(0.1)};
    ScaleAdapter adapt;
    std::vector<double> beta;
    for (int t = 0; t < 20000; ++t) {
        adapt.steps = static_cast<std::size_t>(t);
        cur = mh_theta_update(cur, x, WeibullPriors{}, rng, tune, t < 5000 ? &adapt : nullptr);
        REQUIRE(cur.x0() < xmin);
        REQUIRE(cur.gamma() > 0.0);
        REQUIRE(cur.beta() > 0.0);
        if (t >= 5000) beta.push_back(cur.beta());
    }
    const Summary b = summarize(beta);
    CHECK(b.q025 < 3.0);
    CHECK(b.q975 > 3.0);
}

TEST_CASE("log likelihood rejects impossible states") {
    const std::vector<double> x{1.0, 2.0};
    CHECK(detail::log_likelihood(TranslatedWeibull(1.5, 1, 1), x) == -inf);
    CHECK(std::isfinite(detail::log_likelihood(Cauchy(0, 1), x)));
    CHECK_THAT(detail::log_likelihood(Gaussian(0, 1), x),
               WithinRel(Gaussian(0, 1).log_pdf(1.0) + Gaussian(0, 1).log_pdf(2.0), 1e-15));
    CHECK_THAT(detail::log_likelihood(Cauchy(0.5, 2), x),
               WithinRel(Cauchy(0.5, 2).log_pdf(1.0) + Cauchy(0.5, 2).log_pdf(2.0), 1e-14));
    CHECK_THAT(detail::log_likelihood(TranslatedWeibull(0.5, 2, 1.5), x),
               WithinRel(TranslatedWeibull(0.5, 2, 1.5).log_pdf(1.0) + TranslatedWeibull(0.5, 2, 1.5).log_pdf(2.0),
                         1e-14));
}

TEST_CASE("random-walk step with a flat likelihood samples the prior") {
    Rng rng(5);
    const WeibullPriors pri{2.0, 1.0, 3.0, 2.0};
    TranslatedWeibull cur(0, 1, 1);
    RandomWalkTuning<3> tune;
    tune.log_sd = {0.0, std::log(0.7), std::log(0.6)};
    std::vector<double> gamma;
    std::vector<double> beta;
    const auto flat = [](const TranslatedWeibull& d) { return std::abs(d.x0()) < 1.0 ? 0.0 : -inf; };
    for (int t = 0; t < 200000; ++t) {
        cur = mh_theta_step(cur, flat, pri, rng, tune);
        if (t % 5 == 0) {
            gamma.push_back(cur.gamma());
            beta.push_back(cur.beta());
        }
    }
    // Gamma(2, 1) and Gamma(3, 2)
    CHECK_THAT(summarize(gamma).mean, WithinRel(2.0, 0.05));
    CHECK_THAT(summarize(beta).mean, WithinRel(1.5, 0.05));
    CHECK(ks_statistic(gamma, [](double x) { return 1.0 - (1.0 + x) * std::exp(-x); }) < 0.03);
}
