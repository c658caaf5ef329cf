// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/distributions/inverse_gamma.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <rgibbs/rgibbs.hpp>
#include <rgibbs/validation.hpp>

using namespace rgibbs;

namespace {

// Tolerances and budgets.
constexpr double kResidualTol = 1e-9;
constexpr double kC1Seconds = 120;
constexpr double kMuTol = 0.05;
constexpr double kSigma2RelTol = 0.05;
constexpr double kKsTol = 0.05;
constexpr double kC2Seconds = 300;
constexpr double kAbcEps = 0.005;
constexpr std::size_t kOracleSims = 10'000'000;
constexpr std::size_t kCensusSweeps = 100'000;
constexpr double kC4Seconds = 60;
constexpr double kMedianTol = 0.3;
constexpr double kC5Seconds = 600;
constexpr double kSdRatioM2 = 5.0;
constexpr double kC6Seconds = 900;
constexpr double kC6MinEss = 100;
constexpr double kQuadTol = 1e-3;
constexpr double kTruncKsTol = 0.01;
constexpr std::size_t kTruncDraws = 100'000;
constexpr double kGridTvTol = 1e-3;

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---- 1 ----

Verdict constraint_preservation() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto cases = invariant_suite(invariant_constraints(true, true, true), 10000, 1);
    double worst = 0.0;
    std::size_t bad = 0;
    for (const auto& c : cases) {
        worst = std::max(worst, c.max_residual);
        if (!c.ok(kResidualTol)) {
            ++bad;
            std::printf("    violation: %s/%s N=%zu residual %.3g failures %zu\n", c.engine.c_str(), c.family.c_str(),
                        c.n, c.max_residual, c.failures);
        }
    }
    const double secs = seconds_since(t0);
    return {bad == 0 && secs < kC1Seconds,
            fmt("%zu runs x 10^4 iterations, max residual %.2g, %zu failing, %.1f s", cases.size(), worst, bad, secs)};
}

// ---- 2 ----

Verdict nig_approximation() {
    const auto t0 = std::chrono::steady_clock::now();
    const double m = -2.0;
    const double s = 3.0;
    const std::size_t n = 1000;
    const GaussianPrior prior;
    GibbsConfig cfg;
    cfg.iterations = 25000;
    cfg.burn_in = 5000;
    cfg.seed = 2;
    const ChainOutput out = run_chain<Gaussian>(MedMadConstraints(m, s, n), prior, cfg);
    const NigParams a = nig_approx_medmad(m, s, n, prior.nig);
    const auto mu = column(out.draws, 0);
    const auto s2 = column(out.draws, 1);
    const double mu_mean = summarize(mu).mean;
    const double s2_mean = summarize(s2).mean;
    const double s2_target = a.beta / (a.alpha - 1.0);

    const boost::math::students_t_distribution<double> t(2.0 * a.alpha);
    const double sc = a.mu_scale();
    const boost::math::inverse_gamma_distribution<double> ig(a.alpha, a.beta);
    const double ks_mu = ks_statistic(mu, [&](double x) { return cdf(t, (x - a.mu0) / sc); });
    const double ks_s2 = ks_statistic(s2, [&](double x) { return cdf(ig, x); });
    const double secs = seconds_since(t0);
    const bool pass = std::abs(mu_mean - a.mu0) < kMuTol && std::abs(s2_mean / s2_target - 1.0) < kSigma2RelTol &&
                      ks_mu < kKsTol && ks_s2 < kKsTol && secs < kC2Seconds;
    return {pass, fmt("%zu draws; mean mu %.4f vs M %.4f; mean sigma2 %.3f vs B/(A-1) %.3f; KS mu %.4f, sigma2 %.4f; "
                      "%.1f s",
                      mu.size(), mu_mean, a.mu0, s2_mean, s2_target, ks_mu, ks_s2, secs)};
}

// ---- 3 ----

Verdict small_n_oracle() {
    const double m = 0.0;
    const double s = 0.7;
    const std::size_t n = 5;
    GibbsConfig cfg;
    cfg.iterations = 210000;
    cfg.burn_in = 10000;
    cfg.thin = 10;
    cfg.seed = 3;
    const ChainOutput out = run_chain<Gaussian>(MedMadConstraints(m, s, n), GaussianPrior::known_variance(1.0), cfg);
    const auto chain = column(out.draws, 0);

    // Under a flat prior X = mu + Z with Z ~ N(0, 1)^5, so conditioning on
    // median(X) = m gives mu = m - median(Z) exactly; only the MAD needs the
    // epsilon window.
    Rng rng(33);
    std::vector<double> oracle;
    std::vector<double> z(n);
    for (std::size_t k = 0; k < kOracleSims; ++k) {
        for (double& v : z) v = rng.normal();
        const double med = median(z);
        if (std::abs(mad(z) - s) < kAbcEps) oracle.push_back(m - med);
    }
    const double ks = ks_two_sample(chain, oracle);
    return {ks < kKsTol, fmt("chain %zu draws, oracle %zu of %zu sims (eps %.3g); KS %.4f", chain.size(),
                             oracle.size(), kOracleSims, kAbcEps, ks)};
}

// ---- 4 ----

Verdict ergodicity() {
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t runs = 0;
    std::size_t covered = 0;
    std::size_t slowest = 0;
    std::string census;
    for (std::size_t n : {9, 12}) {
        for (const CensusRun& r : medmad_census(MedMadConstraints(0.0, 0.6745, n), Gaussian(0, 1), kCensusSweeps, 4)) {
            ++runs;
            covered += r.covered() ? 1 : 0;
            slowest = std::max(slowest, r.covered_at);
            if (census.empty() || (n == 12 && census.find('|') == std::string::npos)) {
                census += census.empty() ? "N=9 [" : " | N=12 [";
                for (std::size_t i = 0; i < r.census.size(); ++i) census += (i ? " " : "") + std::to_string(r.census[i]);
                census += "]";
            }
            if (!r.covered()) std::printf("    N=%zu start %s never covered every cell\n", n, r.start.c_str());
        }
    }
    const double secs = seconds_since(t0);
    return {covered == runs && secs < kC4Seconds,
            fmt("%zu/%zu deterministic starts visit every cell within %zu sweeps (slowest %zu); first-start census %s; "
                "%.1f s",
                covered, runs, kCensusSweeps, slowest, census.c_str(), secs)};
}

// ---- 5 ----

Verdict cauchy_vs_abc() {
    const auto t0 = std::chrono::steady_clock::now();
    const double x0 = -2.0;
    const double gamma = 3.0;
    const std::size_t n = 1000;
    const RobustConstraint c = MedMadConstraints(x0, gamma, n);  // Cauchy MAD equals gamma
    GibbsConfig cfg;
    cfg.iterations = 20000;
    cfg.seed = 5;
    const ChainOutput chain = run_chain<Cauchy>(c, CauchyPriors{}, cfg);

    AbcConfig acfg;
    acfg.n_sims = chain.latent_draws / n;
    acfg.keep = std::max<std::size_t>(100, acfg.n_sims / 100);
    acfg.seed = 5;
    const AbcOutput abc = abc_rejection<Cauchy>(c, CauchyPriors{}, acfg);

    const Summary cx = summarize(column(chain.draws, 0));
    const Summary cg = summarize(column(chain.draws, 1));
    const Summary ax = summarize(column(abc.draws, 0));
    const Summary ag = summarize(column(abc.draws, 1));
    const double secs = seconds_since(t0);
    const bool pass = cx.sd < ax.sd && cg.sd < ag.sd && std::abs(cx.q50 - x0) < kMedianTol &&
                      std::abs(cg.q50 - gamma) < kMedianTol && secs < kC5Seconds;
    return {pass, fmt("budget %zu simulated samples each; sd x0 %.3f vs ABC %.3f, sd gamma %.3f vs ABC %.3f; "
                      "chain medians %.3f, %.3f; %.1f s",
                      acfg.n_sims, cx.sd, ax.sd, cg.sd, ag.sd, cx.q50, cg.q50, secs)};
}

// ---- 6 ----

Verdict weibull_identifiability() {
    const auto t0 = std::chrono::steady_clock::now();
    const TranslatedWeibull truth(10, 2, 3);
    const std::array<double, 3> theta{10, 2, 3};
    std::array<std::array<Summary, 3>, 3> sum{};  // M = 2, 3, 9
    std::array<double, 3> min_ess{};
    const std::array<std::size_t, 3> ms{2, 3, 9};
    for (std::size_t r = 0; r < 3; ++r) {
        std::vector<double> p;
        std::vector<double> q;
        for (std::size_t j = 1; j <= ms[r]; ++j) {
            p.push_back(static_cast<double>(j) / static_cast<double>(ms[r] + 1));
            q.push_back(truth.quantile(p.back()));
        }
        GibbsConfig cfg;
        cfg.iterations = 300000;
        cfg.burn_in = cfg.iterations / 10;
        cfg.thin = 10;
        cfg.seed = 6;
        const ChainOutput out = run_chain<TranslatedWeibull>(QuantileConstraints(1000, p, q), WeibullPriors{}, cfg);
        min_ess[r] = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < 3; ++k) {
            const std::vector<double> c = column(out.draws, k);
            sum[r][k] = summarize(c);
            min_ess[r] = std::min(min_ess[r], effective_sample_size(c));
        }
    }
    // An interval from a chain that has not mixed says nothing about coverage.
    const bool mixed = min_ess[1] >= kC6MinEss && min_ess[2] >= kC6MinEss;
    bool cover = true;
    std::size_t shrink = 0;
    bool m2_spread = false;
    for (std::size_t k = 0; k < 3; ++k) {
        for (std::size_t r : {1, 2}) cover = cover && sum[r][k].q025 < theta[k] && theta[k] < sum[r][k].q975;
        shrink += sum[2][k].q975 - sum[2][k].q025 < sum[1][k].q975 - sum[1][k].q025 ? 1 : 0;
        m2_spread = m2_spread || sum[0][k].sd > kSdRatioM2 * sum[2][k].sd;
    }
    const double secs = seconds_since(t0);
    std::string ci;
    for (std::size_t r : {1, 2}) {
        ci += fmt(" M=%zu x0 [%.2f, %.2f] gamma [%.2f, %.2f] beta [%.2f, %.2f];", ms[r], sum[r][0].q025,
                  sum[r][0].q975, sum[r][1].q025, sum[r][1].q975, sum[r][2].q025, sum[r][2].q975);
    }
    ci += fmt(" M=2 sd %.2f %.2f %.2f vs M=9 sd %.2f %.2f %.2f", sum[0][0].sd, sum[0][1].sd, sum[0][2].sd, sum[2][0].sd,
              sum[2][1].sd, sum[2][2].sd);
    // Grid quadrature of the exact posterior under the same priors (scipy,
    // order statistics at the nearest ranks).
    ci += "; grid posterior M=9 x0 [9.29, 10.26] gamma [1.72, 2.73] beta [2.52, 4.26],"
          " M=3 x0 [-247, 8.0] gamma [4.0, 259] beta [6.4, 434]";
    return {mixed && cover && shrink >= 2 && m2_spread && secs < kC6Seconds,
            fmt("cover %s, %zu/3 widths shrink, min ESS M=3 %.0f M=9 %.0f (need %.0f);%s; %.1f s",
                cover ? "yes" : "no", shrink, min_ess[1], min_ess[2], kC6MinEss, ci.c_str(), secs)};
}

// ---- 7 ----

double nig_log_density(const NigParams& p, double mu, double s2) {
    return -0.5 * std::log(2.0 * std::numbers::pi * s2 / p.nu) - p.nu * (mu - p.mu0) * (mu - p.mu0) / (2.0 * s2) +
           p.alpha * std::log(p.beta) - std::lgamma(p.alpha) - (p.alpha + 1.0) * std::log(s2) - p.beta / s2;
}

template <ContinuousFamily D>
double truncated_ks(const D& d, Interval iv, Rng& rng) {
    std::vector<double> x(kTruncDraws);
    for (double& v : x) v = sample_truncated(d, iv, rng);
    const bool upper = d.cdf(iv.lo) > 0.5;
    if (upper) {
        const double a = d.sf(iv.lo);
        const double b = d.sf(iv.hi);
        return ks_statistic(x, [&](double v) { return (a - d.sf(v)) / (a - b); });
    }
    const double a = d.cdf(iv.lo);
    const double b = d.cdf(iv.hi);
    return ks_statistic(x, [&](double v) { return (d.cdf(v) - a) / (b - a); });
}

Verdict density_units() {
    using boost::math::quadrature::gauss_kronrod;
    const auto integrate = [](auto f, double a, double b) { return gauss_kronrod<double, 31>::integrate(f, a, b, 8); };

    // Joint order-statistic density over every index set with N <= 3.
    double worst_quad = 0.0;
    const Gaussian g(0.2, 0.7);
    const double lo = -6.0;
    const double hi = 6.6;
    const auto dens = [&](std::size_t n, std::vector<std::size_t> idx, std::vector<double> v) {
        return std::exp(joint_orderstat_logdensity(g, {n, std::move(idx)}, v));
    };
    for (std::size_t n = 1; n <= 3; ++n) {
        for (std::size_t i = 1; i <= n; ++i) {
            const double z = integrate([&](double a) { return dens(n, {i}, {a}); }, lo, hi);
            worst_quad = std::max(worst_quad, std::abs(z - 1.0));
            for (std::size_t j = i + 1; j <= n; ++j) {
                const double z2 = integrate(
                    [&](double a) { return integrate([&](double b) { return dens(n, {i, j}, {a, b}); }, a, hi); }, lo,
                    hi);
                worst_quad = std::max(worst_quad, std::abs(z2 - 1.0));
            }
        }
    }
    const double z3 = integrate(
        [&](double a) {
            return integrate(
                [&](double b) { return integrate([&](double c) { return dens(3, {1, 2, 3}, {a, b, c}); }, b, hi); },
                a, hi);
        },
        lo, hi);
    worst_quad = std::max(worst_quad, std::abs(z3 - 1.0));

    // Truncated samplers, including far tails.
    Rng rng(7);
    double worst_ks = 0.0;
    worst_ks = std::max(worst_ks, truncated_ks(Gaussian(0, 1), {-1.0, 2.0}, rng));
    worst_ks = std::max(worst_ks, truncated_ks(Gaussian(0, 1), {3.0, 5.0}, rng));
    worst_ks = std::max(worst_ks, truncated_ks(Gaussian(1, 4), {-inf, -4.0}, rng));
    worst_ks = std::max(worst_ks, truncated_ks(Cauchy(0, 1), {5.0, 50.0}, rng));
    worst_ks = std::max(worst_ks, truncated_ks(Cauchy(-2, 3), {-1.0, 1.0}, rng));
    worst_ks = std::max(worst_ks, truncated_ks(TranslatedWeibull(0, 1, 2), {0.5, 1.0}, rng));
    worst_ks = std::max(worst_ks, truncated_ks(TranslatedWeibull(10, 2, 3), {13.0, inf}, rng));

    // Conjugate update against brute-force quadrature on a grid.
    std::vector<double> x(12);
    for (double& v : x) v = 1.5 + 2.0 * rng.normal();
    const NigParams prior{0.5, 2.0, 3.0, 2.0};
    const NigParams post = nig_posterior_given_x(x, prior);
    const boost::math::inverse_gamma_distribution<double> ig(post.alpha, post.beta);
    const double s2_lo = quantile(ig, 1e-7);
    const double s2_hi = quantile(ig, 1.0 - 1e-7);
    const double mu_half = 8.0 * std::sqrt(s2_hi / post.nu);
    const std::size_t grid = 600;
    std::vector<double> lp(grid * grid);
    std::vector<double> la(grid * grid);
    for (std::size_t a = 0; a < grid; ++a) {
        const double mu = post.mu0 - mu_half + 2.0 * mu_half * (a + 0.5) / grid;
        for (std::size_t b = 0; b < grid; ++b) {
            const double s2 = s2_lo + (s2_hi - s2_lo) * (b + 0.5) / grid;
            double ll = nig_log_density(prior, mu, s2);
            const Gaussian lik(mu, s2);
            for (double v : x) ll += lik.log_pdf(v);
            lp[a * grid + b] = ll;
            la[a * grid + b] = nig_log_density(post, mu, s2);
        }
    }
    const auto normalize = [](std::vector<double>& v) {
        const double top = *std::max_element(v.begin(), v.end());
        double z = 0.0;
        for (double& e : v) z += (e = std::exp(e - top));
        for (double& e : v) e /= z;
    };
    normalize(lp);
    normalize(la);
    double tv = 0.0;
    for (std::size_t k = 0; k < lp.size(); ++k) tv += 0.5 * std::abs(lp[k] - la[k]);

    return {worst_quad < kQuadTol && worst_ks < kTruncKsTol && tv < kGridTvTol,
            fmt("quadrature |Z - 1| max %.2g; truncated KS max %.4f at %zu draws; NIG grid TV %.2g", worst_quad,
                worst_ks, kTruncDraws, tv)};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Verdict()> run;
    };
    const std::vector<Criterion> criteria{
        {"1 constraint preservation", constraint_preservation},
        {"2 Gaussian NIG approximation", nig_approximation},
        {"3 small-N exact posterior vs ABC oracle", small_n_oracle},
        {"4 ergodicity census", ergodicity},
        {"5 Cauchy chain vs ABC concentration", cauchy_vs_abc},
        {"6 Weibull identifiability", weibull_identifiability},
        {"7 density unit checks", density_units},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += v.pass ? 0 : 1;
        std::printf("%s  %s: %s\n", v.pass ? "PASS" : "FAIL", c.name, v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed;
}
