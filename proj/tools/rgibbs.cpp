#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/inverse_gamma.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/version.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <rgibbs/rgibbs.hpp>
#include <rgibbs/validation.hpp>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace rgibbs;

namespace {

constexpr const char* kVersion = "1.0.0";

enum Exit { ok = 0, violation = 1, usage = 2, infeasible = 3 };

struct Settings {
    std::string family = "gaussian";
    std::string stats;
    std::optional<double> m;
    std::optional<double> s;
    std::optional<double> iqr;
    std::optional<std::size_t> n;
    std::vector<double> probs;
    std::vector<double> values;
    std::map<std::string, double> prior;

    std::uint64_t seed = 1;
    std::size_t iters = 10000;
    std::optional<std::size_t> burn;
    std::size_t thin = 1;
    std::size_t chains = 1;
    std::size_t n_pairs = 0;
    std::size_t pinned_steps = 5;
    std::string init = "auto";
    std::string rule = "exact";
    std::vector<double> theta0;
    bool adapt = true;

    std::size_t n_sims = 100000;
    std::size_t keep = 1000;
    std::size_t threads = 0;

    std::string out;
    std::string summary;
};

// Flag values; only those given on the command line override the file.
struct Flags {
    std::string config;
    std::optional<std::string> family, stats, init, rule, out, summary;
    std::optional<double> m, s, iqr;
    std::optional<std::size_t> n, iters, burn, thin, chains, n_pairs, pinned_steps, n_sims, keep, threads;
    std::optional<std::uint64_t> seed;
    std::vector<double> probs, values, theta0;
    std::vector<std::string> prior;
    bool no_adapt = false;
};

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---- config file ---------------------------------------------------------

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw config_error(where + ": expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : obj.items()) {
        if (!ok.count(k)) throw config_error(where + ": unknown key '" + k + "'");
    }
}

template <class T>
void read(const json& obj, const char* key, const std::string& where, T& dst) {
    if (!obj.contains(key)) return;
    try {
        dst = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw config_error(where + "." + key + ": " + e.what());
    }
}

template <class T>
void read(const json& obj, const char* key, const std::string& where, std::optional<T>& dst) {
    if (!obj.contains(key)) return;
    T v{};
    read(obj, key, where, v);
    dst = v;
}

void load_config(const std::string& path, Settings& st) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw config_error(path + ": " + e.what());
    }
    reject_unknown(j, path, {"family", "seed", "constraint", "prior", "gibbs", "abc", "output"});
    read(j, "family", path, st.family);
    read(j, "seed", path, st.seed);
    if (j.contains("constraint")) {
        const json& c = j["constraint"];
        const std::string w = path + ": constraint";
        reject_unknown(c, w, {"stats", "n", "m", "s", "iqr", "probs", "values"});
        read(c, "stats", w, st.stats);
        read(c, "n", w, st.n);
        read(c, "m", w, st.m);
        read(c, "s", w, st.s);
        read(c, "iqr", w, st.iqr);
        read(c, "probs", w, st.probs);
        read(c, "values", w, st.values);
    }
    if (j.contains("prior")) {
        const json& p = j["prior"];
        if (!p.is_object()) throw config_error(path + ": prior: expected an object");
        for (const auto& [k, v] : p.items()) {
            if (!v.is_number()) throw config_error(path + ": prior." + k + ": expected a number");
            st.prior[k] = v.get<double>();
        }
    }
    if (j.contains("gibbs")) {
        const json& g = j["gibbs"];
        const std::string w = path + ": gibbs";
        reject_unknown(g, w, {"iters", "burn", "thin", "chains", "n_pairs", "pinned_steps", "init", "rule", "theta0",
                              "adapt"});
        read(g, "iters", w, st.iters);
        read(g, "burn", w, st.burn);
        read(g, "thin", w, st.thin);
        read(g, "chains", w, st.chains);
        read(g, "n_pairs", w, st.n_pairs);
        read(g, "pinned_steps", w, st.pinned_steps);
        read(g, "init", w, st.init);
        read(g, "rule", w, st.rule);
        read(g, "theta0", w, st.theta0);
        read(g, "adapt", w, st.adapt);
    }
    if (j.contains("abc")) {
        const json& a = j["abc"];
        const std::string w = path + ": abc";
        reject_unknown(a, w, {"n_sims", "keep", "threads"});
        read(a, "n_sims", w, st.n_sims);
        read(a, "keep", w, st.keep);
        read(a, "threads", w, st.threads);
    }
    if (j.contains("output")) {
        const json& o = j["output"];
        const std::string w = path + ": output";
        reject_unknown(o, w, {"out", "summary"});
        read(o, "out", w, st.out);
        read(o, "summary", w, st.summary);
    }
}

void add_model_flags(CLI::App* app, Flags& f) {
    app->add_option("--config", f.config, "JSON run configuration; flags override its values");
    app->add_option("--family", f.family, "gaussian, cauchy or weibull");
    app->add_option("--stats", f.stats, "quantiles, mediqr or medmad");
    app->add_option("--m", f.m, "observed median");
    app->add_option("--s", f.s, "observed MAD");
    app->add_option("--iqr", f.iqr, "observed interquartile range");
    app->add_option("--n", f.n, "sample size N");
    app->add_option("--probs", f.probs, "quantile probabilities")->delimiter(',');
    app->add_option("--values", f.values, "observed quantiles")->delimiter(',');
    app->add_option("--prior", f.prior, "prior hyperparameter as key=value (repeatable)");
    app->add_option("--seed", f.seed, "64-bit seed");
}

void add_output_flags(CLI::App* app, Flags& f) {
    app->add_option("--out", f.out, "draws CSV");
    app->add_option("--summary", f.summary, "summary JSON (default: the CSV path with a .json extension)");
}

Settings resolve(const Flags& f) {
    Settings st;
    if (!f.config.empty()) load_config(f.config, st);
    if (f.family) st.family = *f.family;
    if (f.stats) st.stats = *f.stats;
    if (f.m) st.m = f.m;
    if (f.s) st.s = f.s;
    if (f.iqr) st.iqr = f.iqr;
    if (f.n) st.n = f.n;
    if (!f.probs.empty()) st.probs = f.probs;
    if (!f.values.empty()) st.values = f.values;
    for (const auto& kv : f.prior) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw config_error("--prior expects key=value, got '" + kv + "'");
        try {
            std::size_t used = 0;
            const std::string v = kv.substr(eq + 1);
            st.prior[kv.substr(0, eq)] = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
        } catch (const std::exception&) {
            throw config_error("--prior " + kv + ": value is not a number");
        }
    }
    if (f.seed) st.seed = *f.seed;
    if (f.iters) st.iters = *f.iters;
    if (f.burn) st.burn = f.burn;
    if (f.thin) st.thin = *f.thin;
    if (f.chains) st.chains = *f.chains;
    if (f.n_pairs) st.n_pairs = *f.n_pairs;
    if (f.pinned_steps) st.pinned_steps = *f.pinned_steps;
    if (f.init) st.init = *f.init;
    if (f.rule) st.rule = *f.rule;
    if (!f.theta0.empty()) st.theta0 = f.theta0;
    if (f.no_adapt) st.adapt = false;
    if (f.n_sims) st.n_sims = *f.n_sims;
    if (f.keep) st.keep = *f.keep;
    if (f.threads) st.threads = *f.threads;
    if (f.out) st.out = *f.out;
    if (f.summary) st.summary = *f.summary;
    return st;
}

// ---- model construction --------------------------------------------------

RobustConstraint make_constraint(const Settings& st) {
    if (!st.n) throw config_error("missing sample size (--n)");
    const std::size_t n = *st.n;
    if (st.stats == "quantiles") {
        if (st.probs.empty()) throw config_error("quantiles need --probs");
        return QuantileConstraints(n, st.probs, st.values);
    }
    if (st.stats == "mediqr") {
        if (!st.m || !st.iqr) throw config_error("mediqr needs --m and --iqr");
        return MedIqrConstraints(*st.m, *st.iqr, n);
    }
    if (st.stats == "medmad") {
        if (!st.m || !st.s) throw config_error("medmad needs --m and --s");
        return MedMadConstraints(*st.m, *st.s, n);
    }
    if (st.stats.empty()) throw config_error("missing --stats (quantiles, mediqr or medmad)");
    throw config_error("unknown --stats '" + st.stats + "'");
}

void take_prior(std::map<std::string, double> prior, std::initializer_list<std::pair<const char*, double*>> keys,
                const std::string& family) {
    for (auto [k, dst] : keys) {
        if (auto it = prior.find(k); it != prior.end()) {
            *dst = it->second;
            prior.erase(it);
        }
    }
    if (!prior.empty()) {
        throw config_error("unknown prior key '" + prior.begin()->first + "' for the " + family + " family");
    }
}

GaussianPrior gaussian_prior(const Settings& st) {
    GaussianPrior p;
    if (st.prior.count("sigma2")) {
        p = GaussianPrior::known_variance(st.prior.at("sigma2"));
        take_prior(st.prior, {{"sigma2", &p.sigma2}}, "gaussian known-variance");
        if (!(p.sigma2 > 0.0)) throw config_error("prior sigma2 must be > 0");
        return p;
    }
    take_prior(st.prior, {{"mu0", &p.nig.mu0}, {"nu", &p.nig.nu}, {"alpha", &p.nig.alpha}, {"beta", &p.nig.beta}},
               "gaussian");
    try {
        p.nig.validate();
    } catch (const parameter_error& e) {
        throw config_error(e.what());
    }
    return p;
}

CauchyPriors cauchy_prior(const Settings& st) {
    CauchyPriors p;
    take_prior(st.prior,
               {{"loc_center", &p.loc_center},
                {"loc_scale", &p.loc_scale},
                {"scale_shape", &p.scale_shape},
                {"scale_rate", &p.scale_rate}},
               "cauchy");
    try {
        p.validate();
    } catch (const parameter_error& e) {
        throw config_error(e.what());
    }
    return p;
}

WeibullPriors weibull_prior(const Settings& st) {
    WeibullPriors p;
    take_prior(st.prior,
               {{"gamma_shape", &p.gamma_shape},
                {"gamma_rate", &p.gamma_rate},
                {"beta_shape", &p.beta_shape},
                {"beta_rate", &p.beta_rate}},
               "weibull");
    try {
        p.validate();
    } catch (const parameter_error& e) {
        throw config_error(e.what());
    }
    return p;
}

json prior_json(const GaussianPrior& p) {
    if (!p.proper()) return {{"kind", "known_variance"}, {"sigma2", p.sigma2}};
    return {{"kind", "nig"}, {"mu0", p.nig.mu0}, {"nu", p.nig.nu}, {"alpha", p.nig.alpha}, {"beta", p.nig.beta}};
}
json prior_json(const CauchyPriors& p) {
    return {{"loc_center", p.loc_center},
            {"loc_scale", p.loc_scale},
            {"scale_shape", p.scale_shape},
            {"scale_rate", p.scale_rate}};
}
json prior_json(const WeibullPriors& p) {
    return {{"gamma_shape", p.gamma_shape},
            {"gamma_rate", p.gamma_rate},
            {"beta_shape", p.beta_shape},
            {"beta_rate", p.beta_rate}};
}

json constraint_json(const RobustConstraint& c) {
    json j{{"stats", constraint_name(c)}, {"n", sample_size(c)}};
    if (const auto* q = std::get_if<QuantileConstraints>(&c)) {
        j["probs"] = q->probs;
        j["values"] = q->values;
    } else if (const auto* r = std::get_if<MedIqrConstraints>(&c)) {
        j["m"] = r->m;
        j["iqr"] = r->iqr;
    } else {
        const auto& d = std::get<MedMadConstraints>(c);
        j["m"] = d.m;
        j["s"] = d.s;
    }
    return j;
}

InitMode parse_init(const std::string& s) {
    if (s == "auto") return InitMode::automatic;
    if (s == "linear") return InitMode::linear;
    if (s == "deterministic") return InitMode::deterministic;
    throw config_error("unknown init mode '" + s + "' (auto, linear, deterministic)");
}

MedMadRule parse_rule(const std::string& s) {
    if (s == "exact") return MedMadRule::exact;
    if (s == "literal") return MedMadRule::literal;
    throw config_error("unknown median/MAD rule '" + s + "' (exact, literal)");
}

json versions() {
    return {{"rgibbs", kVersion},
            {"generator", Rng::generator_name},
            {"compiler", __VERSION__},
            {"boost", BOOST_LIB_VERSION},
            {"cli11", CLI11_VERSION},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

// ---- outputs ---------------------------------------------------------------

fs::path output_dir() {
    const char* env = std::getenv("RGIBBS_OUTPUT_DIR");
    return env != nullptr && *env != '\0' ? fs::path(env) : fs::path(".");
}

struct Paths {
    fs::path csv;
    fs::path summary;
};

Paths output_paths(const Settings& st, const char* command) {
    Paths p;
    p.csv = st.out.empty() ? output_dir() / (std::string(command) + ".csv") : fs::path(st.out);
    p.summary = st.summary.empty() ? fs::path(p.csv).replace_extension(".json") : fs::path(st.summary);
    return p;
}

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw config_error("cannot write '" + p.string() + "'");
    return out;
}

void write_csv(const fs::path& p, const std::vector<std::string>& names, const std::vector<std::size_t>& iters,
               const std::vector<std::vector<double>>& draws) {
    std::ofstream out = open_out(p);
    out << "iter";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    for (std::size_t r = 0; r < draws.size(); ++r) {
        out << iters[r];
        for (double v : draws[r]) out << ',' << fmt17(v);
        out << '\n';
    }
}

void write_json(const fs::path& p, const json& j) {
    std::ofstream out = open_out(p);
    out << j.dump(2) << '\n';
}

json null_or(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json summary_json(const std::vector<double>& v) {
    if (v.empty()) return nullptr;
    const Summary s = summarize(v);
    return {{"mean", s.mean}, {"sd", s.sd}, {"q2.5", s.q025}, {"q50", s.q50}, {"q97.5", s.q975}};
}

double ess_or_nan(const std::vector<double>& v) {
    try {
        return effective_sample_size(v);
    } catch (const diagnostics_error&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

std::vector<std::string> census_labels(const RobustConstraint& c) {
    std::vector<std::string> out;
    const auto* mm = std::get_if<MedMadConstraints>(&c);
    if (mm == nullptr) return out;
    if (mm->odd()) {
        for (std::size_t k = 1; k <= mm->half(); ++k) {
            for (int d : {0, 1}) out.push_back("k=" + std::to_string(k) + ",delta=" + std::to_string(d));
        }
    } else {
        for (int far : {0, 1}) {
            for (int near : {0, 1}) {
                out.push_back(std::string("near=") + (near ? "above" : "below") + ",far=" + (far ? "above" : "below"));
            }
        }
    }
    return out;
}

// ---- sample ----------------------------------------------------------------

template <ContinuousFamily D>
int sample_family(const Settings& st, const RobustConstraint& c, const typename FamilyTraits<D>::prior_type& prior) {
    if (st.chains == 0) throw config_error("--chains must be >= 1");
    GibbsConfig base;
    base.iterations = st.iters;
    base.burn_in = st.burn;
    base.thin = st.thin;
    base.n_pairs = st.n_pairs;
    base.collapsed_steps = st.pinned_steps;
    base.init = parse_init(st.init);
    base.medmad_rule = parse_rule(st.rule);
    base.adapt = st.adapt;
    if (!st.theta0.empty()) {
        if (st.theta0.size() != D::param_names.size()) {
            throw config_error("--theta0 expects " + std::to_string(D::param_names.size()) + " values");
        }
        base.theta0 = st.theta0;
    }

    std::vector<ChainOutput> outs(st.chains);
    std::vector<std::exception_ptr> errs(st.chains);
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < st.chains; ++k) {
        pool.emplace_back([&, k] {
            try {
                GibbsConfig cfg = base;
                cfg.seed = st.seed + k;
                outs[k] = run_chain<D>(c, prior, cfg);
            } catch (...) {
                errs[k] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errs) {
        if (e) std::rethrow_exception(e);
    }

    const Paths paths = output_paths(st, "sample");
    const std::size_t K = D::param_names.size();
    json chains = json::array();
    std::vector<std::vector<double>> pooled(K);
    std::vector<double> ess_total(K, 0.0);
    std::map<std::string, double> acc_mean;
    std::vector<std::size_t> census;
    for (std::size_t k = 0; k < st.chains; ++k) {
        const ChainOutput& o = outs[k];
        fs::path csv = paths.csv;
        if (st.chains > 1) {
            csv = paths.csv.parent_path() /
                  (paths.csv.stem().string() + "_c" + std::to_string(k) + paths.csv.extension().string());
        }
        std::vector<std::size_t> iters(o.draws.size());
        for (std::size_t r = 0; r < iters.size(); ++r) iters[r] = o.burn_in + (r + 1) * st.thin;
        write_csv(csv, o.param_names, iters, o.draws);

        json ess = json::object();
        for (std::size_t p = 0; p < K; ++p) {
            const auto col = column(o.draws, p);
            const double e = ess_or_nan(col);
            ess[o.param_names[p]] = null_or(e);
            ess_total[p] += std::isfinite(e) ? e : 0.0;
            pooled[p].insert(pooled[p].end(), col.begin(), col.end());
        }
        json acc = json::object();
        for (const auto& [name, rate] : o.acceptance) {
            acc[name] = rate;
            acc_mean[name] += rate / static_cast<double>(st.chains);
        }
        if (census.empty()) census.assign(o.census.size(), 0);
        for (std::size_t i = 0; i < o.census.size(); ++i) census[i] += o.census[i];
        json cj{{"chain", k},       {"seed", st.seed + k},           {"file", csv.string()},
                {"draws", o.draws.size()}, {"burn_in", o.burn_in}, {"acceptance", acc},
                {"ess", ess},       {"latent_draws", o.latent_draws}, {"wall_seconds", o.wall_seconds}};
        if (!o.census.empty()) cj["census"] = o.census;
        chains.push_back(std::move(cj));
    }

    json post = json::object();
    json ess = json::object();
    for (std::size_t p = 0; p < K; ++p) {
        const std::string name(D::param_names[p]);
        post[name] = summary_json(pooled[p]);
        if (!post[name].is_null()) post[name]["ess"] = ess_total[p];
        ess[name] = ess_total[p];
    }
    json summary{{"command", "sample"},
                 {"family", st.family},
                 {"constraint", constraint_json(c)},
                 {"prior", prior_json(prior)},
                 {"config",
                  {{"iterations", st.iters},
                   {"burn_in", outs[0].burn_in},
                   {"thin", st.thin},
                   {"chains", st.chains},
                   {"n_pairs", st.n_pairs},
                   {"pinned_steps", st.pinned_steps},
                   {"init", st.init},
                   {"rule", st.rule},
                   {"adapt", st.adapt}}},
                 {"seed", st.seed},
                 {"parameters", post},
                 {"acceptance", acc_mean},
                 {"ess", ess}};
    if (!census.empty()) {
        json cj = json::object();
        const auto labels = census_labels(c);
        for (std::size_t i = 0; i < census.size(); ++i) cj[labels[i]] = census[i];
        summary["census"] = cj;
    }
    summary["chains"] = chains;
    summary["versions"] = versions();
    write_json(paths.summary, summary);
    return Exit::ok;
}

int cmd_sample(const Settings& st) {
    const RobustConstraint c = make_constraint(st);
    if (st.family == "gaussian") return sample_family<Gaussian>(st, c, gaussian_prior(st));
    if (st.family == "cauchy") return sample_family<Cauchy>(st, c, cauchy_prior(st));
    if (st.family == "weibull") return sample_family<TranslatedWeibull>(st, c, weibull_prior(st));
    throw config_error("unknown --family '" + st.family + "' (gaussian, cauchy, weibull)");
}

// ---- abc -------------------------------------------------------------------

template <ContinuousFamily D>
int abc_family(const Settings& st, const RobustConstraint& c, const typename FamilyTraits<D>::prior_type& prior) {
    AbcConfig cfg;
    cfg.n_sims = st.n_sims;
    cfg.keep = st.keep;
    cfg.seed = st.seed;
    cfg.threads = st.threads;
    const AbcOutput o = abc_rejection<D>(c, prior, cfg);

    const Paths paths = output_paths(st, "abc");
    std::vector<std::size_t> rank(o.draws.size());
    for (std::size_t r = 0; r < rank.size(); ++r) rank[r] = r + 1;
    write_csv(paths.csv, o.param_names, rank, o.draws);

    json post = json::object();
    for (std::size_t p = 0; p < o.param_names.size(); ++p) post[o.param_names[p]] = summary_json(column(o.draws, p));
    json summary{{"command", "abc"},
                 {"family", st.family},
                 {"constraint", constraint_json(c)},
                 {"prior", prior_json(prior)},
                 {"config", {{"n_sims", cfg.n_sims}, {"keep", cfg.keep}, {"chunk", cfg.chunk}}},
                 {"seed", st.seed},
                 {"parameters", post},
                 {"observed", o.observed},
                 {"standardization", {{"method", "prior_predictive_sd"}, {"scale", o.scale}}},
                 {"kept", o.draws.size()},
                 {"invalid", o.invalid},
                 {"max_distance", o.distances.empty() ? json(nullptr) : json(o.distances.back())},
                 {"wall_seconds", o.wall_seconds},
                 {"file", paths.csv.string()},
                 {"versions", versions()}};
    write_json(paths.summary, summary);
    return Exit::ok;
}

int cmd_abc(const Settings& st) {
    const RobustConstraint c = make_constraint(st);
    if (st.family == "gaussian") return abc_family<Gaussian>(st, c, gaussian_prior(st));
    if (st.family == "cauchy") return abc_family<Cauchy>(st, c, cauchy_prior(st));
    if (st.family == "weibull") return abc_family<TranslatedWeibull>(st, c, weibull_prior(st));
    throw config_error("unknown --family '" + st.family + "' (gaussian, cauchy, weibull)");
}

// ---- approx ----------------------------------------------------------------

// Quantiles of very diffuse marginals overflow; those are reported as null.
template <class Dist>
json quantile_or_null(const Dist& d, double p, double shift = 0.0, double scale = 1.0) {
    try {
        const double q = quantile(d, p);
        return null_or(shift + scale * q);
    } catch (const std::exception&) {
        return nullptr;
    }
}

json nig_marginals(const NigParams& p) {
    using boost::math::inverse_gamma_distribution;
    using boost::math::students_t_distribution;
    const students_t_distribution<double> t(2.0 * p.alpha);
    const double sc = p.mu_scale();
    const inverse_gamma_distribution<double> ig(p.alpha, p.beta);
    const double df = 2.0 * p.alpha;
    json mu{{"mean", df > 1.0 ? json(p.mu0) : json(nullptr)},
            {"sd", df > 2.0 ? json(sc * std::sqrt(df / (df - 2.0))) : json(nullptr)},
            {"q2.5", quantile_or_null(t, 0.025, p.mu0, sc)},
            {"q50", p.mu0},
            {"q97.5", quantile_or_null(t, 0.975, p.mu0, sc)}};
    json s2{{"mean", p.alpha > 1.0 ? json(p.beta / (p.alpha - 1.0)) : json(nullptr)},
            {"sd", p.alpha > 2.0 ? json(p.beta / (p.alpha - 1.0) / std::sqrt(p.alpha - 2.0)) : json(nullptr)},
            {"q2.5", quantile_or_null(ig, 0.025)},
            {"q50", quantile_or_null(ig, 0.5)},
            {"q97.5", quantile_or_null(ig, 0.975)}};
    return {{"mu", mu}, {"sigma2", s2}};
}

int cmd_approx(const Settings& st) {
    if (st.family != "gaussian") throw config_error("approx is only defined for the gaussian family");
    if (!st.stats.empty() && st.stats != "medmad") throw config_error("approx needs --stats medmad");
    if (!st.m || !st.s || !st.n) throw config_error("approx needs --m, --s and --n");
    if (!(*st.s > 0.0) || !std::isfinite(*st.m)) throw config_error("approx needs a finite m and s > 0");
    const GaussianPrior prior = gaussian_prior(st);
    if (!prior.proper()) throw config_error("approx needs an NIG prior, not a known variance");
    const NigParams post = nig_approx_medmad(*st.m, *st.s, *st.n, prior.nig);
    const double n = static_cast<double>(*st.n);
    json j{{"command", "approx"},
           {"family", "gaussian"},
           {"constraint", {{"stats", "medmad"}, {"n", *st.n}, {"m", *st.m}, {"s", *st.s}}},
           {"prior", prior_json(prior)},
           {"n_med", EfficiencyConstants::eff_med * n},
           {"n_mad", EfficiencyConstants::eff_mad * n},
           {"c", EfficiencyConstants::c},
           {"c_times_s", EfficiencyConstants::c * *st.s},
           {"posterior", {{"M", post.mu0}, {"C", post.nu}, {"A", post.alpha}, {"B", post.beta}}},
           {"parameters", nig_marginals(post)},
           {"versions", versions()}};
    const fs::path p = st.summary.empty() ? output_dir() / "approx.json" : fs::path(st.summary);
    write_json(p, j);
    std::cout << j.dump(2) << '\n';
    return Exit::ok;
}

// ---- validate --------------------------------------------------------------

int cmd_validate(const std::string& suite, std::size_t iters, std::size_t sweeps, std::uint64_t seed,
                 const std::string& summary) {
    json report{{"suite", suite}, {"seed", seed}};
    bool pass = true;
    if (suite == "medmad-invariants" || suite == "invariants") {
        const bool all = suite == "invariants";
        json cases = json::array();
        for (const InvariantCase& r : invariant_suite(invariant_constraints(all, all, true), iters, seed)) {
            cases.push_back({{"engine", r.engine},
                             {"family", r.family},
                             {"n", r.n},
                             {"iterations", r.iterations},
                             {"max_residual", r.max_residual},
                             {"failures", r.failures},
                             {"pass", r.ok()}});
            pass = pass && r.ok();
        }
        report["cases"] = cases;
    } else if (suite == "reachability") {
        json runs = json::array();
        for (std::size_t n : {9, 12}) {
            const MedMadConstraints c(0.0, 0.6745, n);
            const auto labels = census_labels(c);
            for (const CensusRun& r : medmad_census(c, Gaussian(0, 1), sweeps, seed)) {
                json cells = json::object();
                for (std::size_t i = 0; i < r.census.size(); ++i) cells[labels[i]] = r.census[i];
                runs.push_back({{"n", n},
                                {"start", r.start},
                                {"sweeps", sweeps},
                                {"covered_at", r.covered() ? json(r.covered_at) : json(nullptr)},
                                {"census", cells}});
                pass = pass && r.covered();
            }
        }
        report["runs"] = runs;
    } else if (suite == "negative-control") {
        json controls = json::array();
        for (const NegativeControl& r : corrupted_state_controls(seed)) {
            controls.push_back({{"engine", r.engine},
                                {"healthy_passes", r.healthy_passes},
                                {"violation_reported", r.corruption_detected}});
            pass = pass && r.ok();
        }
        report["controls"] = controls;
    } else {
        throw config_error("unknown suite '" + suite +
                           "' (medmad-invariants, invariants, reachability, negative-control)");
    }
    report["pass"] = pass;
    report["versions"] = versions();
    if (!summary.empty()) write_json(summary, report);
    std::cout << report.dump(2) << '\n';
    return pass ? Exit::ok : Exit::violation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Posterior sampling from robust summary statistics"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Flags sf;
    CLI::App* sample = app.add_subcommand("sample", "run the Gibbs sampler");
    add_model_flags(sample, sf);
    sample->add_option("--iters", sf.iters, "iterations T");
    sample->add_option("--burn", sf.burn, "burn-in (default 5N after a deterministic start, else max(1000, T/10))");
    sample->add_option("--thin", sf.thin, "keep every k-th draw");
    sample->add_option("--chains", sf.chains, "independent chains, seeds seed + chain index");
    sample->add_option("--n-pairs", sf.n_pairs, "median/MAD pair updates per sweep (default N)");
    sample->add_option("--pinned-steps", sf.pinned_steps,
                       "Cauchy/Weibull theta steps given only the pinned order statistics (quantile and "
                       "median/IQR data), per iteration");
    sample->add_option("--init", sf.init, "auto, linear or deterministic");
    sample->add_option("--rule", sf.rule, "median/MAD pair rule: exact or literal");
    sample->add_option("--theta0", sf.theta0, "starting parameters")->delimiter(',');
    sample->add_flag("--no-adapt", sf.no_adapt, "disable proposal-scale tuning during burn-in");
    add_output_flags(sample, sf);

    Flags af;
    CLI::App* abc = app.add_subcommand("abc", "rejection ABC baseline");
    add_model_flags(abc, af);
    abc->add_option("--n-sims", af.n_sims, "simulations");
    abc->add_option("--keep", af.keep, "simulations retained");
    abc->add_option("--threads", af.threads, "worker threads (0: all cores)");
    add_output_flags(abc, af);

    Flags xf;
    CLI::App* approx = app.add_subcommand("approx", "large-N NIG approximation for median/MAD data");
    add_model_flags(approx, xf);
    approx->add_option("--summary", xf.summary, "JSON output (default: approx.json in the output directory)");

    std::string suite;
    std::size_t v_iters = 10000;
    std::size_t v_sweeps = 100000;
    std::uint64_t v_seed = 1;
    std::string v_summary;
    CLI::App* validate = app.add_subcommand("validate", "run a validation suite");
    validate->add_option("suite", suite, "medmad-invariants, invariants, reachability or negative-control")
        ->required();
    validate->add_option("--iters", v_iters, "iterations per invariant case");
    validate->add_option("--sweeps", v_sweeps, "sweeps per reachability run");
    validate->add_option("--seed", v_seed, "64-bit seed");
    validate->add_option("--summary", v_summary, "also write the report here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return Exit::usage;
    }

    try {
        if (*sample) return cmd_sample(resolve(sf));
        if (*abc) return cmd_abc(resolve(af));
        if (*approx) return cmd_approx(resolve(xf));
        return cmd_validate(suite, v_iters, v_sweeps, v_seed, v_summary);
    } catch (const infeasible_error& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return Exit::infeasible;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return Exit::usage;
    } catch (const parameter_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return Exit::usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
