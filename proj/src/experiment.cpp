#include "polar/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#ifndef POLAR_VERSION
#define POLAR_VERSION "0.0.0"
#endif

namespace polar {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kPolicies = {
    "polar",        "polar_plus", "polar_plus_no_doubling", "polar_plus_no_forced", "polar_plus_no_exact",
    "polar_ts",     "polar_plus_ts", "lru", "lfu", "static", "eps_greedy", "oracle_cache"};

const std::vector<std::string> kSuites = {"main", "scaling", "alpha", "epoch", "ablation", "cachesize", "cachelearn",
                                          "router"};

const std::vector<std::string> kMainPolicies = {"polar_plus", "polar", "lru", "lfu", "static", "eps_greedy",
                                                "oracle_cache"};

/// Shortest round-trip decimal form, independent of locale.
std::string num(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw std::runtime_error("number formatting failed");
    return std::string(buf, end);
}

std::string ids_text(const CacheState& c) {
    std::string s;
    for (std::size_t i = 0; i < c.resident.size(); ++i) {
        if (i) s += ' ';
        s += std::to_string(c.resident[i]);
    }
    return s;
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

template <class T>
void read_opt(const json& j, const char* key, std::optional<T>& out) {
    if (!j.contains(key)) return;
    if (j.at(key).is_null()) {
        out.reset();
    } else {
        out = j.at(key).get<T>();
    }
}

template <class T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

void write_atomic(const fs::path& path, const std::string& text) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << text;
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

RunArtifacts run_policy(const ExperimentConfig& c, const Instance& inst, const std::string& policy,
                        Environment& env, std::uint64_t seed) {
    RunOptions opts;
    opts.seed = seed;
    opts.ts_scale = c.ts_scale;
    opts.epsilon = c.epsilon;
    opts.enumeration_budget = c.enumeration_budget;
    opts.track_coverage = c.track_coverage;
    const int h = c.epoch.epoch_length;

    EpochSpec plus = c.epoch;
    plus.mode = EpochSpec::Mode::Doubling;
    plus.no_doubling = plus.no_forced = plus.no_exact = false;

    if (policy == "polar" || policy == "polar_ts") {
        if (policy == "polar_ts") opts.router = RouterKind::Thompson;
        return run_polar(inst.library, c.reward, EpochSpec::fixed(h), env, c.horizon, opts);
    }
    if (policy.rfind("polar_plus", 0) == 0) {
        if (policy == "polar_plus_ts") opts.router = RouterKind::Thompson;
        if (policy == "polar_plus_no_doubling") plus.no_doubling = true;
        if (policy == "polar_plus_no_forced") plus.no_forced = true;
        if (policy == "polar_plus_no_exact") plus.no_exact = true;
        if (policy != "polar_plus" && policy != "polar_plus_ts" && !plus.no_doubling && !plus.no_forced &&
            !plus.no_exact) {
            throw ConfigError("unknown policy '" + policy + "'");
        }
        return run_polar_plus(inst.library, c.reward, plus, env, c.horizon, opts);
    }
    return run_baseline(parse_baseline_kind(policy), inst.library, c.reward, env, c.horizon, h, opts);
}

/// Shared per-(variant, seed) data: contexts, prefix oracle values, probes.
struct SeedContext {
    std::vector<long> checkpoints;
    std::vector<OracleResult> oracles;
    std::vector<Vector> probes;
};

SeedContext prepare_seed(const ExperimentConfig& c, const Instance& inst, std::uint64_t seed) {
    Environment env(inst.library, inst.workload, c.reward.sigma, seed);
    SeedContext sc;
    sc.checkpoints = c.checkpoints.empty() ? default_checkpoints(c.horizon) : c.checkpoints;
    std::sort(sc.checkpoints.begin(), sc.checkpoints.end());
    sc.checkpoints.erase(std::unique(sc.checkpoints.begin(), sc.checkpoints.end()), sc.checkpoints.end());
    std::erase_if(sc.checkpoints, [&](long t) { return t < 1 || t > c.horizon; });
    if (sc.checkpoints.empty() || sc.checkpoints.back() != c.horizon) sc.checkpoints.push_back(c.horizon);
    const auto contexts = env.hindsight_contexts(c.horizon);
    sc.oracles = oracle_prefix_values(inst.library, c.reward, contexts, sc.checkpoints, c.enumeration_budget);
    sc.probes = env.probe_contexts(c.probe_seed, c.probe_count);
    return sc;
}

CellResult evaluate(const ExperimentConfig& c, const Instance& inst, const SeedContext& sc,
                    const std::string& policy, std::uint64_t seed) {
    CellResult cell;
    cell.policy = policy;
    cell.seed = seed;
    cell.trace_every = c.trace_every;
    Environment env(inst.library, inst.workload, c.reward.sigma, seed);
    const RunArtifacts run = run_policy(c, inst, policy, env, seed);

    cell.ledger = ledger_at(run, inst.library, c.reward, sc.checkpoints, sc.oracles);
    cell.switches = run.switches;
    cell.caches = run.caches;

    const CacheState& best = sc.oracles.back().cache;
    const int n = inst.library.size();
    const int d = inst.library.dim();
    double potential = 0.0;
    long t = 0;
    for (long cp : sc.checkpoints) {
        for (; t < cp; ++t) potential += run.rounds[static_cast<std::size_t>(t)].width_sq;
        const CacheState& cur = run.cache_at_round(cp - 1);
        CellResult::Diagnostic dg;
        dg.t = cp;
        dg.jaccard = jaccard(cur.resident, best.resident);
        if (!sc.probes.empty()) dg.cache_quality_loss = cache_quality_loss(inst.library, c.reward, cur, best, sc.probes);
        dg.elliptic_potential = potential;
        dg.elliptic_bound = elliptic_potential_bound(n, d, c.reward.ridge, cp);
        cell.diagnostics.push_back(dg);
    }
    if (run.coverage_pairs > 0) {
        cell.coverage = static_cast<double>(run.coverage_hits) / static_cast<double>(run.coverage_pairs);
    }
    if (c.trace_every > 0) {
        for (long r = 0; r < run.horizon(); r += c.trace_every) cell.trace.push_back(run.rounds[static_cast<std::size_t>(r)]);
    }
    return cell;
}

std::string regret_header() {
    return "schema_version,suite,variant,policy,seed,t,oracle,mu_sum,switching,pseudo_regret,quality_loss,"
           "latency_cost\n";
}
std::string switches_header() {
    return "schema_version,suite,variant,policy,seed,t,admitted,charged,cumulative_updates,cache\n";
}
std::string diagnostics_header() {
    return "schema_version,suite,variant,policy,seed,t,jaccard,cache_quality_loss,elliptic_potential,"
           "elliptic_bound,coverage\n";
}
std::string trace_header() {
    return "schema_version,suite,variant,policy,seed,t,action,hot,phase,q,mu,width_sq,cache_index\n";
}

std::string prefix(const std::string& suite, const CellResult& c) {
    return std::to_string(kCsvSchemaVersion) + "," + suite + "," + c.variant + "," + c.policy + "," +
           std::to_string(c.seed) + ",";
}

std::string regret_rows(const std::string& suite, const CellResult& c) {
    std::string s;
    for (const auto& l : c.ledger) {
        s += prefix(suite, c) + std::to_string(l.t) + "," + num(l.oracle) + "," + num(l.mu_sum) + "," +
             num(l.switching) + "," + num(l.pseudo_regret) + "," + num(l.quality_loss) + "," + num(l.latency_cost) +
             "\n";
    }
    return s;
}

std::string switches_rows(const std::string& suite, const CellResult& c) {
    std::string s;
    int updates = 0;
    for (std::size_t i = 0; i < c.switches.size(); ++i) {
        const auto& e = c.switches[i];
        if (e.admitted > 0) ++updates;
        s += prefix(suite, c) + std::to_string(e.round) + "," + std::to_string(e.admitted) + "," +
             (e.charged ? "1" : "0") + "," + std::to_string(updates) + "," + ids_text(c.caches.at(i + 1)) + "\n";
    }
    return s;
}

std::string diagnostics_rows(const std::string& suite, const CellResult& c) {
    std::string s;
    for (const auto& d : c.diagnostics) {
        s += prefix(suite, c) + std::to_string(d.t) + "," + num(d.jaccard) + "," + num(d.cache_quality_loss) + "," +
             num(d.elliptic_potential) + "," + num(d.elliptic_bound) + "," + num(c.coverage) + "\n";
    }
    return s;
}

std::string trace_rows(const std::string& suite, const CellResult& c) {
    std::string s;
    for (std::size_t i = 0; i < c.trace.size(); ++i) {
        const auto& r = c.trace[i];
        const long t = static_cast<long>(i) * c.trace_every;
        s += prefix(suite, c) + std::to_string(t) + "," + std::to_string(r.action) + "," + (r.hot ? "1" : "0") + "," +
             (r.phase == Phase::Forced ? "forced" : "exploit") + "," + num(r.q) + "," + num(r.mu) + "," +
             num(r.width_sq) + "," + std::to_string(r.cache_index) + "\n";
    }
    return s;
}

template <class F>
std::string join_cells(std::string header, const std::string& suite, const std::vector<CellResult>& cells, F rows) {
    for (const auto& c : cells) header += rows(suite, c);
    return header;
}

std::string timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

const std::vector<std::string>& known_policies() { return kPolicies; }
const std::vector<std::string>& known_suites() { return kSuites; }

bool is_known_policy(const std::string& name) {
    return std::find(kPolicies.begin(), kPolicies.end(), name) != kPolicies.end();
}

std::vector<long> default_checkpoints(long horizon) {
    std::vector<long> out;
    for (long t = 200; t < horizon; t *= 2) out.push_back(t);
    out.push_back(horizon);
    return out;
}

void ExperimentConfig::validate() const {
    if (std::find(kSuites.begin(), kSuites.end(), suite) == kSuites.end()) {
        throw ConfigError("unknown suite '" + suite + "'");
    }
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    for (const auto& p : policies) {
        if (!is_known_policy(p)) throw ConfigError("unknown policy '" + p + "'");
    }
    epoch.validate();
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0,1]");
    if (ts_scale && !(*ts_scale > 0.0)) throw ConfigError("ts_scale must be > 0");
    if (probe_count < 0) throw ConfigError("probe_count must be >= 0");
    if (trace_every < 0) throw ConfigError("trace_every must be >= 0");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    for (long t : checkpoints) {
        if (t < 1) throw ConfigError("checkpoints must be >= 1");
    }
}

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    ExperimentConfig c;
    try {
        read(j, "suite", c.suite);
        read(j, "horizon", c.horizon);
        read(j, "policies", c.policies);
        read(j, "seeds", c.seeds);
        read(j, "enumeration_budget", c.enumeration_budget);
        read(j, "checkpoints", c.checkpoints);
        read(j, "jobs", c.jobs);
        if (j.contains("reward")) {
            const auto& r = j.at("reward");
            read(r, "alpha", c.reward.alpha);
            read(r, "gamma", c.reward.gamma);
            read(r, "sigma", c.reward.sigma);
            read(r, "ridge", c.reward.ridge);
            read(r, "cache_size", c.reward.cache_size);
            read(r, "delta", c.reward.delta);
        }
        if (j.contains("epoch")) {
            const auto& e = j.at("epoch");
            read(e, "length", c.epoch.epoch_length);
            read(e, "kappa", c.epoch.kappa);
            read_opt(e, "c0", c.epoch.c0);
        }
        if (j.contains("router")) {
            const auto& r = j.at("router");
            read_opt(r, "ts_scale", c.ts_scale);
        }
        if (j.contains("baselines")) read(j.at("baselines"), "epsilon", c.epsilon);
        if (j.contains("instance")) {
            const auto& g = j.at("instance");
            auto& o = c.generator;
            read(g, "n_adapters", o.n_adapters);
            read(g, "d", o.d);
            read(g, "hot_count", o.cache_size);
            read(g, "seed", o.seed);
            read(g, "diversity", o.diversity);
            read(g, "include_base", o.include_base);
            read(g, "latency_min_ms", o.latency_min_ms);
            read(g, "latency_max_ms", o.latency_max_ms);
            read(g, "alpha", o.alpha);
            read(g, "n_tasks", o.n_tasks);
            read(g, "zipf_exponent", o.zipf_exponent);
            read(g, "task_scale", o.task_scale);
            read(g, "context_noise", o.context_noise);
            read(g, "common_quality", o.common_quality);
            read(g, "hot_gain", o.hot_gain);
            read(g, "generalist_ratio", o.generalist_ratio);
            read(g, "weak_gain_min", o.weak_gain_min);
            read(g, "weak_gain_max", o.weak_gain_max);
            if (g.contains("profiles")) {
                if (g.at("profiles").is_null()) {
                    c.profiles.reset();
                } else {
                    c.profiles = fs::path(g.at("profiles").get<std::string>());
                }
            }
        }
        if (j.contains("diagnostics")) {
            const auto& d = j.at("diagnostics");
            read(d, "probe_count", c.probe_count);
            read(d, "probe_seed", c.probe_seed);
            read(d, "track_coverage", c.track_coverage);
        }
        if (j.contains("output")) {
            const auto& o = j.at("output");
            if (o.contains("dir")) c.out_dir = o.at("dir").get<std::string>();
            read(o, "trace_every", c.trace_every);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
    const auto& o = c.generator;
    json j = {
        {"suite", c.suite},
        {"horizon", c.horizon},
        {"policies", c.policies},
        {"seeds", c.seeds},
        {"enumeration_budget", c.enumeration_budget},
        {"checkpoints", c.checkpoints},
        {"jobs", c.jobs},
        {"reward",
         {{"alpha", c.reward.alpha},
          {"gamma", c.reward.gamma},
          {"sigma", c.reward.sigma},
          {"ridge", c.reward.ridge},
          {"cache_size", c.reward.cache_size},
          {"delta", c.reward.delta}}},
        {"epoch", {{"length", c.epoch.epoch_length}, {"kappa", c.epoch.kappa}, {"c0", opt(c.epoch.c0)}}},
        {"router", {{"ts_scale", opt(c.ts_scale)}}},
        {"baselines", {{"epsilon", c.epsilon}}},
        {"instance",
         {{"n_adapters", o.n_adapters},
          {"d", o.d},
          {"hot_count", o.cache_size},
          {"seed", o.seed},
          {"diversity", o.diversity},
          {"include_base", o.include_base},
          {"latency_min_ms", o.latency_min_ms},
          {"latency_max_ms", o.latency_max_ms},
          {"alpha", o.alpha},
          {"n_tasks", o.n_tasks},
          {"zipf_exponent", o.zipf_exponent},
          {"task_scale", o.task_scale},
          {"context_noise", o.context_noise},
          {"common_quality", o.common_quality},
          {"hot_gain", o.hot_gain},
          {"generalist_ratio", o.generalist_ratio},
          {"weak_gain_min", o.weak_gain_min},
          {"weak_gain_max", o.weak_gain_max},
          {"profiles", c.profiles ? json(c.profiles->string()) : json(nullptr)}}},
        {"diagnostics",
         {{"probe_count", c.probe_count}, {"probe_seed", c.probe_seed}, {"track_coverage", c.track_coverage}}},
        {"output", {{"dir", c.out_dir.string()}, {"trace_every", c.trace_every}}},
    };
    return j.dump(2);
}

std::vector<Variant> expand_suite(const ExperimentConfig& base) {
    base.validate();
    auto with_policies = [&](std::vector<std::string> defaults) {
        ExperimentConfig c = base;
        if (c.policies.empty()) c.policies = std::move(defaults);
        return c;
    };
    std::vector<Variant> out;
    const std::string& s = base.suite;
    if (s == "main") {
        out.push_back({"default", with_policies(kMainPolicies)});
    } else if (s == "scaling") {
        for (long t : {6000L, 12500L, 25000L, 50000L, 100000L, 200000L, 500000L}) {
            ExperimentConfig c = with_policies({"polar_plus", "polar", "lru", "lfu", "static", "eps_greedy"});
            c.horizon = t;
            c.checkpoints.clear();
            out.push_back({"T=" + std::to_string(t), c});
        }
    } else if (s == "alpha") {
        for (double a : {0.1, 0.2, 0.5, 1.0}) {
            ExperimentConfig c = with_policies(kMainPolicies);
            c.reward.alpha = a;
            out.push_back({"alpha=" + num(a), c});
        }
    } else if (s == "epoch") {
        for (int h : {50, 100, 200, 500, 1000}) {
            ExperimentConfig c = with_policies({"polar", "polar_plus_no_doubling", "polar_plus"});
            c.epoch.epoch_length = h;
            out.push_back({"H=" + std::to_string(h), c});
        }
    } else if (s == "ablation") {
        out.push_back({"default", with_policies({"polar_plus", "polar_plus_no_doubling", "polar_plus_no_forced",
                                                 "polar_plus_no_exact", "polar"})});
    } else if (s == "cachesize") {
        for (int k = 2; k <= 7; ++k) {
            ExperimentConfig c = with_policies(kMainPolicies);
            c.reward.cache_size = k;
            out.push_back({"K=" + std::to_string(k), c});
        }
    } else if (s == "cachelearn") {
        ExperimentConfig c = with_policies({"polar_plus", "polar", "lru", "lfu"});
        if (c.checkpoints.empty()) {
            std::set<long> cps;
            for (long t : default_checkpoints(c.horizon)) cps.insert(t);
            for (long t : {1000L, 4000L, 10000L, 30000L}) {
                if (t < c.horizon) cps.insert(t);
            }
            c.checkpoints.assign(cps.begin(), cps.end());
        }
        out.push_back({"default", c});
    } else if (s == "router") {
        out.push_back({"default", with_policies({"polar", "polar_ts", "polar_plus", "polar_plus_ts"})});
    } else {
        throw ConfigError("unknown suite '" + s + "'");
    }
    return out;
}

Instance build_instance(const ExperimentConfig& config) {
    GeneratorOptions g = config.generator;
    if (config.profiles) {
        Library lib = load_profiles(*config.profiles);
        // The workload still comes from the generator, sized to the file's dimension.
        g.d = lib.dim();
        g.n_adapters = std::max(lib.size(), g.cache_size + 1);
        g.alpha = 1e9;  // the dominance check applies to generated libraries only
        return Instance{std::move(lib), generate_instance(g).workload};
    }
    GeneratedInstance gi = generate_instance(g);
    return Instance{std::move(gi.library), std::move(gi.workload)};
}

CellResult run_cell(const ExperimentConfig& config, const Instance& inst, const std::string& policy,
                    std::uint64_t seed) {
    if (!is_known_policy(policy)) throw ConfigError("unknown policy '" + policy + "'");
    config.reward.validate(inst.library.size());
    const SeedContext sc = prepare_seed(config, inst, seed);
    return evaluate(config, inst, sc, policy, seed);
}

std::string regret_csv(const std::string& suite, const std::vector<CellResult>& cells) {
    return join_cells(regret_header(), suite, cells, regret_rows);
}
std::string switches_csv(const std::string& suite, const std::vector<CellResult>& cells) {
    return join_cells(switches_header(), suite, cells, switches_rows);
}
std::string diagnostics_csv(const std::string& suite, const std::vector<CellResult>& cells) {
    return join_cells(diagnostics_header(), suite, cells, diagnostics_rows);
}
std::string trace_csv(const std::string& suite, const std::vector<CellResult>& cells) {
    return join_cells(trace_header(), suite, cells, trace_rows);
}

MatrixSummary run_matrix(const ExperimentConfig& config) {
    const std::vector<Variant> variants = expand_suite(config);
    fs::create_directories(config.out_dir);
    const fs::path cell_dir = config.out_dir / ".cells";
    fs::create_directories(cell_dir);

    struct Job {
        std::size_t variant;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (std::size_t v = 0; v < variants.size(); ++v) {
        for (auto seed : variants[v].config.seeds) jobs.push_back({v, seed});
    }
    std::vector<Instance> instances;
    for (const auto& v : variants) instances.push_back(build_instance(v.config));

    // Each job covers every policy of one (variant, seed) so they share contexts and oracle values.
    std::mutex mu;
    std::map<std::string, std::string> failures;
    std::atomic<std::size_t> next{0};
    auto cell_name = [&](std::size_t v, const std::string& policy, std::uint64_t seed) {
        return std::to_string(v) + "__" + policy + "__" + std::to_string(seed);
    };
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            const Job& job = jobs[i];
            const Variant& var = variants[job.variant];
            const Instance& inst = instances[job.variant];
            std::optional<SeedContext> sc;
            std::string seed_error;
            try {
                var.config.reward.validate(inst.library.size());
                sc = prepare_seed(var.config, inst, job.seed);
            } catch (const std::exception& e) {
                seed_error = e.what();
            }
            for (const auto& policy : var.config.policies) {
                const std::string name = cell_name(job.variant, policy, job.seed);
                try {
                    if (!sc) throw std::runtime_error(seed_error);
                    CellResult cell = evaluate(var.config, inst, *sc, policy, job.seed);
                    cell.variant = var.label;
                    const fs::path base = cell_dir / name;
                    write_atomic(fs::path(base) += ".regret", regret_rows(config.suite, cell));
                    write_atomic(fs::path(base) += ".switches", switches_rows(config.suite, cell));
                    write_atomic(fs::path(base) += ".diagnostics", diagnostics_rows(config.suite, cell));
                    if (config.trace_every > 0) write_atomic(fs::path(base) += ".trace", trace_rows(config.suite, cell));
                } catch (const std::exception& e) {
                    std::lock_guard lock(mu);
                    failures[var.label + "/" + policy + "/seed " + std::to_string(job.seed)] = e.what();
                }
            }
        }
    };
    const int n_threads = std::max(1, std::min<int>(config.jobs, static_cast<int>(jobs.size())));
    std::vector<std::thread> pool;
    for (int i = 1; i < n_threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    // Merge in (variant, policy, seed) order.
    auto slurp = [](const fs::path& p) -> std::string {
        std::ifstream in(p, std::ios::binary);
        if (!in) return {};
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    std::string regret = regret_header(), switches = switches_header(), diags = diagnostics_header(),
                trace = trace_header();
    MatrixSummary summary;
    for (std::size_t v = 0; v < variants.size(); ++v) {
        for (const auto& policy : variants[v].config.policies) {
            for (auto seed : variants[v].config.seeds) {
                ++summary.cells;
                const fs::path base = cell_dir / cell_name(v, policy, seed);
                regret += slurp(fs::path(base) += ".regret");
                switches += slurp(fs::path(base) += ".switches");
                diags += slurp(fs::path(base) += ".diagnostics");
                if (config.trace_every > 0) trace += slurp(fs::path(base) += ".trace");
            }
        }
    }
    write_atomic(config.out_dir / "regret.csv", regret);
    write_atomic(config.out_dir / "switches.csv", switches);
    write_atomic(config.out_dir / "diagnostics.csv", diags);
    if (config.trace_every > 0) write_atomic(config.out_dir / "trace.csv", trace);
    fs::remove_all(cell_dir);

    json failed = json::array();
    for (const auto& [cell, msg] : failures) {
        failed.push_back({{"cell", cell}, {"error", msg}});
        summary.failures.push_back(cell + ": " + msg);
    }
    summary.failed = static_cast<int>(failures.size());
    json variants_json = json::array();
    for (const auto& v : variants) variants_json.push_back({{"label", v.label}, {"config", json::parse(config_to_json(v.config))}});
    json manifest = {
        {"schema_version", kCsvSchemaVersion},
        {"version", POLAR_VERSION},
        {"created", timestamp()},
        {"suite", config.suite},
        {"config", json::parse(config_to_json(config))},
        {"variants", variants_json},
        {"cells", summary.cells},
        {"failed_cells", failed},
        {"decomposition",
         "quality_loss = sum_t max_a <theta*_a,x_t> - <theta*_{a_t},x_t>; latency_cost = cold penalties paid + "
         "switching"},
    };
    write_atomic(config.out_dir / "manifest.json", manifest.dump(2) + "\n");
    return summary;
}

} // namespace polar
