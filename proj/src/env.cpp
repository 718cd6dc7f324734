#include "polar/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace polar {

namespace {

constexpr std::uint64_t kTaskStream = 1;
constexpr std::uint64_t kContextNoiseStream = 2;
constexpr std::uint64_t kQualityNoiseStream = 3;

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t stream, std::uint64_t round, std::uint64_t index) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ stream);
    h = splitmix64(h ^ round);
    return splitmix64(h ^ index);
}

} // namespace

double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t round, std::uint64_t index) {
    return static_cast<double>(mix(seed, stream, round, index) >> 11) * 0x1.0p-53;
}

double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t round, std::uint64_t index) {
    // Box-Muller on two decorrelated counters; u1 in (0, 1].
    const double u1 = 1.0 - counter_uniform(seed, stream, round, 2 * index);
    const double u2 = counter_uniform(seed, stream, round, 2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// ---------------------------------------------------------------------------------------------
// Workload

std::vector<double> WorkloadSpec::task_probabilities() const {
    std::vector<double> p(static_cast<std::size_t>(n_tasks));
    for (int i = 0; i < n_tasks; ++i) {
        p[static_cast<std::size_t>(i)] = std::pow(static_cast<double>(i + 1), -zipf_exponent);
    }
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& v : p) v /= total;
    return p;
}

void WorkloadSpec::validate(int d) const {
    if (n_tasks < 1) throw ConfigError("workload: n_tasks must be >= 1");
    if (!(zipf_exponent > 0.0)) throw ConfigError("workload: zipf exponent must be > 0");
    if (!(context_noise >= 0.0)) throw ConfigError("workload: context noise must be >= 0");
    if (static_cast<int>(task_means.size()) != n_tasks) {
        throw ConfigError("workload: expected " + std::to_string(n_tasks) + " task means, got " +
                          std::to_string(task_means.size()));
    }
    for (const auto& m : task_means) {
        if (m.size() != d) throw ConfigError("workload: task mean dimension mismatch");
        if (m.norm() > 1.0 + kNormTolerance) throw ConfigError("workload: task means must have norm <= 1");
    }
}

Vector cap_norm(Vector x) {
    const double n = x.norm();
    if (n > 1.0) x /= n;
    return x;
}

Environment::Environment(const Library& lib, WorkloadSpec workload, double sigma, std::uint64_t run_seed,
                         bool hindsight_available)
    : lib_(&lib), workload_(std::move(workload)), sigma_(sigma), hindsight_(hindsight_available) {
    workload_.validate(lib.dim());
    stream_seed_ = splitmix64(workload_.seed) ^ splitmix64(run_seed + 0x632BE59BD9B4E019ULL);
    const auto p = workload_.task_probabilities();
    cumulative_.resize(p.size());
    std::partial_sum(p.begin(), p.end(), cumulative_.begin());
    cumulative_.back() = 1.0;
}

Context Environment::draw(std::uint64_t stream_seed, long t) const {
    const auto round = static_cast<std::uint64_t>(t);
    const double u = counter_uniform(stream_seed, kTaskStream, round, 0);
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const int task = static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative_.begin(), workload_.n_tasks - 1));
    Vector x = workload_.task_means[static_cast<std::size_t>(task)];
    if (workload_.context_noise > 0.0) {
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            x[j] += workload_.context_noise *
                    counter_normal(stream_seed, kContextNoiseStream, round, static_cast<std::uint64_t>(j));
        }
    }
    return Context{cap_norm(std::move(x)), task};
}

Context Environment::context_at(long t) const { return draw(stream_seed_, t); }

Context Environment::next_context() { return context_at(round_++); }

double Environment::observe_quality(long t, AdapterId a, const Vector& x) const {
    const double mean = (*lib_)[a].theta_star.dot(x);
    if (sigma_ == 0.0) return mean;
    return mean + sigma_ * counter_normal(stream_seed_, kQualityNoiseStream, static_cast<std::uint64_t>(t),
                                          static_cast<std::uint64_t>(a));
}

std::vector<Vector> Environment::hindsight_contexts(long horizon) const {
    if (!hindsight_) {
        throw ConfigError("environment is streaming-only; hindsight contexts are unavailable");
    }
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(std::max(horizon, 0L)));
    for (long t = 0; t < horizon; ++t) out.push_back(context_at(t).x);
    return out;
}

std::vector<Vector> Environment::probe_contexts(std::uint64_t probe_seed, long count) const {
    const std::uint64_t seed = splitmix64(stream_seed_ ^ splitmix64(probe_seed ^ 0xD1B54A32D192ED03ULL));
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0L)));
    for (long t = 0; t < count; ++t) out.push_back(draw(seed, t).x);
    return out;
}

// ---------------------------------------------------------------------------------------------
// Profile files

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_real(const std::string& s, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw IngestionError(what + ": '" + s + "' is not a number");
    }
    if (used != s.size() || !std::isfinite(v)) throw IngestionError(what + ": '" + s + "' is not a finite number");
    return v;
}

bool parse_bool(const std::string& s, const std::string& what) {
    if (s == "1" || s == "true" || s == "True") return true;
    if (s == "0" || s == "false" || s == "False" || s.empty()) return false;
    throw IngestionError(what + ": '" + s + "' is not a boolean");
}

} // namespace

Library parse_profiles(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> header;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
        header = split_fields(line);
        break;
    }
    if (header.empty()) throw IngestionError(source + ": empty profile file");

    const std::vector<std::string> fixed = {"id", "name", "rank", "size_mb", "cold_latency_ms", "is_base"};
    if (header.size() <= fixed.size() || !std::equal(fixed.begin(), fixed.end(), header.begin())) {
        throw IngestionError(source + ": header must start with id,name,rank,size_mb,cold_latency_ms,is_base "
                                      "followed by theta[0..d-1]");
    }
    const int d = static_cast<int>(header.size() - fixed.size());
    for (int j = 0; j < d; ++j) {
        const std::string expect = "theta[" + std::to_string(j) + "]";
        if (header[fixed.size() + static_cast<std::size_t>(j)] != expect) {
            throw IngestionError(source + ": expected column '" + expect + "'");
        }
    }

    std::vector<AdapterProfile> adapters;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
        const std::string where = source + ":" + std::to_string(line_no);
        const auto f = split_fields(line);
        if (f.size() != header.size()) {
            throw IngestionError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                                 std::to_string(f.size()));
        }
        AdapterProfile p;
        const double id = parse_real(f[0], where + " id");
        if (id != std::floor(id)) throw IngestionError(where + ": id must be an integer");
        p.id = static_cast<AdapterId>(id);
        if (p.id != static_cast<AdapterId>(adapters.size())) {
            throw IngestionError(where + ": ids must be dense and ordered (expected " +
                                 std::to_string(adapters.size()) + ")");
        }
        p.name = f[1];
        if (!f[2].empty()) p.rank = static_cast<int>(parse_real(f[2], where + " rank"));
        if (!f[3].empty()) p.size_mb = parse_real(f[3], where + " size_mb");
        const double ms = parse_real(f[4], where + " cold_latency_ms");
        if (ms < 0.0) throw IngestionError(where + ": cold_latency_ms must be >= 0");
        p.cold_latency_s = ms / 1e3;
        p.is_base = parse_bool(f[5], where + " is_base");
        if (p.is_base && p.cold_latency_s != 0.0) {
            throw IngestionError(where + ": the base arm must have cold_latency_ms = 0");
        }
        p.theta_star.resize(d);
        for (int j = 0; j < d; ++j) {
            p.theta_star[j] = parse_real(f[fixed.size() + static_cast<std::size_t>(j)], where + " theta");
        }
        if (p.theta_star.norm() > 1.0 + kNormTolerance) {
            throw IngestionError(where + ": ||theta||_2 = " + std::to_string(p.theta_star.norm()) + " exceeds 1");
        }
        adapters.push_back(std::move(p));
    }
    if (adapters.empty()) throw IngestionError(source + ": no adapter rows");
    try {
        return Library(std::move(adapters), d);
    } catch (const std::invalid_argument& e) {
        throw IngestionError(source + ": " + e.what());
    }
}

Library load_profiles(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open profile file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_profiles(buf.str(), path.string());
}

std::string format_profiles(const Library& lib) {
    std::ostringstream out;
    out << "id,name,rank,size_mb,cold_latency_ms,is_base";
    for (int j = 0; j < lib.dim(); ++j) out << ",theta[" << j << "]";
    out << '\n';
    out << std::setprecision(17);
    for (const auto& p : lib.adapters()) {
        out << p.id << ',' << p.name << ',';
        if (p.rank) out << *p.rank;
        out << ',';
        if (p.size_mb) out << *p.size_mb;
        out << ',' << p.cold_latency_s * 1e3 << ',' << (p.is_base ? 1 : 0);
        for (int j = 0; j < lib.dim(); ++j) out << ',' << p.theta_star[j];
        out << '\n';
    }
    return out.str();
}

void save_profiles(const Library& lib, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IngestionError("cannot write profile file " + path.string());
    out << format_profiles(lib);
}

// ---------------------------------------------------------------------------------------------
// Instance generator

namespace {

std::vector<Vector> make_task_means(int n_tasks, int d, double scale, std::mt19937_64& rng) {
    std::vector<Vector> means;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < n_tasks; ++i) {
        Vector m = Vector::Zero(d);
        if (i < d) {
            m[i] = 1.0;
        } else {
            for (int j = 0; j < d; ++j) m[j] = std::abs(normal(rng));
            m.normalize();
        }
        means.push_back(scale * m);
    }
    return means;
}

Vector capped(Vector v) {
    const double n = v.norm();
    return n > 1.0 ? Vector(v / n) : v;
}

} // namespace

GeneratedInstance generate_instance(const GeneratorOptions& o) {
    const int n_lora = o.n_adapters - (o.include_base ? 1 : 0);
    if (o.cache_size < 1 || o.n_adapters < o.cache_size || n_lora < o.cache_size) {
        throw ConfigError("generator: need at least K non-base adapters");
    }
    if (o.d < 1) throw ConfigError("generator: d must be >= 1");
    if (!(o.diversity >= 0.0 && o.diversity <= 1.0)) throw ConfigError("generator: diversity must lie in [0,1]");
    if (!(o.latency_min_ms > 0.0 && o.latency_max_ms >= o.latency_min_ms)) {
        throw ConfigError("generator: latency range must satisfy 0 < min <= max");
    }
    if (o.task_scale <= 0.0 || o.task_scale > 1.0) throw ConfigError("generator: task scale must lie in (0,1]");

    std::mt19937_64 rng(o.seed);
    const int n_tasks = o.n_tasks > 0 ? o.n_tasks : o.cache_size;

    GeneratedInstance inst;
    inst.workload.n_tasks = n_tasks;
    inst.workload.zipf_exponent = o.zipf_exponent;
    inst.workload.context_noise = o.context_noise;
    inst.workload.seed = o.seed;
    inst.workload.task_means = make_task_means(n_tasks, o.d, o.task_scale, rng);

    // Roles over the non-base ids, in a seeded random order.
    std::vector<AdapterId> ids(static_cast<std::size_t>(n_lora));
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), rng);
    const bool with_generalist = o.generalist_ratio > 0.0 && n_lora > o.cache_size;

    const Vector common = Vector::Constant(o.d, o.common_quality);
    auto unit_task = [&](int task) { return Vector(inst.workload.task_means[static_cast<std::size_t>(task)].normalized()); };

    std::vector<Vector> theta(static_cast<std::size_t>(o.n_adapters), common);
    std::vector<std::string> names(static_cast<std::size_t>(o.n_adapters));
    std::uniform_real_distribution<double> weak(o.weak_gain_min, o.weak_gain_max);
    std::uniform_int_distribution<int> any_task(0, n_tasks - 1);
    for (int slot = 0; slot < n_lora; ++slot) {
        const AdapterId a = ids[static_cast<std::size_t>(slot)];
        const auto ua = static_cast<std::size_t>(a);
        if (slot < o.cache_size) {
            const int task = slot % n_tasks;
            theta[ua] = capped(common + o.diversity * o.hot_gain * unit_task(task));
            names[ua] = "hot-" + std::to_string(task);
            inst.hot_set.push_back(a);
        } else if (slot == o.cache_size && with_generalist) {
            // Same gain along every coordinate: generalist_ratio * hot_gain on each axis-aligned task.
            theta[ua] = capped(common + Vector::Constant(o.d, o.diversity * o.generalist_ratio * o.hot_gain));
            names[ua] = "generalist";
            inst.generalist_id = a;
        } else {
            const int task = any_task(rng);
            theta[ua] = capped(common + o.diversity * weak(rng) * o.hot_gain * unit_task(task));
            names[ua] = "weak-" + std::to_string(task);
        }
    }
    std::sort(inst.hot_set.begin(), inst.hot_set.end());

    // Latencies span the configured range: both endpoints plus uniform draws in between.
    std::vector<double> latencies_ms;
    latencies_ms.push_back(o.latency_min_ms);
    if (n_lora > 1) latencies_ms.push_back(o.latency_max_ms);
    std::uniform_real_distribution<double> lat(o.latency_min_ms, o.latency_max_ms);
    while (static_cast<int>(latencies_ms.size()) < n_lora) latencies_ms.push_back(std::round(lat(rng)));
    std::shuffle(latencies_ms.begin(), latencies_ms.end(), rng);

    std::vector<AdapterProfile> profiles;
    for (AdapterId a = 0; a < o.n_adapters; ++a) {
        AdapterProfile p;
        p.id = a;
        p.theta_star = theta[static_cast<std::size_t>(a)];
        if (a < n_lora) {
            p.name = names[static_cast<std::size_t>(a)];
            p.cold_latency_s = latencies_ms[static_cast<std::size_t>(a)] / 1e3;
        } else {
            p.name = "base";
            p.is_base = true;
            p.cold_latency_s = 0.0;
            inst.base_id = a;
        }
        profiles.push_back(std::move(p));
    }
    inst.library = Library(std::move(profiles), o.d);

    // Dominance: at every task mean, no non-hot adapter paying its cold penalty beats the best
    // resident hot (or base) adapter.
    std::vector<char> privileged(static_cast<std::size_t>(o.n_adapters), 0);
    for (AdapterId h : inst.hot_set) privileged[static_cast<std::size_t>(h)] = 1;
    if (inst.base_id) privileged[static_cast<std::size_t>(*inst.base_id)] = 1;
    for (const auto& m : inst.workload.task_means) {
        double best_hot = -std::numeric_limits<double>::infinity();
        for (AdapterId a = 0; a < o.n_adapters; ++a) {
            if (privileged[static_cast<std::size_t>(a)]) best_hot = std::max(best_hot, inst.library[a].theta_star.dot(m));
        }
        for (AdapterId a = 0; a < o.n_adapters; ++a) {
            if (privileged[static_cast<std::size_t>(a)]) continue;
            const double value = inst.library[a].theta_star.dot(m) - o.alpha * inst.library[a].cold_latency_s;
            if (value > best_hot + 1e-12) {
                throw ConfigError("generator: adapter " + std::to_string(a) +
                                  " beats the hot set despite its cold penalty; increase alpha or the latency scale");
            }
        }
    }
    return inst;
}

} // namespace polar
