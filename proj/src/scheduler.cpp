#include "polar/scheduler.hpp"

#include <cmath>

namespace polar {

EpochSpec EpochSpec::fixed(int h) {
    EpochSpec s;
    s.mode = Mode::Fixed;
    s.epoch_length = h;
    return s;
}

EpochSpec EpochSpec::doubling(double kappa) {
    EpochSpec s;
    s.mode = Mode::Doubling;
    s.kappa = kappa;
    return s;
}

int default_c0(int n_adapters, int d, double delta) {
    return static_cast<int>(std::ceil(std::log(6.0 * n_adapters * d / delta)));
}

int EpochSpec::resolved_c0(int n_adapters, int d, double delta) const {
    return c0 ? *c0 : default_c0(n_adapters, d, delta);
}

void EpochSpec::validate() const {
    if (epoch_length < 1) throw ConfigError("epoch length H must be >= 1");
    if (mode == Mode::Doubling && !(kappa > 0.0)) throw ConfigError("kappa must be > 0");
    if (c0 && *c0 < 0) throw ConfigError("c0 must be >= 0");
}

int forced_plays_per_arm(int ell, double kappa, int d, int c0) {
    if (ell < 0) throw std::invalid_argument("forced_plays_per_arm: ell must be >= 0");
    const double m = kappa * d * (ell + c0);
    return std::max(1, static_cast<int>(std::floor(m + 1e-9)));
}

int RunArtifacts::cache_changes() const {
    int n = 0;
    for (const auto& s : switches) {
        if (s.admitted > 0) ++n;
    }
    return n;
}

const CacheState& RunArtifacts::cache_at_round(long t) const {
    return caches.at(static_cast<std::size_t>(rounds.at(static_cast<std::size_t>(t)).cache_index));
}

BaselineKind parse_baseline_kind(std::string_view name) {
    if (name == "lru") return BaselineKind::Lru;
    if (name == "lfu") return BaselineKind::Lfu;
    if (name == "static") return BaselineKind::Static;
    if (name == "eps_greedy") return BaselineKind::EpsGreedy;
    if (name == "oracle_cache") return BaselineKind::OracleCache;
    throw std::invalid_argument("unknown baseline '" + std::string(name) + "'");
}

namespace {

constexpr std::uint64_t kInitialCacheStream = 0x1CEB00DAULL;
constexpr std::uint64_t kThompsonStream = 0x7517A3E1ULL;
constexpr std::uint64_t kBaselineStream = 0xB45E11E5ULL;

/// State shared by every policy loop: router, current cache, and the growing record.
class Session {
  public:
    Session(const Library& lib, const RewardParams& params, Environment& env, long horizon, const RunOptions& opts)
        : lib_(lib), params_(params), env_(env), horizon_(horizon), opts_(opts), router_(lib, params),
          history_(lib.size()), ts_rng_(opts.seed ^ kThompsonStream), policy_rng_(opts.seed ^ kBaselineStream) {
        params.validate(lib.size());
        if (horizon < 1) throw ConfigError("horizon T must be >= 1");
        std::mt19937_64 init_rng(opts.seed ^ kInitialCacheStream);
        CacheState initial = random_cache(lib.size(), params.cache_size, init_rng);
        out_.caches.push_back(initial);
        out_.cache_start.push_back(0);
        out_.contexts.reserve(static_cast<std::size_t>(horizon));
        out_.rounds.reserve(static_cast<std::size_t>(horizon));
    }

    long t() const { return static_cast<long>(out_.rounds.size()); }
    bool done() const { return t() >= horizon_; }
    const CacheState& cache() const { return out_.caches.back(); }
    const Router& router() const { return router_; }
    const SelectionHistory& history() const { return history_; }
    std::mt19937_64& policy_rng() { return policy_rng_; }
    const std::vector<Vector>& contexts() const { return out_.contexts; }

    void set_initial(CacheState c) { out_.caches.front() = std::move(c); }

    /// Replace the resident set before the next round; `charge` applies the switching cost.
    void install(CacheState next, bool charge) {
        const int admitted = admitted_count(next, cache());
        next.epoch_index = static_cast<int>(out_.caches.size());
        next.switches_total = cache().switches_total + (charge ? admitted : 0);
        out_.switches.push_back(SwitchEvent{t(), admitted, charge});
        if (charge) out_.switching_total += params_.gamma * admitted;
        out_.caches.push_back(std::move(next));
        out_.cache_start.push_back(t());
    }

    void play_exploit() {
        const long round = t();
        Vector x = env_.context_at(round).x;
        AdapterId a = 0;
        if (opts_.router == RouterKind::Thompson) {
            const double scale = opts_.ts_scale.value_or(router_.beta());
            a = router_.select_thompson(x, cache(), ts_rng_, scale);
        } else {
            a = router_.select(x, cache(), router_.beta());
        }
        finish(round, std::move(x), a, Phase::Exploit);
    }

    void play_forced(AdapterId a) {
        const long round = t();
        finish(round, env_.context_at(round).x, a, Phase::Forced);
    }

    void mark_fallback() { out_.solver_fell_back = true; }

    RunArtifacts take() { return std::move(out_); }

  private:
    void finish(long round, Vector x, AdapterId a, Phase phase) {
        if (opts_.track_coverage) track_coverage(x);
        RoundRecord r;
        r.action = a;
        r.hot = cache().contains(a);
        r.width_sq = std::pow(router_.width(a, x), 2);
        r.q = env_.observe_quality(round, a, x);
        r.mu = lib_[a].theta_star.dot(x) - (r.hot ? 0.0 : cold_penalty(lib_, params_, a));
        r.cache_index = static_cast<int>(out_.caches.size()) - 1;
        r.phase = phase;
        router_.update(a, x, r.q);
        history_.record(a, round);
        out_.rounds.push_back(r);
        out_.contexts.push_back(std::move(x));
    }

    void track_coverage(const Vector& x) {
        const double beta = router_.beta();
        for (AdapterId a = 0; a < router_.size(); ++a) {
            const double err = std::abs(x.dot(router_.arm(a).theta_hat - lib_[a].theta_star));
            if (err <= beta * router_.width(a, x)) ++out_.coverage_hits;
            ++out_.coverage_pairs;
        }
    }

    const Library& lib_;
    RewardParams params_;
    Environment& env_;
    long horizon_;
    RunOptions opts_;
    Router router_;
    SelectionHistory history_;
    std::mt19937_64 ts_rng_;
    std::mt19937_64 policy_rng_;
    RunArtifacts out_;
};

std::span<const Vector> window(const std::vector<Vector>& contexts, long from, long to) {
    return std::span<const Vector>(contexts).subspan(static_cast<std::size_t>(from),
                                                      static_cast<std::size_t>(to - from));
}

} // namespace

RunArtifacts run_polar(const Library& lib, const RewardParams& params, const EpochSpec& spec, Environment& env,
                       long horizon, const RunOptions& opts) {
    spec.validate();
    Session s(lib, params, env, horizon, opts);
    long epoch_start = 0;
    for (int ell = 1; !s.done(); ++ell) {
        if (ell > 1) {
            const auto table = build_utility_table(s.router(), window(s.contexts(), epoch_start, s.t()), s.router().beta());
            s.install(greedy_cache_update(s.cache(), table, params.cache_size, params.gamma), true);
            epoch_start = s.t();
        }
        for (int i = 0; i < spec.epoch_length && !s.done(); ++i) s.play_exploit();
    }
    return s.take();
}

RunArtifacts run_polar_plus(const Library& lib, const RewardParams& params, const EpochSpec& spec,
                            Environment& env, long horizon, const RunOptions& opts) {
    spec.validate();
    Session s(lib, params, env, horizon, opts);
    const int n = lib.size();
    const int c0 = spec.resolved_c0(n, lib.dim(), params.delta);
    long window_start = 0;
    for (int ell = 0; !s.done(); ++ell) {
        if (!spec.no_forced) {
            const long plays = static_cast<long>(n) * forced_plays_per_arm(ell, spec.kappa, lib.dim(), c0);
            for (long k = 0; k < plays && !s.done(); ++k) s.play_forced(static_cast<AdapterId>(k % n));
        }
        if (s.done()) break;

        // With no history yet the controller keeps the initial cache.
        if (s.t() > 0) {
            CacheState next;
            if (spec.no_exact) {
                const auto table =
                    build_utility_table(s.router(), window(s.contexts(), window_start, s.t()), s.router().beta());
                next = greedy_cache_update(s.cache(), table, params.cache_size, params.gamma);
            } else {
                const auto util = make_empirical_utility(s.router(), window(s.contexts(), 0, s.t()));
                auto solved = solve_cache_exact(util, params.cache_size, opts.enumeration_budget);
                if (solved.fell_back_to_greedy) s.mark_fallback();
                next = std::move(solved.cache);
            }
            s.install(std::move(next), ell > 0);
        }
        window_start = s.t();

        long exploit = spec.no_doubling ? spec.epoch_length : (ell < 62 ? (1L << ell) : horizon);
        for (long i = 0; i < exploit && !s.done(); ++i) s.play_exploit();
    }
    return s.take();
}

RunArtifacts run_baseline(BaselineKind kind, const Library& lib, const RewardParams& params, Environment& env,
                          long horizon, int epoch_length, const RunOptions& opts) {
    if (epoch_length < 1) throw ConfigError("epoch length H must be >= 1");
    Session s(lib, params, env, horizon, opts);
    if (kind == BaselineKind::OracleCache) {
        s.set_initial(oracle_fixed_cache(lib, params, env.hindsight_contexts(horizon), opts.enumeration_budget));
    }
    const CacheState initial = s.cache();
    const bool adaptive = kind != BaselineKind::Static && kind != BaselineKind::OracleCache;
    long epoch_start = 0;
    for (int ell = 1; !s.done(); ++ell) {
        if (ell > 1 && adaptive) {
            BaselineInputs in;
            in.history = &s.history();
            in.initial = &initial;
            in.gamma = params.gamma;
            in.epsilon = opts.epsilon;
            UtilityTable table;
            BaselinePolicy policy = BaselinePolicy::Lru;
            if (kind == BaselineKind::Lfu) policy = BaselinePolicy::Lfu;
            if (kind == BaselineKind::EpsGreedy) {
                policy = BaselinePolicy::EpsGreedy;
                table = build_utility_table(s.router(), window(s.contexts(), epoch_start, s.t()), s.router().beta());
                in.table = &table;
            }
            s.install(baseline_update(policy, s.cache(), in, params.cache_size, lib.size(), s.policy_rng()), true);
            epoch_start = s.t();
        }
        for (int i = 0; i < epoch_length && !s.done(); ++i) s.play_exploit();
    }
    return s.take();
}

} // namespace polar
