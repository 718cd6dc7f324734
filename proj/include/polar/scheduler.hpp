#pragma once

#include "polar/cache.hpp"
#include "polar/core.hpp"
#include "polar/env.hpp"
#include "polar/router.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace polar {

/// Epoch schedule of the cache controller.
struct EpochSpec {
    enum class Mode { Fixed, Doubling };
    Mode mode = Mode::Doubling;
    int epoch_length = 200;        // H for Fixed mode and for the no-doubling ablation
    double kappa = 0.05;
    std::optional<int> c0;         // defaults to ceil(log(6 N d / delta))
    bool no_doubling = false;
    bool no_forced = false;
    bool no_exact = false;

    static EpochSpec fixed(int h);
    static EpochSpec doubling(double kappa = 0.05);

    int resolved_c0(int n_adapters, int d, double delta) const;
    void validate() const;
};

/// ceil(log(6 N d / delta)).
int default_c0(int n_adapters, int d, double delta);

/// max(1, floor(kappa * d * (ell + c0))).
int forced_plays_per_arm(int ell, double kappa, int d, int c0);

enum class RouterKind { Ucb, Thompson };

struct RunOptions {
    std::uint64_t seed = 0;
    RouterKind router = RouterKind::Ucb;
    std::optional<double> ts_scale;  // defaults to the current confidence radius
    double epsilon = 0.1;
    std::uint64_t enumeration_budget = kDefaultEnumerationBudget;
    bool track_coverage = false;
};

enum class Phase : std::uint8_t { Forced, Exploit };

struct RoundRecord {
    AdapterId action = 0;
    bool hot = false;
    double q = 0.0;
    double mu = 0.0;
    double width_sq = 0.0;  // s_{a_t,t}^2 of the played arm before its update
    int cache_index = 0;    // index into RunArtifacts::caches
    Phase phase = Phase::Exploit;

    bool operator==(const RoundRecord&) const = default;
};

/// A cache decision that took effect before round `round` (0-based).
struct SwitchEvent {
    long round = 0;
    int admitted = 0;
    bool charged = true;

    bool operator==(const SwitchEvent&) const = default;
};

struct RunArtifacts {
    std::vector<Vector> contexts;
    std::vector<RoundRecord> rounds;
    std::vector<CacheState> caches;    // caches[0] is the initial cache
    std::vector<long> cache_start;     // first round served by caches[i]
    std::vector<SwitchEvent> switches; // every controller decision, changed or not
    double switching_total = 0.0;
    bool solver_fell_back = false;

    // Confidence coverage over all (arm, round) pairs, when tracked.
    long coverage_hits = 0;
    long coverage_pairs = 0;

    long horizon() const { return static_cast<long>(rounds.size()); }
    /// Decisions that admitted at least one adapter.
    int cache_changes() const;
    int cache_decisions() const { return static_cast<int>(switches.size()); }
    const CacheState& cache_at_round(long t) const;
};

/// Fixed-epoch routing with greedy cache updates.
RunArtifacts run_polar(const Library& lib, const RewardParams& params, const EpochSpec& spec, Environment& env,
                       long horizon, const RunOptions& opts = {});

/// Epoch doubling with forced exploration and exact cache optimization (and its ablations).
RunArtifacts run_polar_plus(const Library& lib, const RewardParams& params, const EpochSpec& spec,
                            Environment& env, long horizon, const RunOptions& opts = {});

enum class BaselineKind { Lru, Lfu, Static, EpsGreedy, OracleCache };

BaselineKind parse_baseline_kind(std::string_view name);

/// LinUCB routing with a non-learning cache refreshed every `epoch_length` rounds.
RunArtifacts run_baseline(BaselineKind kind, const Library& lib, const RewardParams& params, Environment& env,
                          long horizon, int epoch_length, const RunOptions& opts = {});

} // namespace polar
