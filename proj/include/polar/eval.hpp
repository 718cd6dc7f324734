#pragma once

#include "polar/cache.hpp"
#include "polar/core.hpp"
#include "polar/scheduler.hpp"

#include <span>

namespace polar {

struct OracleResult {
    double value = 0.0;  // R*(T) = max_{|C|=K} sum_t max_a mu_t(a; C)
    CacheState cache;    // C_T*
    long horizon = 0;
};

/// Exact hindsight oracle over `contexts`. Throws ConfigError past the enumeration budget.
OracleResult oracle_value(const Library& lib, const RewardParams& params, std::span<const Vector> contexts,
                          std::uint64_t budget = kDefaultEnumerationBudget);

/// Oracle values of every prefix contexts[0, t) for the (ascending) checkpoints t.
std::vector<OracleResult> oracle_prefix_values(const Library& lib, const RewardParams& params,
                                               std::span<const Vector> contexts, std::span<const long> checkpoints,
                                               std::uint64_t budget = kDefaultEnumerationBudget);

/// R* - (sum mu - switching).
inline double pseudo_regret(double oracle, double mu_sum, double switching) {
    return oracle - (mu_sum - switching);
}

/// Pseudo-regret of a complete run; the oracle must cover exactly the run's horizon.
double pseudo_regret(const RunArtifacts& run, const OracleResult& oracle);

struct Decomposition {
    double quality_loss = 0.0;  // sum_t max_a <theta*_a, x_t> - <theta*_{a_t}, x_t>
    double latency_cost = 0.0;  // cold penalties paid plus switching
};

/// Diagnostic split of the first `upto` rounds (all rounds when upto < 0).
Decomposition decompose(const RunArtifacts& run, const Library& lib, const RewardParams& params, long upto = -1);

/// Snapshot of the running totals after `t` rounds.
struct RegretLedger {
    long t = 0;
    double oracle = 0.0;
    double mu_sum = 0.0;
    double switching = 0.0;
    double pseudo_regret = 0.0;
    double quality_loss = 0.0;
    double latency_cost = 0.0;
};

/// Ledgers at each checkpoint; oracle values from `oracle_prefix_values` over the run's contexts.
std::vector<RegretLedger> ledger_at(const RunArtifacts& run, const Library& lib, const RewardParams& params,
                                    std::span<const long> checkpoints, std::span<const OracleResult> oracles);

/// |A n B| / |A u B|, defined as 1 when both are empty.
double jaccard(std::span<const AdapterId> a, std::span<const AdapterId> b);

/// sum over probes of max_a mu(a; reference; x) - max_a mu(a; candidate; x).
double cache_quality_loss(const Library& lib, const RewardParams& params, const CacheState& candidate,
                          const CacheState& reference, std::span<const Vector> probes);

/// sum_t s_{a_t,t}^2 over the run, and the bound 2 N d log(1 + T / (d * ridge)).
double elliptic_potential(const RunArtifacts& run);
double elliptic_potential_bound(int n_adapters, int d, double ridge, long horizon);

} // namespace polar
