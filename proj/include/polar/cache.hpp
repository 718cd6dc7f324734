#pragma once

#include "polar/core.hpp"
#include "polar/router.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <unordered_map>

namespace polar {

inline constexpr std::uint64_t kDefaultEnumerationBudget = 1'000'000;

/// Optimistic per-(round, adapter) values UCB_t(a) and the cold penalties they are judged against.
struct UtilityTable {
    Matrix ucb;        // rows = rounds, cols = adapters
    Vector penalties;  // alpha * lambda_a
    std::vector<Vector> contexts;

    int rounds() const { return static_cast<int>(ucb.rows()); }
    int adapters() const { return static_cast<int>(ucb.cols()); }
};

/// Rescore `contexts` with the router's current estimates and a single radius `beta_t`.
UtilityTable build_utility_table(const Router& router, std::span<const Vector> contexts, double beta_t);

/// Inputs of the empirical cache utility: historical contexts and point estimates.
struct EmpiricalCacheUtility {
    std::span<const Vector> contexts;
    Matrix estimates;  // rows = adapters, cols = d
    Vector penalties;

    int samples() const { return static_cast<int>(contexts.size()); }
};

EmpiricalCacheUtility make_empirical_utility(const Router& router, std::span<const Vector> contexts);

/// Sparse Delta-decomposition of sum_t max_a mu_t(a; S).
///
/// For each row, b_t is the all-cold value max_a(v_ta - pen_a) and Delta_t(a) = max(0, v_ta - b_t),
/// so sum_t max_a mu_t(a;S) = sum_t b_t + sum_t max_{a in S} Delta_t(a). Rows are compressed into
/// (earlier-arms mask, arm) keys: the key contributes its weight when `arm` is in S and none of the
/// arms with a larger Delta in that row are.
class GainTable {
  public:
    explicit GainTable(Vector penalties);

    int adapters() const { return static_cast<int>(penalties_.size()); }
    long rows() const { return rows_; }
    double baseline_sum() const { return baseline_sum_; }
    std::size_t key_count() const { return keys_.size(); }

    /// Append one round given per-adapter values v_t(a) (quality or estimate, no penalty).
    void append_row(const Vector& values);

    /// sum_t max_a mu_t(a; S) for the resident mask S.
    double total(std::uint64_t mask) const;

    struct Best {
        std::vector<AdapterId> ids;
        double total = 0.0;
    };
    /// Best size-K subset by lexicographic enumeration; earliest subset wins ties.
    /// Returns std::nullopt when C(N, K) exceeds `budget`.
    std::optional<Best> best_subset(int k, std::uint64_t budget) const;

  private:
    struct Key {
        std::uint64_t prefix;
        AdapterId arm;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept {
            return std::hash<std::uint64_t>{}(k.prefix * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(k.arm));
        }
    };

    Vector penalties_;
    long rows_ = 0;
    double baseline_sum_ = 0.0;
    std::vector<Key> keys_;
    std::vector<double> weights_;
    std::unordered_map<Key, std::size_t, KeyHash> index_;
    std::vector<std::pair<double, AdapterId>> scratch_;
};

std::uint64_t to_mask(std::span<const AdapterId> ids);

/// Number of size-k subsets of n items, saturating at UINT64_MAX.
std::uint64_t binomial(int n, int k);

/// Greedy marginal-gain cache update over a utility table (switching cost charged on admissions).
CacheState greedy_cache_update(const CacheState& prev, const UtilityTable& table, int k, double gamma);

/// (1/n) sum_t max_a (<theta_hat_a, x_t> - pen_a * 1{a not in S}).
double empirical_F(const EmpiricalCacheUtility& util, std::span<const AdapterId> resident);

struct SolveResult {
    CacheState cache;
    double value = 0.0;           // F_hat of the returned cache
    bool fell_back_to_greedy = false;
};

/// Exact arg max over size-K sets of the empirical utility; greedy fallback past the budget.
SolveResult solve_cache_exact(const EmpiricalCacheUtility& util, int k,
                              std::uint64_t budget = kDefaultEnumerationBudget);

/// Hindsight-optimal fixed cache with true parameters. Throws ConfigError past the budget.
CacheState oracle_fixed_cache(const Library& lib, const RewardParams& params, std::span<const Vector> contexts,
                              std::uint64_t budget = kDefaultEnumerationBudget);

enum class BaselinePolicy { Lru, Lfu, Static, EpsGreedy };

BaselinePolicy parse_baseline(std::string_view name);

/// Router selections seen so far, for the frequency/recency caches.
struct SelectionHistory {
    std::vector<long> counts;
    std::vector<long> last_selected;  // round of last selection, -1 if never

    explicit SelectionHistory(int n_adapters);
    void record(AdapterId a, long round);
};

struct BaselineInputs {
    const SelectionHistory* history = nullptr;
    const CacheState* initial = nullptr;
    const UtilityTable* table = nullptr;  // EpsGreedy only
    double gamma = 0.0;
    double epsilon = 0.1;
};

/// Next cache for a non-learning baseline. Always fills to K adapters.
CacheState baseline_update(BaselinePolicy policy, const CacheState& prev, const BaselineInputs& in, int k,
                           int n_adapters, std::mt19937_64& rng);

/// Uniformly random size-K cache.
CacheState random_cache(int n_adapters, int k, std::mt19937_64& rng);

} // namespace polar
