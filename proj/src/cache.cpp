#include "polar/cache.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace polar {

namespace {

Vector penalty_vector(const Library& lib, const RewardParams& params) {
    Vector pen(lib.size());
    for (AdapterId a = 0; a < lib.size(); ++a) {
        pen[a] = cold_penalty(lib, params, a);
    }
    return pen;
}

CacheState successor(std::vector<AdapterId> ids, const CacheState& prev) {
    CacheState next(std::move(ids), prev.epoch_index + 1, prev.switches_total);
    next.switches_total += admitted_count(next, prev);
    return next;
}

} // namespace

UtilityTable build_utility_table(const Router& router, std::span<const Vector> contexts, double beta_t) {
    const int n = router.size();
    UtilityTable table;
    table.ucb.resize(static_cast<Eigen::Index>(contexts.size()), n);
    table.penalties.resize(n);
    for (AdapterId a = 0; a < n; ++a) {
        table.penalties[a] = cold_penalty(router.library(), router.params(), a);
    }
    for (std::size_t t = 0; t < contexts.size(); ++t) {
        for (AdapterId a = 0; a < n; ++a) {
            table.ucb(static_cast<Eigen::Index>(t), a) = router.ucb(a, contexts[t], beta_t);
        }
    }
    table.contexts.assign(contexts.begin(), contexts.end());
    return table;
}

EmpiricalCacheUtility make_empirical_utility(const Router& router, std::span<const Vector> contexts) {
    const int n = router.size();
    const int d = router.library().dim();
    EmpiricalCacheUtility util;
    util.contexts = contexts;
    util.estimates.resize(n, d);
    util.penalties.resize(n);
    for (AdapterId a = 0; a < n; ++a) {
        util.estimates.row(a) = router.arm(a).theta_hat.transpose();
        util.penalties[a] = cold_penalty(router.library(), router.params(), a);
    }
    return util;
}

// ---------------------------------------------------------------------------------------------
// GainTable

GainTable::GainTable(Vector penalties) : penalties_(std::move(penalties)) {
    if (penalties_.size() > 64) {
        throw std::invalid_argument("GainTable: at most 64 adapters are supported");
    }
    if ((penalties_.array() < 0.0).any()) {
        throw std::invalid_argument("GainTable: penalties must be >= 0");
    }
    scratch_.reserve(static_cast<std::size_t>(penalties_.size()));
}

void GainTable::append_row(const Vector& values) {
    const Eigen::Index n = penalties_.size();
    if (n == 0) {
        ++rows_;
        return;
    }
    double cold_best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < n; ++a) {
        cold_best = std::max(cold_best, values[a] - penalties_[a]);
    }
    baseline_sum_ += cold_best;
    ++rows_;

    scratch_.clear();
    for (Eigen::Index a = 0; a < n; ++a) {
        const double gain = values[a] - cold_best;
        if (gain > 0.0) {
            scratch_.emplace_back(gain, static_cast<AdapterId>(a));
        }
    }
    std::sort(scratch_.begin(), scratch_.end(), [](const auto& l, const auto& r) {
        return l.first != r.first ? l.first > r.first : l.second < r.second;
    });
    std::uint64_t prefix = 0;
    for (const auto& [gain, arm] : scratch_) {
        const Key key{prefix, arm};
        auto [it, inserted] = index_.try_emplace(key, keys_.size());
        if (inserted) {
            keys_.push_back(key);
            weights_.push_back(0.0);
        }
        weights_[it->second] += gain;
        prefix |= std::uint64_t{1} << arm;
    }
}

double GainTable::total(std::uint64_t mask) const {
    double extra = 0.0;
    for (std::size_t i = 0; i < keys_.size(); ++i) {
        const auto& k = keys_[i];
        if (((mask >> k.arm) & 1U) != 0U && (mask & k.prefix) == 0U) {
            extra += weights_[i];
        }
    }
    return baseline_sum_ + extra;
}

std::optional<GainTable::Best> GainTable::best_subset(int k, std::uint64_t budget) const {
    const int n = adapters();
    if (k < 0 || k > n) {
        throw std::invalid_argument("best_subset: need 0 <= K <= N");
    }
    if (binomial(n, k) > budget) {
        return std::nullopt;
    }
    std::vector<int> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    Best best;
    bool have = false;
    while (true) {
        std::uint64_t mask = 0;
        for (int i : idx) mask |= std::uint64_t{1} << i;
        const double v = total(mask);
        if (!have || v > best.total + 1e-12 * std::max(1.0, std::abs(best.total))) {
            best.total = v;
            best.ids.assign(idx.begin(), idx.end());
            have = true;
        }
        // next combination in lexicographic order
        int i = k - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
        if (i < 0) break;
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j) {
            idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
    return best;
}

std::uint64_t to_mask(std::span<const AdapterId> ids) {
    std::uint64_t m = 0;
    for (AdapterId a : ids) {
        if (a < 0 || a >= 64) throw std::invalid_argument("to_mask: adapter id out of range");
        m |= std::uint64_t{1} << a;
    }
    return m;
}

std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    unsigned __int128 r = 1;
    for (int i = 1; i <= k; ++i) {
        r = r * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
        if (r > std::numeric_limits<std::uint64_t>::max()) {
            return std::numeric_limits<std::uint64_t>::max();
        }
    }
    return static_cast<std::uint64_t>(r);
}

// ---------------------------------------------------------------------------------------------
// Greedy marginal-gain update

CacheState greedy_cache_update(const CacheState& prev, const UtilityTable& table, int k, double gamma) {
    if (k < 1) {
        throw std::invalid_argument("greedy_cache_update: K must be >= 1");
    }
    const Eigen::Index rows = table.ucb.rows();
    const Eigen::Index n = table.ucb.cols();

    Matrix delta(rows, n);
    for (Eigen::Index t = 0; t < rows; ++t) {
        const double cold_best = (table.ucb.row(t).transpose() - table.penalties).maxCoeff();
        for (Eigen::Index a = 0; a < n; ++a) {
            delta(t, a) = std::max(0.0, table.ucb(t, a) - cold_best);
        }
    }

    std::vector<AdapterId> chosen;
    std::vector<char> in_cache(static_cast<std::size_t>(n), 0);
    Vector best = Vector::Zero(rows);
    for (int step = 0; step < k && step < n; ++step) {
        AdapterId arg = -1;
        double arg_gain = -std::numeric_limits<double>::infinity();
        for (Eigen::Index a = 0; a < n; ++a) {
            if (in_cache[static_cast<std::size_t>(a)]) continue;
            double g = (delta.col(a) - best).cwiseMax(0.0).sum();
            if (!prev.contains(static_cast<AdapterId>(a))) g -= gamma;
            if (g > arg_gain) {
                arg_gain = g;
                arg = static_cast<AdapterId>(a);
            }
        }
        if (arg < 0 || arg_gain <= 0.0) break;
        chosen.push_back(arg);
        in_cache[static_cast<std::size_t>(arg)] = 1;
        best = best.cwiseMax(delta.col(arg));
    }
    return successor(std::move(chosen), prev);
}

// ---------------------------------------------------------------------------------------------
// Empirical utility and exact solvers

double empirical_F(const EmpiricalCacheUtility& util, std::span<const AdapterId> resident) {
    if (util.samples() < 1) {
        throw std::invalid_argument("empirical_F: needs at least one context");
    }
    const Eigen::Index n = util.estimates.rows();
    std::vector<char> in_set(static_cast<std::size_t>(n), 0);
    for (AdapterId a : resident) {
        if (a < 0 || a >= n) throw std::invalid_argument("empirical_F: unknown adapter id");
        in_set[static_cast<std::size_t>(a)] = 1;
    }
    double sum = 0.0;
    for (const auto& x : util.contexts) {
        const Vector est = util.estimates * x;
        double best = -std::numeric_limits<double>::infinity();
        for (Eigen::Index a = 0; a < n; ++a) {
            const double v = in_set[static_cast<std::size_t>(a)] ? est[a] : est[a] - util.penalties[a];
            best = std::max(best, v);
        }
        sum += best;
    }
    return sum / util.samples();
}

SolveResult solve_cache_exact(const EmpiricalCacheUtility& util, int k, std::uint64_t budget) {
    if (util.samples() < 1) {
        throw std::invalid_argument("solve_cache_exact: needs at least one context");
    }
    const int n = static_cast<int>(util.estimates.rows());
    SolveResult result;
    if (binomial(n, k) <= budget) {
        GainTable gains(util.penalties);
        for (const auto& x : util.contexts) {
            gains.append_row(util.estimates * x);
        }
        auto best = gains.best_subset(k, budget);
        result.cache = CacheState(std::move(best->ids));
        result.value = best->total / util.samples();
        return result;
    }
    UtilityTable table;
    table.ucb.resize(util.samples(), n);
    for (int t = 0; t < util.samples(); ++t) {
        table.ucb.row(t) = (util.estimates * util.contexts[static_cast<std::size_t>(t)]).transpose();
    }
    table.penalties = util.penalties;
    result.cache = greedy_cache_update(CacheState{}, table, k, 0.0);
    result.cache.epoch_index = 0;
    result.cache.switches_total = 0;
    result.value = empirical_F(util, result.cache.resident);
    result.fell_back_to_greedy = true;
    return result;
}

CacheState oracle_fixed_cache(const Library& lib, const RewardParams& params, std::span<const Vector> contexts,
                              std::uint64_t budget) {
    params.validate(lib.size());
    GainTable gains(penalty_vector(lib, params));
    Matrix theta(lib.size(), lib.dim());
    for (AdapterId a = 0; a < lib.size(); ++a) {
        theta.row(a) = lib[a].theta_star.transpose();
    }
    for (const auto& x : contexts) {
        gains.append_row(theta * x);
    }
    auto best = gains.best_subset(params.cache_size, budget);
    if (!best) {
        throw ConfigError("oracle cache: C(" + std::to_string(lib.size()) + ", " +
                          std::to_string(params.cache_size) + ") subsets exceed the enumeration budget");
    }
    return CacheState(std::move(best->ids));
}

// ---------------------------------------------------------------------------------------------
// Baselines

BaselinePolicy parse_baseline(std::string_view name) {
    if (name == "lru") return BaselinePolicy::Lru;
    if (name == "lfu") return BaselinePolicy::Lfu;
    if (name == "static") return BaselinePolicy::Static;
    if (name == "eps_greedy") return BaselinePolicy::EpsGreedy;
    throw std::invalid_argument("unknown baseline policy '" + std::string(name) + "'");
}

SelectionHistory::SelectionHistory(int n_adapters)
    : counts(static_cast<std::size_t>(n_adapters), 0), last_selected(static_cast<std::size_t>(n_adapters), -1) {}

void SelectionHistory::record(AdapterId a, long round) {
    ++counts.at(static_cast<std::size_t>(a));
    last_selected.at(static_cast<std::size_t>(a)) = round;
}

namespace {

// Pads `ids` to K with previous residents, then with the lowest unused ids.
std::vector<AdapterId> fill_to_k(std::vector<AdapterId> ids, const CacheState& prev, int k, int n_adapters) {
    auto take = [&](AdapterId a) {
        if (static_cast<int>(ids.size()) < k && std::find(ids.begin(), ids.end(), a) == ids.end()) {
            ids.push_back(a);
        }
    };
    for (AdapterId a : prev.resident) take(a);
    for (AdapterId a = 0; a < n_adapters; ++a) take(a);
    return ids;
}

// Top-K ids by `key` (descending, lower id on ties) among ids with key > floor.
std::vector<AdapterId> top_k(const std::vector<long>& key, long floor, int k) {
    std::vector<AdapterId> order;
    for (AdapterId a = 0; a < static_cast<AdapterId>(key.size()); ++a) {
        if (key[static_cast<std::size_t>(a)] > floor) order.push_back(a);
    }
    std::stable_sort(order.begin(), order.end(), [&](AdapterId l, AdapterId r) {
        return key[static_cast<std::size_t>(l)] > key[static_cast<std::size_t>(r)];
    });
    if (static_cast<int>(order.size()) > k) order.resize(static_cast<std::size_t>(k));
    return order;
}

} // namespace

CacheState random_cache(int n_adapters, int k, std::mt19937_64& rng) {
    if (k < 0 || k > n_adapters) {
        throw std::invalid_argument("random_cache: need 0 <= K <= N");
    }
    std::vector<AdapterId> all(static_cast<std::size_t>(n_adapters));
    std::iota(all.begin(), all.end(), 0);
    std::vector<AdapterId> pick;
    std::sample(all.begin(), all.end(), std::back_inserter(pick), k, rng);
    return CacheState(std::move(pick));
}

CacheState baseline_update(BaselinePolicy policy, const CacheState& prev, const BaselineInputs& in, int k,
                           int n_adapters, std::mt19937_64& rng) {
    switch (policy) {
    case BaselinePolicy::Static: {
        if (in.initial == nullptr) throw std::invalid_argument("baseline_update: static needs the initial cache");
        return successor(in.initial->resident, prev);
    }
    case BaselinePolicy::Lru: {
        if (in.history == nullptr) throw std::invalid_argument("baseline_update: lru needs the selection history");
        return successor(fill_to_k(top_k(in.history->last_selected, -1, k), prev, k, n_adapters), prev);
    }
    case BaselinePolicy::Lfu: {
        if (in.history == nullptr) throw std::invalid_argument("baseline_update: lfu needs the selection history");
        return successor(fill_to_k(top_k(in.history->counts, 0, k), prev, k, n_adapters), prev);
    }
    case BaselinePolicy::EpsGreedy: {
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        if (coin(rng) < in.epsilon) {
            return successor(random_cache(n_adapters, k, rng).resident, prev);
        }
        if (in.table == nullptr) throw std::invalid_argument("baseline_update: eps_greedy needs a utility table");
        auto greedy = greedy_cache_update(prev, *in.table, k, in.gamma);
        return successor(fill_to_k(greedy.resident, prev, k, n_adapters), prev);
    }
    }
    throw std::invalid_argument("baseline_update: unknown policy");
}

} // namespace polar
