#include "polar/core.hpp"

#include <algorithm>
#include <cmath>

namespace polar {

Library::Library(std::vector<AdapterProfile> adapters, int d) : adapters_(std::move(adapters)), d_(d) {
    if (d_ < 1) {
        throw std::invalid_argument("library: context dimension must be >= 1");
    }
    for (std::size_t i = 0; i < adapters_.size(); ++i) {
        const auto& p = adapters_[i];
        const std::string where = "adapter " + std::to_string(i) + " (" + p.name + ")";
        if (p.id != static_cast<AdapterId>(i)) {
            throw std::invalid_argument(where + ": ids must be dense 0..N-1 in order");
        }
        if (p.theta_star.size() != d_) {
            throw std::invalid_argument(where + ": theta dimension " + std::to_string(p.theta_star.size()) +
                                        " != d=" + std::to_string(d_));
        }
        if (!p.theta_star.allFinite() || p.theta_star.norm() > 1.0 + kNormTolerance) {
            throw std::invalid_argument(where + ": ||theta*||_2 must be <= 1");
        }
        if (!(p.cold_latency_s >= 0.0) || !std::isfinite(p.cold_latency_s)) {
            throw std::invalid_argument(where + ": cold latency must be finite and >= 0");
        }
        if (p.is_base && p.cold_latency_s != 0.0) {
            throw std::invalid_argument(where + ": the base arm must have zero cold latency");
        }
    }
}

const AdapterProfile& Library::operator[](AdapterId a) const {
    if (a < 0 || a >= size()) {
        throw std::invalid_argument("unknown adapter id " + std::to_string(a));
    }
    return adapters_[static_cast<std::size_t>(a)];
}

double Library::max_latency() const {
    double m = 0.0;
    for (const auto& p : adapters_) {
        m = std::max(m, p.cold_latency_s);
    }
    return m;
}

void RewardParams::validate(int n_adapters) const {
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
    if (!(gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
    if (!(sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
    if (!(ridge >= 1.0)) throw ConfigError("ridge must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
    if (cache_size < 1) throw ConfigError("cache size K must be >= 1");
    if (cache_size > n_adapters) {
        throw ConfigError("cache size K=" + std::to_string(cache_size) + " exceeds library size N=" +
                          std::to_string(n_adapters));
    }
}

CacheState::CacheState(std::vector<AdapterId> ids, int epoch, long switches)
    : resident(std::move(ids)), epoch_index(epoch), switches_total(switches) {
    std::sort(resident.begin(), resident.end());
    resident.erase(std::unique(resident.begin(), resident.end()), resident.end());
}

bool CacheState::contains(AdapterId a) const {
    return std::binary_search(resident.begin(), resident.end(), a);
}

double mu(const Library& lib, const RewardParams& params, AdapterId a, const CacheState& cache,
          const Context& x) {
    const auto& p = lib[a];
    const double quality = p.theta_star.dot(x.x);
    return cache.contains(a) ? quality : quality - params.alpha * p.cold_latency_s;
}

double realized_reward(double q_observed, const Library& lib, const RewardParams& params, AdapterId a,
                       const CacheState& cache) {
    const auto& p = lib[a];
    return cache.contains(a) ? q_observed : q_observed - params.alpha * p.cold_latency_s;
}

int admitted_count(const CacheState& next, const CacheState& prev) {
    int n = 0;
    for (AdapterId a : next.resident) {
        if (!prev.contains(a)) ++n;
    }
    return n;
}

double switching_cost(const RewardParams& params, const CacheState& next, const CacheState& prev) {
    return params.gamma * admitted_count(next, prev);
}

} // namespace polar
