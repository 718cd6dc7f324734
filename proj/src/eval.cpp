#include "polar/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace polar {

namespace {

Vector penalties(const Library& lib, const RewardParams& params) {
    Vector pen(lib.size());
    for (AdapterId a = 0; a < lib.size(); ++a) pen[a] = cold_penalty(lib, params, a);
    return pen;
}

Matrix theta_rows(const Library& lib) {
    Matrix theta(lib.size(), lib.dim());
    for (AdapterId a = 0; a < lib.size(); ++a) theta.row(a) = lib[a].theta_star.transpose();
    return theta;
}

double best_mu(const Matrix& theta, const Vector& pen, const CacheState& cache, const Vector& x) {
    const Vector q = theta * x;
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < q.size(); ++a) {
        best = std::max(best, cache.contains(static_cast<AdapterId>(a)) ? q[a] : q[a] - pen[a]);
    }
    return best;
}

} // namespace

OracleResult oracle_value(const Library& lib, const RewardParams& params, std::span<const Vector> contexts,
                          std::uint64_t budget) {
    const long t = static_cast<long>(contexts.size());
    return oracle_prefix_values(lib, params, contexts, std::span<const long>(&t, 1), budget).front();
}

std::vector<OracleResult> oracle_prefix_values(const Library& lib, const RewardParams& params,
                                               std::span<const Vector> contexts, std::span<const long> checkpoints,
                                               std::uint64_t budget) {
    params.validate(lib.size());
    if (!std::is_sorted(checkpoints.begin(), checkpoints.end())) {
        throw std::invalid_argument("oracle_prefix_values: checkpoints must be ascending");
    }
    GainTable gains(penalties(lib, params));
    const Matrix theta = theta_rows(lib);
    std::vector<OracleResult> out;
    long next = 0;
    for (long cp : checkpoints) {
        if (cp < 0 || cp > static_cast<long>(contexts.size())) {
            throw std::invalid_argument("oracle_prefix_values: checkpoint beyond the context sequence");
        }
        for (; next < cp; ++next) gains.append_row(theta * contexts[static_cast<std::size_t>(next)]);
        auto best = gains.best_subset(params.cache_size, budget);
        if (!best) {
            throw ConfigError("oracle: C(" + std::to_string(lib.size()) + ", " + std::to_string(params.cache_size) +
                              ") subsets exceed the enumeration budget");
        }
        out.push_back(OracleResult{best->total, CacheState(std::move(best->ids)), cp});
    }
    return out;
}

double pseudo_regret(const RunArtifacts& run, const OracleResult& oracle) {
    if (oracle.horizon != run.horizon()) {
        throw std::invalid_argument("pseudo_regret: oracle covers " + std::to_string(oracle.horizon) +
                                    " rounds but the trace has " + std::to_string(run.horizon()));
    }
    double mu_sum = 0.0;
    for (const auto& r : run.rounds) mu_sum += r.mu;
    return pseudo_regret(oracle.value, mu_sum, run.switching_total);
}

Decomposition decompose(const RunArtifacts& run, const Library& lib, const RewardParams& params, long upto) {
    const long n = upto < 0 ? run.horizon() : std::min(upto, run.horizon());
    const Matrix theta = theta_rows(lib);
    Decomposition out;
    for (long t = 0; t < n; ++t) {
        const auto& r = run.rounds[static_cast<std::size_t>(t)];
        const Vector q = theta * run.contexts[static_cast<std::size_t>(t)];
        out.quality_loss += q.maxCoeff() - q[r.action];
        if (!r.hot) out.latency_cost += cold_penalty(lib, params, r.action);
    }
    for (const auto& s : run.switches) {
        if (s.charged && s.round < n) out.latency_cost += params.gamma * s.admitted;
    }
    return out;
}

std::vector<RegretLedger> ledger_at(const RunArtifacts& run, const Library& lib, const RewardParams& params,
                                    std::span<const long> checkpoints, std::span<const OracleResult> oracles) {
    if (checkpoints.size() != oracles.size()) {
        throw std::invalid_argument("ledger_at: one oracle value per checkpoint is required");
    }
    const Matrix theta = theta_rows(lib);
    std::vector<RegretLedger> out;
    double mu_sum = 0.0;
    double quality_loss = 0.0;
    double cold_cost = 0.0;
    long t = 0;
    std::size_t sw = 0;
    double switching = 0.0;
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        const long cp = checkpoints[i];
        if (cp > run.horizon() || oracles[i].horizon != cp) {
            throw std::invalid_argument("ledger_at: checkpoint/oracle mismatch at t=" + std::to_string(cp));
        }
        for (; t < cp; ++t) {
            const auto& r = run.rounds[static_cast<std::size_t>(t)];
            mu_sum += r.mu;
            const Vector q = theta * run.contexts[static_cast<std::size_t>(t)];
            quality_loss += q.maxCoeff() - q[r.action];
            if (!r.hot) cold_cost += cold_penalty(lib, params, r.action);
        }
        // A switch before round s serves rounds >= s, so it belongs to prefixes longer than s.
        for (; sw < run.switches.size() && run.switches[sw].round < cp; ++sw) {
            if (run.switches[sw].charged) switching += params.gamma * run.switches[sw].admitted;
        }
        RegretLedger l;
        l.t = cp;
        l.oracle = oracles[i].value;
        l.mu_sum = mu_sum;
        l.switching = switching;
        l.pseudo_regret = pseudo_regret(l.oracle, mu_sum, switching);
        l.quality_loss = quality_loss;
        l.latency_cost = cold_cost + switching;
        out.push_back(l);
    }
    return out;
}

double jaccard(std::span<const AdapterId> a, std::span<const AdapterId> b) {
    std::vector<AdapterId> sa(a.begin(), a.end());
    std::vector<AdapterId> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
    sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
    std::vector<AdapterId> inter;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(inter));
    const std::size_t uni = sa.size() + sb.size() - inter.size();
    return uni == 0 ? 1.0 : static_cast<double>(inter.size()) / static_cast<double>(uni);
}

double cache_quality_loss(const Library& lib, const RewardParams& params, const CacheState& candidate,
                          const CacheState& reference, std::span<const Vector> probes) {
    if (probes.empty()) throw std::invalid_argument("cache_quality_loss: probe list is empty");
    const Matrix theta = theta_rows(lib);
    const Vector pen = penalties(lib, params);
    double loss = 0.0;
    for (const auto& x : probes) {
        loss += best_mu(theta, pen, reference, x) - best_mu(theta, pen, candidate, x);
    }
    return loss;
}

double elliptic_potential(const RunArtifacts& run) {
    double s = 0.0;
    for (const auto& r : run.rounds) s += r.width_sq;
    return s;
}

double elliptic_potential_bound(int n_adapters, int d, double ridge, long horizon) {
    return 2.0 * n_adapters * d * std::log1p(static_cast<double>(horizon) / (d * ridge));
}

} // namespace polar
