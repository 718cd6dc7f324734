#include "polar/eval.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace polar;
using namespace polar::testing;

namespace {

// Three one-dimensional adapters: qualities 0.9, 0.5, 0.1 at x = 1.
Library line_library() {
    return Library({profile(0, vec({0.9}), 1.0), profile(1, vec({0.5}), 0.2), profile(2, vec({0.1}), 0.0)}, 1);
}

/// Hand-written trace over `lib`; mu and hot are filled from the caches.
RunArtifacts hand_run(const Library& lib, const RewardParams& p, std::vector<double> xs, std::vector<AdapterId> actions,
                      std::vector<CacheState> caches, std::vector<long> starts, std::vector<SwitchEvent> sw) {
    RunArtifacts r;
    r.caches = std::move(caches);
    r.cache_start = std::move(starts);
    r.switches = std::move(sw);
    for (const auto& s : r.switches) r.switching_total += s.charged ? p.gamma * s.admitted : 0.0;
    for (std::size_t t = 0; t < xs.size(); ++t) {
        RoundRecord rec;
        rec.action = actions[t];
        int idx = 0;
        while (idx + 1 < static_cast<int>(r.cache_start.size()) &&
               r.cache_start[static_cast<std::size_t>(idx) + 1] <= static_cast<long>(t)) {
            ++idx;
        }
        rec.cache_index = idx;
        const Context c{vec({xs[t]}), std::nullopt};
        rec.hot = r.caches[static_cast<std::size_t>(idx)].contains(rec.action);
        rec.mu = mu(lib, p, rec.action, r.caches[static_cast<std::size_t>(idx)], c);
        rec.q = rec.mu + 0.01 * static_cast<double>(t);
        r.rounds.push_back(rec);
        r.contexts.push_back(c.x);
    }
    return r;
}

double naive_oracle(const Library& lib, const RewardParams& p, const std::vector<Vector>& ctx) {
    double best = -1e300;
    for (const auto& s : all_subsets(lib.size(), p.cache_size)) {
        const CacheState c(std::vector<AdapterId>(s.begin(), s.end()));
        double total = 0.0;
        for (const auto& x : ctx) {
            double m = -1e300;
            for (AdapterId a = 0; a < lib.size(); ++a) m = std::max(m, mu(lib, p, a, c, Context{x, std::nullopt}));
            total += m;
        }
        best = std::max(best, total);
    }
    return best;
}

} // namespace

TEST_CASE("oracle value") {
    const Library lib = line_library();
    RewardParams p;
    p.cache_size = 1;
    SUBCASE("empty horizon") {
        CHECK(oracle_value(lib, p, {}).value == 0.0);
    }
    SUBCASE("hand example") {
        const std::vector<Vector> ctx{vec({1.0}), vec({1.0})};
        const auto o = oracle_value(lib, p, ctx);
        CHECK(o.value == doctest::Approx(1.8));
        CHECK(o.cache.resident == std::vector<AdapterId>{0});
    }
    SUBCASE("a full cache pays no penalty") {
        p.cache_size = 3;
        const std::vector<Vector> ctx{vec({1.0}), vec({-0.5}), vec({0.2})};
        CHECK(oracle_value(lib, p, ctx).value == doctest::Approx(0.9 - 0.05 + 0.18));
    }
    SUBCASE("matches brute force on random instances") {
        std::mt19937_64 rng(21);
        for (int trial = 0; trial < 500; ++trial) {
            const int n = 2 + static_cast<int>(rng() % 7);
            const int d = 1 + static_cast<int>(rng() % 3);
            const Library rl = random_library(n, d, rng);
            RewardParams rp;
            rp.cache_size = 1 + static_cast<int>(rng() % static_cast<unsigned>(n));
            rp.alpha = 0.1 + 0.9 * std::uniform_real_distribution<double>()(rng);
            std::vector<Vector> ctx;
            for (int t = 0; t < 12; ++t) ctx.push_back(random_in_ball(d, rng));
            const double expect = naive_oracle(rl, rp, ctx);
            REQUIRE(oracle_value(rl, rp, ctx).value == doctest::Approx(expect).epsilon(1e-12));
        }
    }
    SUBCASE("prefix values agree with separate solves") {
        std::mt19937_64 rng(4);
        const Library rl = random_library(7, 3, rng);
        RewardParams rp;
        rp.cache_size = 3;
        std::vector<Vector> ctx;
        for (int t = 0; t < 100; ++t) ctx.push_back(random_in_ball(3, rng));
        const std::vector<long> cps{0, 10, 55, 100};
        const auto prefix = oracle_prefix_values(rl, rp, ctx, cps);
        for (std::size_t i = 0; i < cps.size(); ++i) {
            const std::vector<Vector> head(ctx.begin(), ctx.begin() + cps[i]);
            CHECK(prefix[i].value == doctest::Approx(naive_oracle(rl, rp, head)));
            CHECK(prefix[i].horizon == cps[i]);
        }
        const std::vector<long> bad{10, 5};
        CHECK_THROWS(oracle_prefix_values(rl, rp, ctx, bad));
    }
    SUBCASE("enumeration budget") {
        std::mt19937_64 rng(2);
        const Library rl = random_library(10, 2, rng);
        RewardParams rp;
        rp.cache_size = 5;
        const std::vector<Vector> ctx{vec({0.1, 0.2})};
        CHECK_THROWS_AS(oracle_value(rl, rp, ctx, 100), ConfigError);
        CHECK_NOTHROW(oracle_value(rl, rp, ctx, 252));
    }
}

TEST_CASE("ledger and decomposition on a hand trace") {
    const Library lib = line_library();
    RewardParams p;
    p.cache_size = 1;
    p.alpha = 0.5;
    p.gamma = 0.3;
    // Cache {2} for rounds 0-1, then {0} (one admission, charged) for rounds 2-3.
    const auto run = hand_run(lib, p, {1.0, 1.0, 1.0, 1.0}, {1, 2, 0, 0},
                              {CacheState({2}), CacheState({0})}, {0, 2}, {SwitchEvent{2, 1, true}});
    // mu: 0.5 - 0.1, 0.1, 0.9, 0.9.
    const std::vector<long> cps{1, 2, 3, 4};
    std::vector<OracleResult> orc;
    for (long t : cps) orc.push_back(OracleResult{0.9 * t, CacheState({0}), t});
    const auto led = ledger_at(run, lib, p, cps, orc);
    CHECK(led[0].mu_sum == doctest::Approx(0.4));
    CHECK(led[1].switching == 0.0);  // the switch before round 2 belongs to longer prefixes
    CHECK(led[2].switching == doctest::Approx(0.3));
    CHECK(led[3].mu_sum == doctest::Approx(2.3));
    CHECK(led[3].pseudo_regret == doctest::Approx(3.6 - 2.3 + 0.3));
    CHECK(led[3].quality_loss == doctest::Approx(0.4 + 0.8));
    CHECK(led[3].latency_cost == doctest::Approx(0.1 + 0.3));
    CHECK(pseudo_regret(run, orc[3]) == doctest::Approx(led[3].pseudo_regret));
    CHECK_THROWS(pseudo_regret(run, orc[2]));

    const auto dec = decompose(run, lib, p);
    CHECK(dec.quality_loss == doctest::Approx(1.2));
    CHECK(dec.latency_cost == doctest::Approx(0.4));
    CHECK(decompose(run, lib, p, 2).latency_cost == doctest::Approx(0.1));

    SUBCASE("two admissions cost 0.6") {
        const Library two({profile(0, vec({0.9}), 1.0), profile(1, vec({0.5}), 0.2), profile(2, vec({0.1}), 0.0)}, 1);
        RewardParams q = p;
        q.cache_size = 2;
        const CacheState from({0, 1}), to({2, 1});
        CHECK(switching_cost(q, to, from) == doctest::Approx(0.3));
        CHECK(switching_cost(q, CacheState({2, 0}), CacheState({1, 1})) == doctest::Approx(0.6));
        const auto r2 = hand_run(two, q, {1.0, 1.0}, {0, 0}, {CacheState({1, 2}), CacheState({0, 1})}, {0, 1},
                                 {SwitchEvent{1, 2, true}});
        CHECK(r2.switching_total == doctest::Approx(0.6));
    }
    SUBCASE("observation noise does not enter the ledger") {
        RunArtifacts noisy = run;
        for (auto& r : noisy.rounds) r.q += 7.0;
        const auto again = ledger_at(noisy, lib, p, cps, orc);
        CHECK(again[3].pseudo_regret == led[3].pseudo_regret);
    }
    SUBCASE("cold penalties scale linearly with alpha") {
        RewardParams zero_gamma = p;
        zero_gamma.gamma = 0.0;
        RewardParams doubled = zero_gamma;
        doubled.alpha = 1.0;
        CHECK(decompose(run, lib, doubled).latency_cost == doctest::Approx(2.0 * decompose(run, lib, zero_gamma).latency_cost));
        CHECK(decompose(run, lib, doubled).quality_loss == decompose(run, lib, zero_gamma).quality_loss);
    }
}

TEST_CASE("regret identity on simulated runs") {
    GeneratorOptions o;
    o.n_adapters = 8;
    o.cache_size = 3;
    o.d = 3;
    o.seed = 2;
    const auto inst = generate_instance(o);
    RewardParams p;
    p.cache_size = 3;
    Environment env(inst.library, inst.workload, p.sigma, 1);
    const long T = 2000;
    const auto run = run_polar(inst.library, p, EpochSpec::fixed(100), env, T, seeded(1));
    const std::vector<long> cps{200, 1000, 2000};
    const auto orc = oracle_prefix_values(inst.library, p, run.contexts, cps);
    const auto led = ledger_at(run, inst.library, p, cps, orc);
    for (std::size_t i = 0; i < cps.size(); ++i) {
        double best_sum = 0.0;
        for (long t = 0; t < cps[i]; ++t) {
            double b = -1e300;
            for (const auto& a : inst.library.adapters()) b = std::max(b, a.theta_star.dot(run.contexts[static_cast<std::size_t>(t)]));
            best_sum += b;
        }
        // R* - sum mu + switching = (R* - sum_t max_a q) + quality loss + latency cost.
        CHECK(led[i].pseudo_regret == doctest::Approx(orc[i].value - best_sum + led[i].quality_loss + led[i].latency_cost));
        CHECK(led[i].oracle <= best_sum + 1e-9);
        const auto dec = decompose(run, inst.library, p, cps[i]);
        CHECK(dec.quality_loss == doctest::Approx(led[i].quality_loss));
        CHECK(dec.latency_cost == doctest::Approx(led[i].latency_cost));
    }
    CHECK(elliptic_potential(run) <= elliptic_potential_bound(8, 3, p.ridge, T));
}

TEST_CASE("jaccard") {
    const std::vector<AdapterId> a{0, 1}, b{1, 2}, e{};
    CHECK(jaccard(a, b) == doctest::Approx(1.0 / 3.0));
    CHECK(jaccard(a, a) == 1.0);
    CHECK(jaccard(e, e) == 1.0);
    CHECK(jaccard(a, e) == 0.0);
    const std::vector<AdapterId> c{3, 4};
    CHECK(jaccard(a, c) == 0.0);
}

TEST_CASE("cache quality loss") {
    const Library lib = line_library();
    RewardParams p;
    p.cache_size = 1;
    const std::vector<Vector> probes{vec({1.0})};
    CHECK(cache_quality_loss(lib, p, CacheState({0}), CacheState({0}), probes) == 0.0);
    CHECK(cache_quality_loss(lib, p, CacheState({1}), CacheState({0}), probes) == doctest::Approx(0.4));
    CHECK(cache_quality_loss(lib, p, CacheState({2}), CacheState({0}), probes) == doctest::Approx(0.5));
    CHECK_THROWS(cache_quality_loss(lib, p, CacheState({2}), CacheState({0}), {}));

    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const Library rl = random_library(6, 2, rng);
        RewardParams rp;
        rp.cache_size = 2;
        std::vector<Vector> ctx;
        for (int t = 0; t < 30; ++t) ctx.push_back(random_in_ball(2, rng));
        const CacheState best = oracle_value(rl, rp, ctx).cache;
        for (const auto& s : all_subsets(6, 2)) {
            CHECK(cache_quality_loss(rl, rp, CacheState(std::vector<AdapterId>(s.begin(), s.end())), best, ctx) >= -1e-12);
        }
    }
}

TEST_CASE("elliptic potential bound") {
    CHECK(elliptic_potential_bound(2, 1, 1.0, 3) == doctest::Approx(4.0 * std::log(4.0)));
    CHECK(elliptic_potential_bound(16, 5, 1.0, 0) == 0.0);
    RunArtifacts r;
    r.rounds.resize(3);
    r.rounds[0].width_sq = 1.0;
    r.rounds[1].width_sq = 0.5;
    r.rounds[2].width_sq = 0.25;
    CHECK(elliptic_potential(r) == doctest::Approx(1.75));
}
