#pragma once

// Helpers shared by the unit tests: small hand-built libraries and brute-force reference
// implementations that never touch the production code paths they check.

#include "polar/core.hpp"
#include "polar/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace polar::testing {

inline Vector vec(std::initializer_list<double> v) {
    Vector x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double e : v) x[i++] = e;
    return x;
}

inline AdapterProfile profile(AdapterId id, Vector theta, double latency_s, bool base = false) {
    AdapterProfile p;
    p.id = id;
    p.name = "a" + std::to_string(id);
    p.theta_star = std::move(theta);
    p.cold_latency_s = latency_s;
    p.is_base = base;
    return p;
}

inline RunOptions seeded(std::uint64_t seed, RouterKind router = RouterKind::Ucb) {
    RunOptions o;
    o.seed = seed;
    o.router = router;
    return o;
}

inline Vector random_in_ball(int d, std::mt19937_64& rng, double max_norm = 1.0) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vector v(d);
    for (int i = 0; i < d; ++i) v[i] = g(rng);
    return v / v.norm() * max_norm * u(rng);
}

/// Random library with N adapters in dimension d and latencies in [0, 1.3] s.
inline Library random_library(int n, int d, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> lat(0.0, 1.3);
    std::vector<AdapterProfile> ps;
    for (int a = 0; a < n; ++a) ps.push_back(profile(a, random_in_ball(d, rng), lat(rng)));
    return Library(std::move(ps), d);
}

/// Every size-k subset of {0..n-1} in lexicographic order.
inline std::vector<std::vector<int>> all_subsets(int n, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    auto rec = [&](auto&& self, int start) -> void {
        if (static_cast<int>(cur.size()) == k) {
            out.push_back(cur);
            return;
        }
        for (int a = start; a < n; ++a) {
            cur.push_back(a);
            self(self, a + 1);
            cur.pop_back();
        }
    };
    rec(rec, 0);
    return out;
}

/// sum_t max_a (values[t][a] - pen[a] * 1{a not in S}), computed directly.
inline double naive_total(const std::vector<Vector>& values, const Vector& pen, const std::vector<int>& s) {
    double total = 0.0;
    for (const auto& v : values) {
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < v.size(); ++a) {
            const bool in = std::find(s.begin(), s.end(), a) != s.end();
            best = std::max(best, in ? v[a] : v[a] - pen[a]);
        }
        total += best;
    }
    return total;
}

struct NaiveBest {
    std::vector<int> ids;
    double total = -std::numeric_limits<double>::infinity();
};

/// Exhaustive arg max over size-k sets; the first strictly better subset wins.
inline NaiveBest naive_best(const std::vector<Vector>& values, const Vector& pen, int k) {
    NaiveBest best;
    for (const auto& s : all_subsets(static_cast<int>(pen.size()), k)) {
        const double v = naive_total(values, pen, s);
        if (best.ids.empty() || v > best.total + 1e-12 * std::max(1.0, std::abs(best.total))) {
            best.total = v;
            best.ids = s;
        }
    }
    return best;
}

} // namespace polar::testing
