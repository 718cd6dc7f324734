#include "polar/router.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace polar;
using polar::testing::profile;
using polar::testing::vec;

namespace {

Library flat_library(int n, int d, double latency) {
    std::vector<AdapterProfile> ps;
    for (int a = 0; a < n; ++a) ps.push_back(profile(a, Vector::Zero(d), latency));
    return Library(std::move(ps), d);
}

RewardParams params_k(int k) {
    RewardParams p;
    p.cache_size = k;
    return p;
}

} // namespace

TEST_CASE("confidence radius") {
    RewardParams p;
    p.sigma = 0.0;
    CHECK(confidence_radius(0, p, 16, 5) == doctest::Approx(1.0));
    CHECK(confidence_radius(100000, p, 16, 5) == doctest::Approx(1.0));

    p.sigma = 1.0;
    p.delta = 0.999999999;
    CHECK(confidence_radius(0, p, 1, 1) == doctest::Approx(1.0).epsilon(1e-4));

    p = RewardParams{};
    const double expected = 0.05 * std::sqrt(5.0 * std::log(41.0) + 2.0 * std::log(320.0)) + 1.0;
    CHECK(confidence_radius(200, p, 16, 5) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(confidence_radius(200, p, 16, 5) == doctest::Approx(1.2743).epsilon(1e-4));

    double prev = 0.0;
    for (long t = 0; t < 100000; t += 997) {
        const double b = confidence_radius(t, p, 16, 5);
        CHECK(b >= prev);
        prev = b;
    }
    CHECK_THROWS(confidence_radius(-1, p, 16, 5));
}

TEST_CASE("width") {
    const Library lib = flat_library(1, 1, 0.2);
    Router r(lib, params_k(1));
    CHECK(r.width(0, vec({1.0})) == doctest::Approx(1.0));
    CHECK(r.width(0, vec({0.0})) == 0.0);
    r.update(0, vec({1.0}), 0.3);
    CHECK(r.width(0, vec({1.0})) == doctest::Approx(1.0 / std::sqrt(2.0)));

    const Library lib3 = flat_library(1, 3, 0.2);
    RewardParams p = params_k(1);
    p.ridge = 4.0;
    Router r3(lib3, p);
    CHECK(r3.width(0, vec({0.0, 1.0, 0.0})) == doctest::Approx(0.5));
}

TEST_CASE("update") {
    const Library lib = flat_library(2, 1, 0.2);
    Router r(lib, params_k(1));
    r.update(0, vec({1.0}), 0.5);
    CHECK(r.arm(0).V(0, 0) == doctest::Approx(2.0));
    CHECK(r.arm(0).b[0] == doctest::Approx(0.5));
    CHECK(r.arm(0).theta_hat[0] == doctest::Approx(0.25));
    CHECK(r.arm(0).play_count == 1);
    CHECK(r.rounds() == 1);
    // The other arm is untouched.
    CHECK(r.arm(1).V(0, 0) == 1.0);
    CHECK(r.arm(1).b[0] == 0.0);
    CHECK(r.arm(1).play_count == 0);

    const Library lib2 = flat_library(1, 2, 0.2);
    Router r2(lib2, params_k(1));
    r2.update(0, vec({1.0, 0.0}), 1.0);
    r2.update(0, vec({1.0, 0.0}), 1.0);
    CHECK(r2.arm(0).theta_hat[0] == doctest::Approx(2.0 / 3.0));
    CHECK(r2.arm(0).theta_hat[1] == doctest::Approx(0.0));

    // Zero reward leaves b alone and shrinks the estimate along x.
    r2.update(0, vec({1.0, 0.0}), 0.0);
    CHECK(r2.arm(0).b[0] == doctest::Approx(2.0));
    CHECK(r2.arm(0).theta_hat[0] == doctest::Approx(0.5));
}

TEST_CASE("router invariants over a random stream") {
    std::mt19937_64 rng(11);
    const int n = 4, d = 3;
    const Library lib = polar::testing::random_library(n, d, rng);
    Router r(lib, params_k(2));
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::normal_distribution<double> noise(0.0, 0.05);
    for (int t = 0; t < 300; ++t) {
        const Vector x = polar::testing::random_in_ball(d, rng);
        const AdapterId a = pick(rng);
        r.update(a, x, lib[a].theta_star.dot(x) + noise(rng));
    }
    long plays = 0;
    for (AdapterId a = 0; a < n; ++a) {
        const auto& s = r.arm(a);
        plays += s.play_count;
        CHECK((s.V - s.V.transpose()).norm() == 0.0);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(s.V);
        CHECK(eig.eigenvalues().minCoeff() >= 1.0 - 1e-9);
        CHECK((s.V * s.theta_hat - s.b).norm() <= 1e-9);
    }
    CHECK(plays == r.rounds());
}

TEST_CASE("score") {
    const Library lib({profile(0, vec({0.0, 0.0}), 0.291)}, 2);
    RewardParams p = params_k(1);
    Router r(lib, p);
    const Vector x = vec({0.6, 0.8});
    CHECK(r.score(0, x, CacheState({0}), 1.0) == doctest::Approx(1.0));
    CHECK(r.score(0, x, CacheState{}, 1.0) == doctest::Approx(0.8545));

    // With no bonus the score of an exactly known arm is mu.
    const Library known({profile(0, vec({0.5, 0.0}), 0.4)}, 2);
    Router rk(known, p);
    for (int i = 0; i < 2000; ++i) rk.update(0, vec({1.0, 0.0}), 0.5);
    const Vector e1 = vec({1.0, 0.0});
    CHECK(rk.score(0, e1, CacheState{}, 0.0) ==
          doctest::Approx(mu(known, p, 0, CacheState{}, Context{e1, {}})).epsilon(1e-3));
}

TEST_CASE("select") {
    SUBCASE("identical arms pick the lowest id") {
        const Library lib = flat_library(4, 2, 0.5);
        Router r(lib, params_k(4));
        CHECK(r.select(vec({0.6, 0.8}), CacheState({0, 1, 2, 3}), 1.0) == 0);
    }
    SUBCASE("higher score wins") {
        const Library lib({profile(0, vec({0.5, 0.0}), 0.5), profile(1, vec({0.9, 0.0}), 0.5)}, 2);
        Router r(lib, params_k(2));
        for (int i = 0; i < 50; ++i) {
            r.update(0, vec({1.0, 0.0}), 0.5);
            r.update(1, vec({1.0, 0.0}), 0.9);
        }
        CHECK(r.select(vec({1.0, 0.0}), CacheState({0, 1}), 0.0) == 1);
    }
    SUBCASE("resident arm beats an equal cold arm") {
        const Library lib = flat_library(2, 2, 0.5);
        Router r(lib, params_k(1));
        const Vector x = vec({0.6, 0.8});
        CHECK(r.score(0, x, CacheState({1}), 1.0) < r.score(1, x, CacheState({1}), 1.0));
        CHECK(r.select(x, CacheState({1}), 1.0) == 1);
    }
}

TEST_CASE("thompson sampling draws") {
    const Library lib = flat_library(1, 2, 0.1);
    Router r(lib, params_k(1));
    r.update(0, vec({1.0, 0.0}), 0.4);

    std::mt19937_64 a(5), b(5);
    CHECK(r.ts_sample(0, a, 0.7) == r.ts_sample(0, b, 0.7));

    std::mt19937_64 c(6);
    CHECK((r.ts_sample(0, c, 1e-12) - r.arm(0).theta_hat).norm() < 1e-9);
    CHECK_THROWS(r.ts_sample(0, c, 0.0));

    // Empirical covariance of draws with V = I and unit scale.
    Router fresh(lib, params_k(1));
    std::mt19937_64 g(2024);
    const int draws = 100000;
    Matrix second = Matrix::Zero(2, 2);
    Vector mean = Vector::Zero(2);
    for (int i = 0; i < draws; ++i) {
        const Vector s = fresh.ts_sample(0, g, 1.0);
        mean += s;
        second += s * s.transpose();
    }
    mean /= draws;
    const Matrix cov = second / draws - mean * mean.transpose();
    CHECK(cov(0, 0) == doctest::Approx(1.0).epsilon(0.05));
    CHECK(cov(1, 1) == doctest::Approx(1.0).epsilon(0.05));
    CHECK(std::abs(cov(0, 1)) < 0.05);
}
