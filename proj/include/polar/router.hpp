#pragma once

#include "polar/core.hpp"

#include <random>

namespace polar {

/// Ridge sufficient statistics for one adapter: V = ridge*I + sum x x^T, b = sum q x.
struct ArmState {
    Matrix V;
    Vector b;
    Vector theta_hat;
    Eigen::LLT<Matrix> factor;
    long play_count = 0;

    ArmState(int d, double ridge);
};

/// Confidence radius sigma*sqrt(d*log(1 + t/(d*ridge)) + 2*log(N/delta)) + sqrt(ridge).
double confidence_radius(long t, const RewardParams& params, int n_adapters, int d);

/// Cache-aware LinUCB router over a fixed adapter library.
///
/// Every round plays exactly one arm, so `rounds()` equals the sum of play counts.
class Router {
  public:
    Router(const Library& lib, const RewardParams& params);

    const Library& library() const { return *lib_; }
    const RewardParams& params() const { return params_; }
    const ArmState& arm(AdapterId a) const { return arms_.at(static_cast<std::size_t>(a)); }
    int size() const { return static_cast<int>(arms_.size()); }
    long rounds() const { return t_; }

    /// Radius at the current global round counter.
    double beta() const;

    /// sqrt(x^T V_a^{-1} x).
    double width(AdapterId a, const Vector& x) const;

    /// Optimistic quality <theta_hat_a, x> + beta * width, without the cold penalty.
    double ucb(AdapterId a, const Vector& x, double beta_t) const;

    double score(AdapterId a, const Vector& x, const CacheState& cache, double beta_t) const;

    /// Highest-scoring arm; ties go to the lowest id.
    AdapterId select(const Vector& x, const CacheState& cache, double beta_t) const;

    void update(AdapterId a, const Vector& x, double q_observed);

    /// Draw theta ~ N(theta_hat_a, v_scale^2 * V_a^{-1}).
    Vector ts_sample(AdapterId a, std::mt19937_64& rng, double v_scale) const;

    /// Thompson-sampling arm choice: sampled quality minus cold penalty, no bonus.
    AdapterId select_thompson(const Vector& x, const CacheState& cache, std::mt19937_64& rng,
                              double v_scale) const;

  private:
    const Library* lib_;
    RewardParams params_;
    std::vector<ArmState> arms_;
    long t_ = 0;
};

} // namespace polar
