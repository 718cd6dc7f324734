#include "polar/router.hpp"

#include <cmath>

namespace polar {

ArmState::ArmState(int d, double ridge)
    : V(Matrix::Identity(d, d) * ridge), b(Vector::Zero(d)), theta_hat(Vector::Zero(d)), factor(V) {}

double confidence_radius(long t, const RewardParams& params, int n_adapters, int d) {
    if (t < 0) {
        throw std::invalid_argument("confidence_radius: t must be >= 0");
    }
    const double lam = params.ridge;
    const double inner = d * std::log1p(static_cast<double>(t) / (d * lam)) +
                         2.0 * std::log(static_cast<double>(n_adapters) / params.delta);
    return params.sigma * std::sqrt(std::max(inner, 0.0)) + std::sqrt(lam);
}

Router::Router(const Library& lib, const RewardParams& params) : lib_(&lib), params_(params) {
    arms_.reserve(static_cast<std::size_t>(lib.size()));
    for (int a = 0; a < lib.size(); ++a) {
        arms_.emplace_back(lib.dim(), params.ridge);
    }
}

double Router::beta() const { return confidence_radius(t_, params_, size(), lib_->dim()); }

double Router::width(AdapterId a, const Vector& x) const {
    const Vector y = arm(a).factor.matrixL().solve(x);
    const double s = y.norm();
    if (!std::isfinite(s)) {
        throw NumericalError("width: non-finite prediction width for adapter " + std::to_string(a));
    }
    return s;
}

double Router::ucb(AdapterId a, const Vector& x, double beta_t) const {
    return arm(a).theta_hat.dot(x) + beta_t * width(a, x);
}

double Router::score(AdapterId a, const Vector& x, const CacheState& cache, double beta_t) const {
    const double s = ucb(a, x, beta_t);
    return cache.contains(a) ? s : s - cold_penalty(*lib_, params_, a);
}

AdapterId Router::select(const Vector& x, const CacheState& cache, double beta_t) const {
    AdapterId best = 0;
    double best_score = score(0, x, cache, beta_t);
    for (AdapterId a = 1; a < size(); ++a) {
        const double s = score(a, x, cache, beta_t);
        if (s > best_score) {
            best_score = s;
            best = a;
        }
    }
    return best;
}

void Router::update(AdapterId a, const Vector& x, double q_observed) {
    auto& st = arms_.at(static_cast<std::size_t>(a));
    st.V.noalias() += x * x.transpose();
    st.b += q_observed * x;
    st.factor.compute(st.V);
    if (st.factor.info() != Eigen::Success) {
        throw NumericalError("update: design matrix lost positive definiteness for adapter " +
                             std::to_string(a));
    }
    st.theta_hat = st.factor.solve(st.b);
    if (!st.theta_hat.allFinite()) {
        throw NumericalError("update: non-finite ridge estimate for adapter " + std::to_string(a));
    }
    ++st.play_count;
    ++t_;
}

Vector Router::ts_sample(AdapterId a, std::mt19937_64& rng, double v_scale) const {
    if (!(v_scale > 0.0)) {
        throw std::invalid_argument("ts_sample: v_scale must be > 0");
    }
    const auto& st = arm(a);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(st.theta_hat.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z[i] = normal(rng);
    }
    // V = L L^T, so L^{-T} z has covariance V^{-1}.
    const Vector offset = st.factor.matrixU().solve(z);
    if (!offset.allFinite()) {
        throw NumericalError("ts_sample: covariance factorization failed for adapter " + std::to_string(a));
    }
    return st.theta_hat + v_scale * offset;
}

AdapterId Router::select_thompson(const Vector& x, const CacheState& cache, std::mt19937_64& rng,
                                  double v_scale) const {
    AdapterId best = 0;
    double best_score = 0.0;
    for (AdapterId a = 0; a < size(); ++a) {
        double s = ts_sample(a, rng, v_scale).dot(x);
        if (!cache.contains(a)) s -= cold_penalty(*lib_, params_, a);
        if (a == 0 || s > best_score) {
            best_score = s;
            best = a;
        }
    }
    return best;
}

} // namespace polar
