#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace polar {

using AdapterId = int;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kNormTolerance = 1e-9;

/// Raised when a linear-algebra step produces a non-finite or non-SPD result.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Raised for inconsistent experiment or generator configuration.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct AdapterProfile {
    AdapterId id = 0;
    std::string name;
    Vector theta_star;
    double cold_latency_s = 0.0;
    std::optional<double> size_mb;
    std::optional<int> rank;
    bool is_base = false;
};

/// Ordered adapter library. Construction validates ids, dimensions and norms.
class Library {
  public:
    Library() = default;
    Library(std::vector<AdapterProfile> adapters, int d);

    int size() const { return static_cast<int>(adapters_.size()); }
    int dim() const { return d_; }
    const AdapterProfile& operator[](AdapterId a) const;
    const std::vector<AdapterProfile>& adapters() const { return adapters_; }

    double max_latency() const;

  private:
    std::vector<AdapterProfile> adapters_;
    int d_ = 0;
};

struct Context {
    Vector x;
    std::optional<int> task_id;
};

struct RewardParams {
    double alpha = 0.5;
    double gamma = 0.3;
    double sigma = 0.05;
    double ridge = 1.0;
    int cache_size = 5;
    double delta = 0.05;

    /// Throws ConfigError when a field is out of range or K exceeds the library.
    void validate(int n_adapters) const;
};

/// Resident set for one epoch. `resident` is kept sorted and duplicate-free.
struct CacheState {
    std::vector<AdapterId> resident;
    int epoch_index = 0;
    long switches_total = 0;

    CacheState() = default;
    explicit CacheState(std::vector<AdapterId> ids, int epoch = 0, long switches = 0);

    bool contains(AdapterId a) const;
    int size() const { return static_cast<int>(resident.size()); }
    bool operator==(const CacheState& other) const { return resident == other.resident; }
};

/// Cold-path penalty alpha * lambda_a.
inline double cold_penalty(const Library& lib, const RewardParams& params, AdapterId a) {
    return params.alpha * lib[a].cold_latency_s;
}

/// Noiseless reward <theta*_a, x> minus the cold penalty when a is not resident.
double mu(const Library& lib, const RewardParams& params, AdapterId a, const CacheState& cache,
          const Context& x);

/// Observed quality minus the cold penalty when a is not resident.
double realized_reward(double q_observed, const Library& lib, const RewardParams& params,
                       AdapterId a, const CacheState& cache);

/// Number of adapters in `next` that were not resident in `prev`.
int admitted_count(const CacheState& next, const CacheState& prev);

double switching_cost(const RewardParams& params, const CacheState& next, const CacheState& prev);

} // namespace polar
