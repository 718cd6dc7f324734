#pragma once

#include "polar/core.hpp"

#include <cstdint>
#include <filesystem>
#include <span>

namespace polar {

class IngestionError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Power-law task mixture that generates request contexts.
struct WorkloadSpec {
    int n_tasks = 5;
    double zipf_exponent = 1.0;
    std::vector<Vector> task_means;
    double context_noise = 0.05;
    std::uint64_t seed = 0;

    /// P(task i) proportional to (i+1)^(-zipf_exponent), normalized.
    std::vector<double> task_probabilities() const;
    void validate(int d) const;
};

/// Counter-based uniform in [0,1) keyed by (seed, stream, round, index).
double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t round, std::uint64_t index);

/// Counter-based standard normal keyed the same way.
double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t round, std::uint64_t index);

/// Workload simulator. Contexts and noise are pure functions of (seed, round[, arm]), so every
/// policy run on the same seed sees the same requests and, for the same arm, the same noise.
class Environment {
  public:
    Environment(const Library& lib, WorkloadSpec workload, double sigma, std::uint64_t run_seed,
                bool hindsight_available = true);

    /// Context of round t (0-based); does not advance the round counter.
    Context context_at(long t) const;

    /// Context of the current round, then advances.
    Context next_context();
    long round() const { return round_; }

    /// q = <theta*_a, x> + sigma * eta(t, a).
    double observe_quality(long t, AdapterId a, const Vector& x) const;

    /// Contexts of rounds [0, T). Throws ConfigError for a streaming-only environment.
    std::vector<Vector> hindsight_contexts(long horizon) const;

    /// Held-out contexts drawn from an independent diagnostic stream.
    std::vector<Vector> probe_contexts(std::uint64_t probe_seed, long count) const;

    const WorkloadSpec& workload() const { return workload_; }

  private:
    Context draw(std::uint64_t stream_seed, long t) const;

    const Library* lib_;
    WorkloadSpec workload_;
    std::vector<double> cumulative_;
    double sigma_;
    std::uint64_t stream_seed_;
    bool hindsight_;
    long round_ = 0;
};

/// Scales x onto the unit ball only when its norm exceeds 1.
Vector cap_norm(Vector x);

// ---------------------------------------------------------------------------------------------
// Adapter-profile files

/// Reads a comma-separated profile table with header
/// `id,name,rank,size_mb,cold_latency_ms,is_base,theta[0],...,theta[d-1]`.
/// Latencies are converted from milliseconds to seconds.
Library load_profiles(const std::filesystem::path& path);
Library parse_profiles(const std::string& text, const std::string& source = "<memory>");

void save_profiles(const Library& lib, const std::filesystem::path& path);
std::string format_profiles(const Library& lib);

// ---------------------------------------------------------------------------------------------
// Synthetic instances

struct GeneratorOptions {
    int n_adapters = 16;  // including the base arm
    int d = 5;
    int cache_size = 5;
    std::uint64_t seed = 1;
    double diversity = 1.0;
    bool include_base = true;

    double latency_min_ms = 291.0;
    double latency_max_ms = 1263.0;
    double alpha = 0.5;  // latency weight the dominance check is evaluated at

    int n_tasks = 0;  // 0 selects one task per hot adapter
    double zipf_exponent = 1.0;
    double task_scale = 0.9;
    double context_noise = 0.05;

    double common_quality = 0.2;  // per-coordinate weight shared by all adapters
    double hot_gain = 0.4;        // extra weight of a hot adapter on its own task direction
    double generalist_ratio = 0.55;  // generalist's per-task gain relative to hot_gain; 0 disables it
    double weak_gain_min = 0.7;   // weak specialists draw their gain from [min, max] * hot_gain
    double weak_gain_max = 0.9;
};

struct GeneratedInstance {
    Library library;
    WorkloadSpec workload;
    std::vector<AdapterId> hot_set;
    std::optional<AdapterId> base_id;
    std::optional<AdapterId> generalist_id;
};

/// Builds an instance whose designated hot set is aligned one-to-one with the task means and
/// whose other adapters never beat a resident hot adapter once their cold penalty is paid.
GeneratedInstance generate_instance(const GeneratorOptions& opts);

} // namespace polar
