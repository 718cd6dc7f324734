#pragma once

#include "polar/env.hpp"
#include "polar/eval.hpp"
#include "polar/scheduler.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace polar {

inline constexpr int kCsvSchemaVersion = 1;

/// Policy names accepted by the runner.
const std::vector<std::string>& known_policies();
bool is_known_policy(const std::string& name);

struct ExperimentConfig {
    std::string suite = "main";
    long horizon = 100000;
    std::vector<std::string> policies;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};

    RewardParams reward;
    EpochSpec epoch;  // epoch_length is H for POLAR and the baselines; kappa/c0 for POLAR+
    std::optional<double> ts_scale;
    double epsilon = 0.1;
    std::uint64_t enumeration_budget = kDefaultEnumerationBudget;

    GeneratorOptions generator;                      // builds the library and the workload
    std::optional<std::filesystem::path> profiles;   // replaces the generated library when set

    std::vector<long> checkpoints;  // empty: 200, 400, ... (x2) plus the horizon
    long probe_count = 2000;
    std::uint64_t probe_seed = 0xD1A6u;
    bool track_coverage = false;

    std::filesystem::path out_dir = "results";
    long trace_every = 0;  // 0 disables per-round traces
    int jobs = 1;

    /// Throws ConfigError on unknown policies, empty seeds, or out-of-range values.
    void validate() const;
};

/// Geometric schedule 200, 400, ... below the horizon, then the horizon itself.
std::vector<long> default_checkpoints(long horizon);

/// Reads a JSON config; absent keys keep their defaults.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& json_text);
/// The resolved config as JSON text; parse_config(config_to_json(c)) reproduces c.
std::string config_to_json(const ExperimentConfig& config);

/// One labelled point of a suite sweep.
struct Variant {
    std::string label;
    ExperimentConfig config;
};

/// Expands a suite into its variants. Throws ConfigError for an unknown suite name.
std::vector<Variant> expand_suite(const ExperimentConfig& base);
const std::vector<std::string>& known_suites();

/// Library and workload for a config: generated, or loaded from the profile file.
struct Instance {
    Library library;
    WorkloadSpec workload;
};
Instance build_instance(const ExperimentConfig& config);

/// Result of one (policy, seed) run, reduced to checkpoint rows.
struct CellResult {
    std::string variant;
    std::string policy;
    std::uint64_t seed = 0;
    std::vector<RegretLedger> ledger;
    std::vector<SwitchEvent> switches;
    std::vector<CacheState> caches;  // caches[i] installed by switches[i-1]
    struct Diagnostic {
        long t = 0;
        double jaccard = 0.0;
        double cache_quality_loss = 0.0;
        double elliptic_potential = 0.0;  // sum of s^2 over rounds [0, t)
        double elliptic_bound = 0.0;      // 2 N d log(1 + t / (d * ridge))
    };
    std::vector<Diagnostic> diagnostics;
    double coverage = 1.0;  // fraction of covered (arm, round) pairs when tracked
    std::vector<RoundRecord> trace;  // every trace_every-th round
    long trace_every = 0;
};

/// Runs one policy on one seed, computing that seed's oracle values and probes itself.
CellResult run_cell(const ExperimentConfig& config, const Instance& inst, const std::string& policy,
                    std::uint64_t seed);

struct MatrixSummary {
    int cells = 0;
    int failed = 0;
    std::vector<std::string> failures;
};

/// Runs every (variant, policy, seed) cell and writes the CSVs plus manifest.json to out_dir.
MatrixSummary run_matrix(const ExperimentConfig& config);

/// CSV text for a set of cells, rows ordered by (variant, policy, seed, checkpoint).
std::string regret_csv(const std::string& suite, const std::vector<CellResult>& cells);
std::string switches_csv(const std::string& suite, const std::vector<CellResult>& cells);
std::string diagnostics_csv(const std::string& suite, const std::vector<CellResult>& cells);
std::string trace_csv(const std::string& suite, const std::vector<CellResult>& cells);

} // namespace polar
