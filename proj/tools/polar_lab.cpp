// polar-lab: run policy x seed experiment matrices and write regret/switch/diagnostic CSVs.

#include "polar/experiment.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <regex>

namespace {

std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
    static const std::regex range(R"(^\s*(\d+)\s*\.\.\s*(\d+)\s*$)");
    std::smatch m;
    if (!std::regex_match(text, m, range)) throw CLI::ValidationError("--seeds", "expected a..b, got '" + text + "'");
    const auto a = std::stoull(m[1]);
    const auto b = std::stoull(m[2]);
    if (b < a) throw CLI::ValidationError("--seeds", "empty range '" + text + "'");
    std::vector<std::uint64_t> out;
    for (auto s = a; s <= b; ++s) out.push_back(s);
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint adapter caching and routing experiments"};
    app.require_subcommand(0, 1);

    std::string config_path, suite, out_dir, seeds_range, profiles;
    std::vector<std::string> policies;
    std::vector<std::uint64_t> seed_list;
    long horizon = 0;
    int jobs = 0;
    long trace_every = -1;
    app.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
    app.add_option("--suite", suite, "Experiment suite")->check(CLI::IsMember(polar::known_suites()));
    app.add_option("--policy", policies, "Policy to run (repeatable)")->check(CLI::IsMember(polar::known_policies()));
    app.add_option("--seed", seed_list, "Seed (repeatable)");
    app.add_option("--seeds", seeds_range, "Seed range a..b (inclusive)");
    app.add_option("--horizon", horizon, "Horizon T")->check(CLI::PositiveNumber);
    app.add_option("--out-dir", out_dir, "Output directory (POLAR_LAB_OUT overrides)");
    app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--trace-every", trace_every, "Write every k-th round to trace.csv (0 disables)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--profiles", profiles, "Adapter profile CSV replacing the generated library")
        ->check(CLI::ExistingFile);

    auto* gen = app.add_subcommand("generate", "Write a generated adapter profile file");
    polar::GeneratorOptions gopt;
    std::string gen_out;
    gen->add_option("--out", gen_out, "Output profile CSV")->required();
    gen->add_option("--seed", gopt.seed, "Instance seed");
    gen->add_option("--n-adapters", gopt.n_adapters, "Adapters including the base model");
    gen->add_option("--d", gopt.d, "Context dimension");
    gen->add_option("--hot-count", gopt.cache_size, "Size of the designated hot set");
    gen->add_option("--diversity", gopt.diversity, "Hot-set specialization in [0,1]");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            const auto inst = polar::generate_instance(gopt);
            polar::save_profiles(inst.library, gen_out);
            std::cout << "wrote " << inst.library.size() << " adapters to " << gen_out << "\n";
            return 0;
        }

        polar::ExperimentConfig cfg = config_path.empty() ? polar::ExperimentConfig{} : polar::load_config(config_path);
        if (!suite.empty()) cfg.suite = suite;
        if (!policies.empty()) cfg.policies = policies;
        if (!seed_list.empty() && !seeds_range.empty()) {
            throw polar::ConfigError("--seed and --seeds are mutually exclusive");
        }
        if (!seed_list.empty()) cfg.seeds = seed_list;
        if (!seeds_range.empty()) cfg.seeds = parse_seed_range(seeds_range);
        if (horizon > 0) cfg.horizon = horizon;
        if (jobs > 0) cfg.jobs = jobs;
        if (trace_every >= 0) cfg.trace_every = trace_every;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (const char* env = std::getenv("POLAR_LAB_OUT"); env && *env) cfg.out_dir = env;
        if (!profiles.empty()) cfg.profiles = profiles;
        cfg.validate();

        const auto summary = polar::run_matrix(cfg);
        std::cout << summary.cells << " cells, " << summary.failed << " failed; outputs in " << cfg.out_dir.string()
                  << "\n";
        for (const auto& f : summary.failures) std::cerr << "failed: " << f << "\n";
        return summary.failed == 0 ? 0 : 1;
    } catch (const polar::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const polar::IngestionError& e) {
        std::cerr << "profile error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
