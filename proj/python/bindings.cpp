#include "polar/eval.hpp"
#include "polar/experiment.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace polar;

namespace {

Library library_from(const Matrix& theta, const Vector& latency_s) {
    if (latency_s.size() != theta.rows()) throw std::invalid_argument("latency_s needs one entry per adapter row");
    std::vector<AdapterProfile> ps;
    for (Eigen::Index a = 0; a < theta.rows(); ++a) {
        AdapterProfile p;
        p.id = static_cast<AdapterId>(a);
        p.name = "a" + std::to_string(a);
        p.theta_star = theta.row(a).transpose();
        p.cold_latency_s = latency_s[a];
        ps.push_back(std::move(p));
    }
    return Library(std::move(ps), static_cast<int>(theta.cols()));
}

std::vector<Vector> rows_of(const Matrix& m) {
    std::vector<Vector> out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(m.row(i).transpose());
    return out;
}

py::dict library_dict(const Library& lib) {
    Matrix theta(lib.size(), lib.dim());
    Vector lat(lib.size());
    std::vector<std::string> names;
    std::vector<bool> base;
    for (AdapterId a = 0; a < lib.size(); ++a) {
        theta.row(a) = lib[a].theta_star.transpose();
        lat[a] = lib[a].cold_latency_s;
        names.push_back(lib[a].name);
        base.push_back(lib[a].is_base);
    }
    py::dict d;
    d["theta"] = theta;
    d["latency_s"] = lat;
    d["names"] = names;
    d["is_base"] = base;
    return d;
}

py::dict cell_dict(const CellResult& c) {
    py::dict d;
    std::vector<long> t;
    std::vector<double> oracle, mu_sum, switching, regret, quality, latency;
    for (const auto& l : c.ledger) {
        t.push_back(l.t);
        oracle.push_back(l.oracle);
        mu_sum.push_back(l.mu_sum);
        switching.push_back(l.switching);
        regret.push_back(l.pseudo_regret);
        quality.push_back(l.quality_loss);
        latency.push_back(l.latency_cost);
    }
    d["t"] = t;
    d["oracle"] = oracle;
    d["mu_sum"] = mu_sum;
    d["switching"] = switching;
    d["pseudo_regret"] = regret;
    d["quality_loss"] = quality;
    d["latency_cost"] = latency;
    std::vector<long> rounds;
    std::vector<int> admitted;
    for (const auto& s : c.switches) {
        rounds.push_back(s.round);
        admitted.push_back(s.admitted);
    }
    d["switch_rounds"] = rounds;
    d["switch_admitted"] = admitted;
    std::vector<std::vector<AdapterId>> caches;
    for (const auto& cs : c.caches) caches.push_back(cs.resident);
    d["caches"] = caches;
    std::vector<double> jac, cql;
    for (const auto& g : c.diagnostics) {
        jac.push_back(g.jaccard);
        cql.push_back(g.cache_quality_loss);
    }
    d["jaccard"] = jac;
    d["cache_quality_loss"] = cql;
    d["coverage"] = c.coverage;
    return d;
}

ExperimentConfig config_from(const std::string& json_text) {
    return json_text.empty() ? ExperimentConfig{} : parse_config(json_text);
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Adapter caching and routing simulator";
    m.attr("__version__") = POLAR_VERSION;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<IngestionError>(m, "IngestionError", PyExc_ValueError);

    m.def("known_policies", &known_policies);
    m.def("known_suites", &known_suites);

    m.def(
        "confidence_radius",
        [](long t, int n_adapters, int d, double sigma, double ridge, double delta) {
            RewardParams p;
            p.sigma = sigma;
            p.ridge = ridge;
            p.delta = delta;
            return confidence_radius(t, p, n_adapters, d);
        },
        py::arg("t"), py::arg("n_adapters"), py::arg("d"), py::arg("sigma") = 0.05, py::arg("ridge") = 1.0,
        py::arg("delta") = 0.05);

    m.def(
        "generate_instance",
        [](std::uint64_t seed, int n_adapters, int d, int cache_size, double diversity) {
            GeneratorOptions o;
            o.seed = seed;
            o.n_adapters = n_adapters;
            o.d = d;
            o.cache_size = cache_size;
            o.diversity = diversity;
            const GeneratedInstance gi = generate_instance(o);
            py::dict out = library_dict(gi.library);
            out["hot_set"] = gi.hot_set;
            out["base_id"] = gi.base_id;
            out["task_means"] = gi.workload.task_means;
            out["task_probabilities"] = gi.workload.task_probabilities();
            out["profiles_csv"] = format_profiles(gi.library);
            return out;
        },
        py::arg("seed") = GeneratorOptions{}.seed, py::arg("n_adapters") = 16, py::arg("d") = 5,
        py::arg("cache_size") = 5, py::arg("diversity") = 1.0);

    m.def(
        "parse_profiles", [](const std::string& text) { return library_dict(parse_profiles(text)); },
        py::arg("text"));

    m.def(
        "oracle",
        [](const Matrix& theta, const Vector& latency_s, const Matrix& contexts, int cache_size, double alpha) {
            const Library lib = library_from(theta, latency_s);
            RewardParams p;
            p.cache_size = cache_size;
            p.alpha = alpha;
            const auto ctx = rows_of(contexts);
            const OracleResult r = oracle_value(lib, p, ctx);
            return py::make_tuple(r.value, r.cache.resident);
        },
        py::arg("theta"), py::arg("latency_s"), py::arg("contexts"), py::arg("cache_size"), py::arg("alpha") = 0.5,
        "Hindsight-optimal fixed cache: (R*, resident ids).");

    m.def(
        "solve_cache",
        [](const Matrix& estimates, const Vector& penalties, const Matrix& contexts, int cache_size) {
            const auto ctx = rows_of(contexts);
            const EmpiricalCacheUtility util{ctx, estimates, penalties};
            const SolveResult r = solve_cache_exact(util, cache_size);
            return py::make_tuple(r.cache.resident, r.value, r.fell_back_to_greedy);
        },
        py::arg("estimates"), py::arg("penalties"), py::arg("contexts"), py::arg("cache_size"),
        "Exact empirical cache optimization: (resident ids, F_hat, fell_back_to_greedy).");

    m.def(
        "pseudo_regret", [](double oracle, double mu_sum, double switching) { return pseudo_regret(oracle, mu_sum, switching); },
        py::arg("oracle"), py::arg("mu_sum"), py::arg("switching"));

    m.def(
        "run_policy",
        [](const std::string& policy, std::uint64_t seed, long horizon, const std::string& config_json) {
            ExperimentConfig c = config_from(config_json);
            if (horizon > 0) c.horizon = horizon;
            c.validate();
            py::gil_scoped_release release;
            const Instance inst = build_instance(c);
            CellResult cell = run_cell(c, inst, policy, seed);
            py::gil_scoped_acquire acquire;
            return cell_dict(cell);
        },
        py::arg("policy"), py::arg("seed") = 0, py::arg("horizon") = 0, py::arg("config_json") = "",
        "Run one (policy, seed) cell; returns checkpoint ledgers, switches and diagnostics.");

    m.def(
        "run_matrix",
        [](const std::string& config_json, const std::string& out_dir) {
            ExperimentConfig c = config_from(config_json);
            if (!out_dir.empty()) c.out_dir = out_dir;
            c.validate();
            MatrixSummary s;
            {
                py::gil_scoped_release release;
                s = run_matrix(c);
            }
            py::dict d;
            d["cells"] = s.cells;
            d["failed"] = s.failed;
            d["failures"] = s.failures;
            return d;
        },
        py::arg("config_json") = "", py::arg("out_dir") = "",
        "Run a config's full (variant, policy, seed) matrix and write its CSVs.");
}
