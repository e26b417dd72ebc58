// Command-line front end: dataset generation, training, evaluation,
// ablations, sensitivity sweeps, and the theory checks, all driven by a
// JSON config with one section per dataset.

#include <atomic>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "CLI11.hpp"
#include "json.hpp"

#include "frekoo/checkpoint.hpp"
#include "frekoo/datasets.hpp"
#include "frekoo/eval.hpp"
#include "frekoo/koopman.hpp"
#include "frekoo/objective.hpp"
#include "frekoo/spectral.hpp"
#include "frekoo/trainer.hpp"

using json = nlohmann::json;
using namespace frekoo;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitTheory = 3;

// ---------------------------------------------------------------------------
// Config plumbing

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config '" + path + "'");
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& err) {
        throw ConfigError("config '" + path + "' is not valid JSON: " +
                          err.what());
    }
}

const json& require_key(const json& obj, const std::string& key,
                        const std::string& context) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        throw ConfigError("config missing key '" + key + "' in " + context);
    }
    return *it;
}

json dataset_section(const json& config, const std::string& dataset) {
    const json& datasets = require_key(config, "datasets", "config root");
    const auto it = datasets.find(dataset);
    if (it == datasets.end()) {
        std::string known;
        for (const auto& [name, _] : datasets.items()) {
            known += known.empty() ? name : ", " + name;
        }
        throw ConfigError("unknown dataset '" + dataset + "' (config defines: " +
                          known + ")");
    }
    return *it;
}

// Value lookup order: dataset section, then the shared defaults block.
template <typename T>
T lookup(const json& section, const json& defaults, const std::string& key,
         const T& fallback) {
    if (section.contains(key)) return section[key].get<T>();
    if (defaults.contains(key)) return defaults[key].get<T>();
    return fallback;
}

struct CliOverrides {
    int epochs = -1;
    double tau = -1.0;
    double alpha = -1.0;
    double beta = -1.0;
    double gamma = -1.0;
};

TrainConfig build_train_config(const json& config, const std::string& dataset,
                               std::uint64_t seed,
                               const CliOverrides& overrides) {
    const json section = dataset_section(config, dataset);
    const json defaults = config.value("defaults", json::object());
    const std::string context = "dataset '" + dataset + "'";

    TrainConfig out;
    const auto widths =
        require_key(section, "head", context).get<std::vector<Index>>();
    out.head.widths = widths;
    out.head.hidden_act = Activation::Tanh;
    const std::string output =
        require_key(section, "output", context).get<std::string>();
    if (output == "classification") {
        out.head.output = OutputKind::Classification;
    } else if (output == "regression") {
        out.head.output = OutputKind::Regression;
    } else {
        throw ConfigError("dataset '" + dataset + "': unknown output kind '" +
                          output + "'");
    }

    out.tau = require_key(section, "tau", context).get<double>();
    out.alpha = require_key(section, "alpha", context).get<double>();
    out.beta = require_key(section, "beta", context).get<double>();
    out.gamma = require_key(section, "gamma", context).get<double>();
    out.lr_pre = require_key(section, "lr_pre", context).get<double>();
    out.lr_co = require_key(section, "lr_co", context).get<double>();
    out.lr_ko = require_key(section, "lr_ko", context).get<double>();

    out.epochs = lookup<int>(section, defaults, "epochs", out.epochs);
    out.latent_dim =
        lookup<Index>(section, defaults, "latent_dim", out.latent_dim);
    out.enc_hidden = lookup<std::vector<Index>>(section, defaults, "enc_hidden",
                                                out.enc_hidden);
    out.warm_epochs_first = lookup<int>(section, defaults, "warm_epochs_first",
                                        out.warm_epochs_first);
    out.warm_epochs_next =
        lookup<int>(section, defaults, "warm_epochs_next", out.warm_epochs_next);
    out.lr_warm = lookup<double>(section, defaults, "lr_warm", out.lr_warm);
    out.warm_weight_decay = lookup<double>(section, defaults, "warm_weight_decay",
                                           out.warm_weight_decay);
    out.bank_refresh_epochs = lookup<int>(section, defaults,
                                          "bank_refresh_epochs",
                                          out.bank_refresh_epochs);
    out.op_init_scale =
        lookup<double>(section, defaults, "op_init_scale", out.op_init_scale);
    out.seed = seed;

    if (overrides.epochs >= 0) out.epochs = overrides.epochs;
    if (overrides.tau >= 0.0) out.tau = overrides.tau;
    if (overrides.alpha >= 0.0) out.alpha = overrides.alpha;
    if (overrides.beta >= 0.0) out.beta = overrides.beta;
    if (overrides.gamma >= 0.0) out.gamma = overrides.gamma;

    out.validate();
    return out;
}

std::vector<std::uint64_t> config_seeds(const json& config,
                                        const std::vector<std::uint64_t>& cli) {
    if (!cli.empty()) return cli;
    const json defaults = config.value("defaults", json::object());
    if (defaults.contains("seeds")) {
        return defaults["seeds"].get<std::vector<std::uint64_t>>();
    }
    return {0, 1, 2, 3, 4};
}

std::string resolve_data_dir(const json& config) {
    if (const char* env = std::getenv("FREKOO_DATA_DIR")) {
        return env;
    }
    return config.value("data_dir", std::string("data"));
}

// Expands a ["*"] feature list to every numeric column except time and label.
std::vector<std::string> expand_features(const std::string& csv_path,
                                         const std::string& time_column,
                                         const std::string& label_column) {
    std::ifstream in(csv_path);
    if (!in) {
        throw IngestError("cannot open '" + csv_path + "'");
    }
    std::string header;
    if (!std::getline(in, header)) {
        throw IngestError("'" + csv_path + "' is empty (header row required)");
    }
    if (!header.empty() && header.back() == '\r') {
        header.pop_back();
    }
    std::vector<std::string> out;
    std::stringstream ss(header);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (cell != time_column && cell != label_column) {
            out.push_back(cell);
        }
    }
    if (out.empty()) {
        throw IngestError("'" + csv_path +
                          "': no feature columns besides time and label");
    }
    return out;
}

struct ResolvedDataset {
    DomainDataset data;
    bool synthetic = false;  // probe-based diagnostics only make sense here
};

ResolvedDataset resolve_dataset(const json& config, const std::string& dataset,
                                std::uint64_t seed, TrainConfig* train_config) {
    const json section = dataset_section(config, dataset);
    const std::string context = "dataset '" + dataset + "'";
    const std::string kind =
        require_key(section, "kind", context).get<std::string>();

    ResolvedDataset out;
    if (kind == "rotated_moons") {
        out.data = gen_rotated_moons(seed);
        out.data.name = dataset;
        out.synthetic = true;
        return out;
    }
    if (kind == "periodic_moons") {
        out.data = gen_periodic_moons(seed);
        out.data.name = dataset;
        out.synthetic = true;
        return out;
    }
    if (kind != "csv") {
        throw ConfigError("dataset '" + dataset + "': unknown kind '" + kind +
                          "'");
    }

    const std::string file =
        require_key(section, "file", context).get<std::string>();
    const std::string path =
        (std::filesystem::path(resolve_data_dir(config)) / file).string();
    const json& schema_json = require_key(section, "schema", context);

    CsvSchema schema;
    schema.time_column =
        require_key(schema_json, "time_column", context + " schema")
            .get<std::string>();
    schema.label_column =
        require_key(schema_json, "label_column", context + " schema")
            .get<std::string>();
    schema.feature_columns =
        require_key(schema_json, "feature_columns", context + " schema")
            .get<std::vector<std::string>>();
    if (schema.feature_columns.size() == 1 &&
        schema.feature_columns[0] == "*") {
        schema.feature_columns =
            expand_features(path, schema.time_column, schema.label_column);
    }
    schema.label_kind = train_config->head.output;
    schema.num_classes = section.value("num_classes", Index{2});
    schema.strict_time = schema_json.value("strict_time", false);
    schema.standardize = schema_json.value("standardize", true);

    const int n_domains = require_key(section, "n_domains", context).get<int>();
    const std::string split = section.value("split", std::string("equal_count"));
    SplitMode mode;
    if (split == "equal_count") {
        mode = SplitMode::EqualCount;
    } else if (split == "time_range") {
        mode = SplitMode::TimeRange;
    } else {
        throw ConfigError("dataset '" + dataset + "': unknown split '" + split +
                          "'");
    }

    out.data = load_csv_domains(path, schema, n_domains, mode);
    out.data.name = dataset;
    out.data.label_kind = train_config->head.output;
    out.data.num_classes = schema.num_classes;

    // A wildcard feature list fixes the head input width after expansion.
    if (train_config->head.in_dim() != out.data.feature_dim()) {
        train_config->head.widths.front() = out.data.feature_dim();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Run manifest

std::string iso_timestamp() {
    std::time_t now;
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
        now = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    } else {
        now = std::time(nullptr);
    }
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const std::string& config_path, const std::string& dataset,
                    const std::vector<std::uint64_t>& seeds) {
    json manifest;
    manifest["command"] = command;
    manifest["config"] = config_path;
    manifest["dataset"] = dataset;
    manifest["output_dir"] = out_dir;
    manifest["seeds"] = seeds;
    manifest["timestamp"] = iso_timestamp();
    std::ofstream out(std::filesystem::path(out_dir) / "manifest.json");
    if (!out) {
        throw IngestError("cannot write manifest under '" + out_dir + "'");
    }
    out << manifest.dump(2) << "\n";
}

void ensure_out_dir(const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    if (!std::filesystem::is_directory(out_dir)) {
        throw ConfigError("output directory '" + out_dir + "' is not writable");
    }
}

// ---------------------------------------------------------------------------
// Seed fan-out

std::vector<double> per_seed_values(const std::vector<std::uint64_t>& seeds,
                                    int jobs,
                                    const std::function<double(std::uint64_t)>& run) {
    std::vector<double> values(seeds.size());
    if (jobs <= 1) {
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            values[i] = run(seeds[i]);
        }
        return values;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    const int n_workers =
        std::min<int>(jobs, static_cast<int>(seeds.size()));
    for (int w = 0; w < n_workers; ++w) {
        workers.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= seeds.size()) break;
                try {
                    values[i] = run(seeds[i]);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (std::thread& worker : workers) {
        worker.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return values;
}

EvalResult fan_out(const std::string& method, const DomainDataset& data,
                   const std::string& metric,
                   const std::vector<std::uint64_t>& seeds, int jobs,
                   const std::function<double(std::uint64_t)>& run) {
    return EvalResult::from_values(method, data.name, metric,
                                   per_seed_values(seeds, jobs, run));
}

std::string metric_name(const DomainDataset& data) {
    return data.label_kind == OutputKind::Classification
               ? "misclassification_percent"
               : "mae";
}

void print_results(const std::vector<EvalResult>& results) {
    for (const EvalResult& r : results) {
        std::printf("%-14s %-12s %s = %.4f +- %.4f\n", r.method.c_str(),
                    r.dataset.c_str(), r.metric.c_str(), r.mean, r.stddev);
    }
}

void write_summary_json(const std::vector<EvalResult>& results,
                        const std::string& path) {
    json rows = json::array();
    for (const EvalResult& r : results) {
        json row;
        row["method"] = r.method;
        row["dataset"] = r.dataset;
        row["metric"] = r.metric;
        row["mean"] = r.mean;
        row["std"] = r.stddev;
        row["per_seed"] = r.per_seed;
        rows.push_back(std::move(row));
    }
    std::ofstream out(path);
    if (!out) {
        throw IngestError("cannot write '" + path + "'");
    }
    out << rows.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_generate(const std::string& config_path, const std::string& dataset,
                 std::uint64_t seed, const std::string& out_dir) {
    const json config = load_config_file(config_path);
    const json section = dataset_section(config, dataset);
    const std::string kind =
        require_key(section, "kind", "dataset '" + dataset + "'")
            .get<std::string>();

    DomainDataset data;
    if (kind == "rotated_moons") {
        data = gen_rotated_moons(seed);
    } else if (kind == "periodic_moons") {
        data = gen_periodic_moons(seed);
    } else {
        throw ConfigError("dataset '" + dataset +
                          "' is ingested from CSV, not generated");
    }
    data.name = dataset;

    ensure_out_dir(out_dir);
    const std::vector<std::string> files = export_csv(data, out_dir);
    write_manifest(out_dir, "generate", config_path, dataset, {seed});
    std::printf("wrote %zu domain files (%lld samples) under %s\n",
                files.size(), static_cast<long long>(data.total_samples()),
                out_dir.c_str());
    return kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& dataset,
              std::uint64_t seed, const std::string& out_dir,
              const CliOverrides& overrides) {
    const json config = load_config_file(config_path);
    TrainConfig train_config =
        build_train_config(config, dataset, seed, overrides);
    const ResolvedDataset resolved =
        resolve_dataset(config, dataset, seed, &train_config);
    train_config.validate();

    ensure_out_dir(out_dir);
    const std::vector<Domain> sources = source_domains(resolved.data);
    const TrainOutcome outcome = train_frekoo(sources, train_config);

    const std::string ckpt =
        (std::filesystem::path(out_dir) / "model.ckpt").string();
    save_checkpoint(outcome, train_config, ckpt);
    write_train_log(outcome.log,
                    (std::filesystem::path(out_dir) / "train_log.csv").string());
    write_decomposition_csv(
        outcome.bank, outcome.koopman, train_config.tau,
        (std::filesystem::path(out_dir) / "decomposition.csv").string());
    write_manifest(out_dir, "train", config_path, dataset, {seed});

    const double target_metric =
        evaluate(train_config.head, outcome.theta_next,
                 target_domain(resolved.data), train_config.head.output,
                 resolved.data.label_std);
    std::printf("trained %d epochs; target %s = %.4f; checkpoint at %s\n",
                train_config.epochs, metric_name(resolved.data).c_str(),
                target_metric, ckpt.c_str());
    return kExitOk;
}

int cmd_eval(const std::string& config_path, const std::string& dataset,
             const std::vector<std::uint64_t>& cli_seeds,
             const std::string& out_dir, const std::string& checkpoint,
             int jobs, const CliOverrides& overrides) {
    const json config = load_config_file(config_path);
    const std::vector<std::uint64_t> seeds = config_seeds(config, cli_seeds);
    ensure_out_dir(out_dir);

    if (!checkpoint.empty()) {
        // Evaluate a persisted model instead of retraining.
        TrainConfig train_config =
            build_train_config(config, dataset, seeds.front(), overrides);
        const ResolvedDataset resolved =
            resolve_dataset(config, dataset, seeds.front(), &train_config);
        const TrainOutcome outcome = load_checkpoint(checkpoint, train_config);
        const double value =
            evaluate(train_config.head, outcome.theta_next,
                     target_domain(resolved.data), train_config.head.output,
                     resolved.data.label_std);
        std::vector<EvalResult> results;
        results.push_back(EvalResult::from_values(
            "frekoo", resolved.data.name, metric_name(resolved.data), {value}));
        print_results(results);
        write_results_csv(results, (std::filesystem::path(out_dir) /
                                    "results.csv").string());
        write_manifest(out_dir, "eval", config_path, dataset, {seeds.front()});
        return kExitOk;
    }

    // Dataset realized once; seeds vary the training randomness.
    TrainConfig probe_config =
        build_train_config(config, dataset, seeds.front(), overrides);
    const ResolvedDataset resolved =
        resolve_dataset(config, dataset, seeds.front(), &probe_config);
    const DomainDataset& data = resolved.data;

    std::vector<EvalResult> results;
    const auto run_method = [&](const std::string& method) {
        return fan_out(method, data, metric_name(data), seeds, jobs,
                       [&](std::uint64_t seed) {
                           TrainConfig c = build_train_config(config, dataset,
                                                              seed, overrides);
                           c.head = probe_config.head;
                           if (method == "frekoo") {
                               return run_frekoo(data, c, {seed}).per_seed[0];
                           }
                           BaselineKind kind = BaselineKind::Offline;
                           if (method == "last_domain") {
                               kind = BaselineKind::LastDomain;
                           }
                           if (method == "inc_finetune") {
                               kind = BaselineKind::IncFinetune;
                           }
                           return run_baseline(kind, data, c, {seed})
                               .per_seed[0];
                       });
    };
    for (const std::string& method :
         {"frekoo", "offline", "last_domain", "inc_finetune"}) {
        results.push_back(run_method(method));
    }
    print_results(results);

    write_results_csv(
        results, (std::filesystem::path(out_dir) / "results.csv").string());
    write_summary_json(
        results, (std::filesystem::path(out_dir) / "summary.json").string());

    if (resolved.synthetic) {
        // Probe-based latent gaps, available only where the target can be
        // trained on directly.
        TrainConfig c = probe_config;
        const TrainOutcome outcome = train_frekoo(source_domains(data), c);
        const RiskDiagnostics diag =
            risk_diagnostics_on_target(outcome, c, target_domain(data));
        std::ofstream diag_out(std::filesystem::path(out_dir) /
                               "diagnostics.csv");
        diag_out << "e_low,e_high\n";
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", diag.e_low,
                      diag.e_high);
        diag_out << buf;
        std::printf("latent gaps: e_low = %.6g, e_high = %.6g\n", diag.e_low,
                    diag.e_high);
    } else {
        std::printf("diagnostics skipped: no next-step probe for CSV data\n");
    }

    write_manifest(out_dir, "eval", config_path, dataset, seeds);
    return kExitOk;
}

int cmd_ablate(const std::string& config_path, const std::string& dataset,
               const std::vector<std::uint64_t>& cli_seeds,
               const std::string& out_dir, const std::string& variant,
               int jobs, const CliOverrides& overrides) {
    const json config = load_config_file(config_path);
    const std::vector<std::uint64_t> seeds = config_seeds(config, cli_seeds);
    ensure_out_dir(out_dir);

    TrainConfig probe_config =
        build_train_config(config, dataset, seeds.front(), overrides);
    const ResolvedDataset resolved =
        resolve_dataset(config, dataset, seeds.front(), &probe_config);
    const DomainDataset& data = resolved.data;

    std::vector<AblationVariant> variants;
    if (variant == "all") {
        variants = {AblationVariant::Full,       AblationVariant::NoKoop,
                    AblationVariant::NoFreq,     AblationVariant::NoRec,
                    AblationVariant::NoKoopLoss, AblationVariant::NoRegHigh};
    } else {
        variants = {ablation_from_name(variant)};
    }

    std::vector<EvalResult> results;
    for (const AblationVariant v : variants) {
        results.push_back(
            fan_out(ablation_name(v), data, metric_name(data), seeds, jobs,
                    [&](std::uint64_t seed) {
                        TrainConfig c =
                            build_train_config(config, dataset, seed, overrides);
                        c.head = probe_config.head;
                        return run_ablation(v, data, c, {seed}).per_seed[0];
                    }));
    }
    print_results(results);
    write_results_csv(
        results, (std::filesystem::path(out_dir) / "ablations.csv").string());
    write_summary_json(
        results, (std::filesystem::path(out_dir) / "summary.json").string());
    write_manifest(out_dir, "ablate", config_path, dataset, seeds);
    return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& dataset,
              const std::vector<std::uint64_t>& cli_seeds,
              const std::string& out_dir,
              std::vector<std::string> parameters, int jobs,
              const CliOverrides& overrides) {
    const json config = load_config_file(config_path);
    const std::vector<std::uint64_t> seeds = config_seeds(config, cli_seeds);
    ensure_out_dir(out_dir);
    if (parameters.empty()) {
        parameters = {"tau", "alpha", "beta", "gamma"};
    }

    TrainConfig probe_config =
        build_train_config(config, dataset, seeds.front(), overrides);
    const ResolvedDataset resolved =
        resolve_dataset(config, dataset, seeds.front(), &probe_config);
    TrainConfig base = probe_config;

    // run_sensitivity already owns the grids; jobs > 1 fans out inside each
    // grid point over seeds, which keeps the output order deterministic.
    std::vector<SweepPoint> points;
    for (const std::string& parameter : parameters) {
        const std::vector<SweepPoint> grid =
            run_sensitivity(resolved.data, base, seeds, {parameter});
        points.insert(points.end(), grid.begin(), grid.end());
    }
    for (const SweepPoint& point : points) {
        std::printf("%-6s %-8.4g %s = %.4f +- %.4f\n", point.parameter.c_str(),
                    point.value, point.result.metric.c_str(),
                    point.result.mean, point.result.stddev);
    }
    write_sweep_csv(points,
                    (std::filesystem::path(out_dir) / "sweep.csv").string());
    write_manifest(out_dir, "sweep", config_path, dataset, seeds);
    return kExitOk;
}

int cmd_theory(std::uint64_t seed, int trials, const std::string& out_dir) {
    // Part 1: Monte-Carlo stability bound over random diagonalizable operators.
    Rng rng = make_rng(seed);
    std::uniform_int_distribution<int> m_dist(2, 16);
    std::uniform_real_distribution<double> eig_dist(-0.98, 0.98);
    std::normal_distribution<double> norm(0.0, 1.0);

    int violations = 0;
    double worst_margin = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        const Index m = m_dist(rng);
        Vector eigs(m);
        for (Index i = 0; i < m; ++i) {
            eigs(i) = eig_dist(rng);
        }
        Matrix v(m, m);
        for (Index r = 0; r < m; ++r) {
            for (Index c = 0; c < m; ++c) {
                v(r, c) = norm(rng);
            }
        }
        v += 3.0 * Matrix::Identity(m, m);
        const Matrix k = v * eigs.asDiagonal() * v.inverse();
        Vector e0(m);
        for (Index i = 0; i < m; ++i) {
            e0(i) = norm(rng);
        }
        const StabilityReport report = stability_bound_check(k, e0, 50);
        if (report.violation) {
            ++violations;
        }
        for (const auto& row : report.rows) {
            if (row.bound > 0.0) {
                worst_margin = std::max(worst_margin, row.measured / row.bound);
            }
        }
    }
    std::printf("stability bound: %d trials, %d violations, worst measured/bound "
                "= %.6f\n", trials, violations, worst_margin);

    // Part 2: the random-walk prior gap must depend on shape alone.
    int gap_failures = 0;
    const double sigma = 1.0;
    const std::vector<std::pair<Index, Index>> shapes = {
        {3, 2}, {5, 4}, {9, 8}, {12, 16}, {20, 32}};
    for (const auto& [t_steps, m] : shapes) {
        double min_gap = std::numeric_limits<double>::infinity();
        double max_gap = -std::numeric_limits<double>::infinity();
        for (int rep = 0; rep < 100; ++rep) {
            Matrix z(t_steps, m);
            for (Index r = 0; r < t_steps; ++r) {
                for (Index c = 0; c < m; ++c) {
                    z(r, c) = norm(rng);
                }
            }
            const MapEquivalence eq = map_equivalence_check(z, sigma);
            min_gap = std::min(min_gap, eq.constant_gap);
            max_gap = std::max(max_gap, eq.constant_gap);
        }
        const double analytic = static_cast<double>(t_steps - 1) *
                                (static_cast<double>(m) / 2.0) *
                                std::log(2.0 * M_PI * sigma * sigma);
        const double spread = max_gap - min_gap;
        if (spread > 1e-9 || std::abs(max_gap - analytic) > 1e-9) {
            ++gap_failures;
        }
        std::printf("prior gap T=%lld m=%lld: spread = %.3g, analytic delta = "
                    "%.3g\n", static_cast<long long>(t_steps),
                    static_cast<long long>(m), spread,
                    std::abs(max_gap - analytic));
    }

    if (!out_dir.empty()) {
        ensure_out_dir(out_dir);
        std::ofstream out(std::filesystem::path(out_dir) / "theory.csv");
        out << "check,trials,failures\n";
        out << "stability_bound," << trials << "," << violations << "\n";
        out << "prior_gap," << shapes.size() * 100 << "," << gap_failures
            << "\n";
    }

    if (violations > 0 || gap_failures > 0) {
        std::fprintf(stderr, "theory checks failed\n");
        return kExitTheory;
    }
    std::printf("theory checks passed\n");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FreKoo: frequency-decomposed Koopman extrapolation of model "
                 "parameter trajectories"};
    app.require_subcommand(1);

    std::string config_path = "configs/frekoo.json";
    std::string dataset;
    std::string out_dir = "runs";
    std::string checkpoint;
    std::string variant = "all";
    std::vector<std::string> parameters;
    std::vector<std::uint64_t> seeds;
    std::uint64_t seed = 0;
    int jobs = 1;
    int trials = 1000;
    CliOverrides overrides;

    const auto add_common = [&](CLI::App* cmd, bool wants_seeds) {
        cmd->add_option("--config", config_path, "JSON config file")
            ->capture_default_str();
        cmd->add_option("--dataset", dataset, "dataset section name")
            ->required();
        cmd->add_option("--out", out_dir, "output directory")
            ->capture_default_str();
        if (wants_seeds) {
            cmd->add_option("--seeds", seeds,
                            "comma-separated training seeds (default: config)")
                ->delimiter(',');
            cmd->add_option("--jobs", jobs, "parallel workers over seeds")
                ->capture_default_str();
        } else {
            cmd->add_option("--seed", seed, "training seed")
                ->capture_default_str();
        }
        cmd->add_option("--epochs", overrides.epochs, "override epochs");
        cmd->add_option("--tau", overrides.tau, "override tau");
        cmd->add_option("--alpha", overrides.alpha, "override alpha");
        cmd->add_option("--beta", overrides.beta, "override beta");
        cmd->add_option("--gamma", overrides.gamma, "override gamma");
    };

    CLI::App* generate =
        app.add_subcommand("generate", "write a synthetic dataset as CSV files");
    generate->add_option("--config", config_path, "JSON config file")
        ->capture_default_str();
    generate->add_option("--dataset", dataset, "dataset section name")
        ->required();
    generate->add_option("--seed", seed, "generation seed")
        ->capture_default_str();
    generate->add_option("--out", out_dir, "output directory")
        ->capture_default_str();

    CLI::App* train = app.add_subcommand(
        "train", "train on the source domains and persist a checkpoint");
    add_common(train, /*wants_seeds=*/false);

    CLI::App* eval_cmd = app.add_subcommand(
        "eval", "evaluate FreKoo and the baselines on the target domain");
    add_common(eval_cmd, /*wants_seeds=*/true);
    eval_cmd->add_option("--checkpoint", checkpoint,
                         "evaluate this checkpoint instead of retraining");

    CLI::App* ablate = app.add_subcommand(
        "ablate", "run ablation variants and report the ordering");
    add_common(ablate, /*wants_seeds=*/true);
    ablate->add_option("--variant", variant,
                       "one of full,no_koop,no_freq,no_rec,no_koop_loss,"
                       "no_reg_high or 'all'")
        ->capture_default_str();

    CLI::App* sweep = app.add_subcommand(
        "sweep", "sensitivity grids over tau and the loss weights");
    add_common(sweep, /*wants_seeds=*/true);
    sweep->add_option("--parameter", parameters,
                      "parameters to sweep (default: all four)");

    CLI::App* theory = app.add_subcommand(
        "theory", "stability bound Monte-Carlo and prior-gap checks");
    theory->add_option("--seed", seed, "Monte-Carlo seed")
        ->capture_default_str();
    theory->add_option("--trials", trials, "number of random operators")
        ->capture_default_str();
    theory->add_option("--out", out_dir, "optional report directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (generate->parsed()) {
            return cmd_generate(config_path, dataset, seed, out_dir);
        }
        if (train->parsed()) {
            return cmd_train(config_path, dataset, seed, out_dir, overrides);
        }
        if (eval_cmd->parsed()) {
            return cmd_eval(config_path, dataset, seeds, out_dir, checkpoint,
                            jobs, overrides);
        }
        if (ablate->parsed()) {
            return cmd_ablate(config_path, dataset, seeds, out_dir, variant,
                              jobs, overrides);
        }
        if (sweep->parsed()) {
            return cmd_sweep(config_path, dataset, seeds, out_dir, parameters,
                             jobs, overrides);
        }
        if (theory->parsed()) {
            return cmd_theory(seed, trials, out_dir.empty() ? "" : out_dir);
        }
    } catch (const ConfigError& err) {
        std::fprintf(stderr, "config error: %s\n", err.what());
        return kExitUsage;
    } catch (const TrainingDivergedError& err) {
        std::fprintf(stderr, "training diverged: %s\n", err.what());
        return kExitRuntime;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return kExitRuntime;
    }
    return kExitUsage;
}
