#include "frekoo/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace frekoo {

EvalResult EvalResult::from_values(std::string method, std::string dataset,
                                   std::string metric,
                                   std::vector<double> values) {
    require(!values.empty(), "EvalResult: need at least one seed value");
    EvalResult out;
    out.method = std::move(method);
    out.dataset = std::move(dataset);
    out.metric = std::move(metric);
    out.per_seed = std::move(values);
    out.mean = std::accumulate(out.per_seed.begin(), out.per_seed.end(), 0.0) /
               static_cast<double>(out.per_seed.size());
    if (out.per_seed.size() > 1) {
        double acc = 0.0;
        for (double v : out.per_seed) {
            acc += (v - out.mean) * (v - out.mean);
        }
        out.stddev = std::sqrt(acc / static_cast<double>(out.per_seed.size() - 1));
    }
    return out;
}

double evaluate(const TaskHead& head, const FlatParams& theta,
                const Domain& domain, OutputKind kind, double label_std) {
    require(domain.x.rows() > 0, "evaluate: empty domain");
    const Matrix predictions = head.forward(theta, domain.x);
    if (kind == OutputKind::Classification) {
        return misclassification_percent(predictions, domain.y);
    }
    return mean_absolute_error(predictions, domain.y) * label_std;
}

std::vector<Domain> source_domains(const DomainDataset& dataset) {
    dataset.validate();
    return {dataset.domains.begin(), dataset.domains.end() - 1};
}

const Domain& target_domain(const DomainDataset& dataset) {
    dataset.validate();
    return dataset.domains.back();
}

namespace {

std::string metric_name(OutputKind kind) {
    return kind == OutputKind::Classification ? "misclassification_percent"
                                              : "mae";
}

FlatParams train_single_model(const TaskHead& head, const Domain& domain,
                              int steps, double lr, std::uint64_t init_seed) {
    Rng rng = make_rng(init_seed);
    FlatParams theta = head.init_params(rng);
    AdamOptimizer opt;
    const std::size_t block = opt.register_block(theta.values.size(), lr);
    Vector grad;
    for (int step = 0; step < steps; ++step) {
        const double loss = head.loss_and_grad(theta, domain.x, domain.y, grad);
        if (!std::isfinite(loss)) {
            throw TrainingDivergedError(
                step, "baseline training diverged at step " + std::to_string(step));
        }
        opt.begin_step();
        opt.update(block, theta.values, grad);
    }
    return theta;
}

Domain pool_domains(const std::vector<Domain>& domains) {
    Index total = 0;
    for (const Domain& d : domains) {
        total += d.x.rows();
    }
    Domain pooled;
    pooled.x.resize(total, domains.front().x.cols());
    pooled.y.resize(total);
    Index cursor = 0;
    for (const Domain& d : domains) {
        pooled.x.middleRows(cursor, d.x.rows()) = d.x;
        pooled.y.segment(cursor, d.y.size()) = d.y;
        cursor += d.x.rows();
    }
    return pooled;
}

}  // namespace

EvalResult run_baseline(BaselineKind kind, const DomainDataset& dataset,
                        const TrainConfig& config,
                        const std::vector<std::uint64_t>& seeds) {
    require(!seeds.empty(), "run_baseline: need at least one seed");
    const std::vector<Domain> sources = source_domains(dataset);
    const Domain& target = target_domain(dataset);
    const double lr = config.lr_warm > 0.0 ? config.lr_warm : config.lr_pre;
    // Same total step budget as the sequential warm start.
    const int full_budget =
        config.warm_epochs_first +
        config.warm_epochs_next * (static_cast<int>(sources.size()) - 1);

    std::string name;
    std::vector<double> values;
    for (std::uint64_t seed : seeds) {
        FlatParams theta;
        switch (kind) {
            case BaselineKind::Offline: {
                name = "offline";
                theta = train_single_model(config.head, pool_domains(sources),
                                           full_budget, lr,
                                           derive_seed(seed, 3));
                break;
            }
            case BaselineKind::LastDomain: {
                name = "last_domain";
                theta = train_single_model(config.head, sources.back(),
                                           config.warm_epochs_first, lr,
                                           derive_seed(seed, 4));
                break;
            }
            case BaselineKind::IncFinetune: {
                name = "inc_finetune";
                TrainConfig warm = config;
                warm.seed = seed;
                theta = warm_start_bank(sources, warm).thetas.back();
                break;
            }
        }
        values.push_back(evaluate(config.head, theta, target,
                                  dataset.label_kind, dataset.label_std));
    }
    return EvalResult::from_values(name, dataset.name,
                                   metric_name(dataset.label_kind),
                                   std::move(values));
}

EvalResult run_frekoo(const DomainDataset& dataset, const TrainConfig& config,
                      const std::vector<std::uint64_t>& seeds) {
    require(!seeds.empty(), "run_frekoo: need at least one seed");
    const std::vector<Domain> sources = source_domains(dataset);
    const Domain& target = target_domain(dataset);
    std::vector<double> values;
    for (std::uint64_t seed : seeds) {
        TrainConfig run = config;
        run.seed = seed;
        const TrainOutcome outcome = train_frekoo(sources, run);
        values.push_back(evaluate(config.head, outcome.theta_next, target,
                                  dataset.label_kind, dataset.label_std));
    }
    return EvalResult::from_values("frekoo", dataset.name,
                                   metric_name(dataset.label_kind),
                                   std::move(values));
}

AblationVariant ablation_from_name(const std::string& name) {
    if (name == "full") return AblationVariant::Full;
    if (name == "no_koop") return AblationVariant::NoKoop;
    if (name == "no_freq") return AblationVariant::NoFreq;
    if (name == "no_rec") return AblationVariant::NoRec;
    if (name == "no_koop_loss") return AblationVariant::NoKoopLoss;
    if (name == "no_reg_high") return AblationVariant::NoRegHigh;
    throw ConfigError("unknown ablation variant '" + name + "'");
}

std::string ablation_name(AblationVariant variant) {
    switch (variant) {
        case AblationVariant::Full: return "full";
        case AblationVariant::NoKoop: return "no_koop";
        case AblationVariant::NoFreq: return "no_freq";
        case AblationVariant::NoRec: return "no_rec";
        case AblationVariant::NoKoopLoss: return "no_koop_loss";
        case AblationVariant::NoRegHigh: return "no_reg_high";
    }
    throw ConfigError("unknown ablation variant");
}

TrainConfig apply_ablation(TrainConfig config, AblationVariant variant) {
    switch (variant) {
        case AblationVariant::Full:
            break;
        case AblationVariant::NoKoop:
            config.fix_op_identity = true;
            config.beta = 0.0;
            break;
        case AblationVariant::NoFreq:
            config.bypass_decomposition = true;
            break;
        case AblationVariant::NoRec:
            config.alpha = 0.0;
            break;
        case AblationVariant::NoKoopLoss:
            config.beta = 0.0;
            break;
        case AblationVariant::NoRegHigh:
            config.gamma = 0.0;
            break;
    }
    return config;
}

EvalResult run_ablation(AblationVariant variant, const DomainDataset& dataset,
                        const TrainConfig& config,
                        const std::vector<std::uint64_t>& seeds) {
    EvalResult result =
        run_frekoo(dataset, apply_ablation(config, variant), seeds);
    result.method = ablation_name(variant);
    return result;
}

std::vector<SweepPoint> run_sensitivity(const DomainDataset& dataset,
                                        const TrainConfig& config,
                                        const std::vector<std::uint64_t>& seeds,
                                        const std::vector<std::string>& parameters) {
    const std::vector<double> weight_grid = {0.01, 0.1, 1.0, 10.0, 100.0};
    std::vector<SweepPoint> points;
    for (const std::string& parameter : parameters) {
        std::vector<double> grid;
        if (parameter == "tau") {
            for (int i = 0; i <= 10; ++i) {
                grid.push_back(static_cast<double>(i) / 10.0);
            }
        } else if (parameter == "alpha" || parameter == "beta" ||
                   parameter == "gamma") {
            grid = weight_grid;
        } else {
            throw ConfigError("unknown sweep parameter '" + parameter + "'");
        }
        for (double value : grid) {
            TrainConfig point_config = config;
            if (parameter == "tau") point_config.tau = value;
            if (parameter == "alpha") point_config.alpha = value;
            if (parameter == "beta") point_config.beta = value;
            if (parameter == "gamma") point_config.gamma = value;
            SweepPoint point;
            point.parameter = parameter;
            point.value = value;
            point.result = run_frekoo(dataset, point_config, seeds);
            point.result.method = "frekoo[" + parameter + "]";
            points.push_back(std::move(point));
        }
    }
    return points;
}

RiskDiagnostics risk_diagnostics(const TrainOutcome& outcome,
                                 const FlatParams& probe_theta, double tau,
                                 bool bypass_decomposition) {
    const Index t_steps = outcome.bank.size();
    const Index d = outcome.bank.param_dim();
    require(probe_theta.values.size() == d,
            "risk_diagnostics: probe length does not match the bank");

    // Bank-side quantities, exactly as extrapolation sees them.
    const Matrix theta = outcome.bank.stack();
    Matrix bank_low, bank_high;
    if (bypass_decomposition) {
        bank_low = theta;
        bank_high = Matrix::Zero(t_steps, d);
    } else {
        const Spectrum spectrum = dft_forward(theta);
        const FrequencyMask mask =
            select_top_frequencies(spectral_magnitudes(spectrum), tau);
        const Matrix p_low = band_projector(t_steps, mask, true);
        bank_low = p_low * theta;
        bank_high = theta - bank_low;
    }
    const Matrix z_pred_low = outcome.koopman.koopman_step(
        outcome.koopman.encode_low(bank_low.row(t_steps - 1)));
    const Matrix z_carried_high =
        outcome.koopman.encode_high(bank_high.row(t_steps - 1));

    // Probe-side: extend the trajectory by the probe row and decompose the
    // longer sequence to obtain the probe's own band split.
    Matrix extended(t_steps + 1, d);
    extended.topRows(t_steps) = theta;
    extended.row(t_steps) = probe_theta.values.transpose();
    Matrix probe_low, probe_high;
    if (bypass_decomposition) {
        probe_low = extended.row(t_steps);
        probe_high = Matrix::Zero(1, d);
    } else {
        const Spectrum spectrum = dft_forward(extended);
        const FrequencyMask mask =
            select_top_frequencies(spectral_magnitudes(spectrum), tau);
        const Matrix p_low = band_projector(t_steps + 1, mask, true);
        const Matrix ext_low = p_low * extended;
        probe_low = ext_low.row(t_steps);
        probe_high = extended.row(t_steps) - probe_low;
    }
    const Matrix z_probe_low = outcome.koopman.encode_low(probe_low);
    const Matrix z_probe_high = outcome.koopman.encode_high(probe_high);

    RiskDiagnostics diag;
    diag.e_low = (z_pred_low - z_probe_low).norm();
    diag.e_high = (z_carried_high - z_probe_high).norm();
    return diag;
}

RiskDiagnostics risk_diagnostics_on_target(const TrainOutcome& outcome,
                                           const TrainConfig& config,
                                           const Domain& target) {
    FlatParams probe = outcome.bank.thetas.back();
    AdamOptimizer opt;
    const double lr = config.lr_warm > 0.0 ? config.lr_warm : config.lr_pre;
    const std::size_t block = opt.register_block(probe.values.size(), lr);
    Vector grad;
    for (int step = 0; step < config.warm_epochs_next; ++step) {
        config.head.loss_and_grad(probe, target.x, target.y, grad);
        opt.begin_step();
        opt.update(block, probe.values, grad);
    }
    return risk_diagnostics(outcome, probe, config.tau,
                            config.bypass_decomposition);
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_results_csv(const std::vector<EvalResult>& results,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw IngestError("cannot write '" + path + "'");
    }
    out << "method,dataset,metric,mean,std,per_seed\n";
    for (const EvalResult& r : results) {
        out << r.method << "," << r.dataset << "," << r.metric << ","
            << fmt(r.mean) << "," << fmt(r.stddev) << ",";
        for (std::size_t i = 0; i < r.per_seed.size(); ++i) {
            out << (i ? ";" : "") << fmt(r.per_seed[i]);
        }
        out << "\n";
    }
}

void write_sweep_csv(const std::vector<SweepPoint>& points,
                     const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw IngestError("cannot write '" + path + "'");
    }
    out << "parameter,value,mean,std\n";
    for (const SweepPoint& p : points) {
        out << p.parameter << "," << fmt(p.value) << "," << fmt(p.result.mean)
            << "," << fmt(p.result.stddev) << "\n";
    }
}

void write_decomposition_csv(const ParameterBank& bank,
                             const KoopmanState& koopman, double tau,
                             const std::string& path) {
    const Index t_steps = bank.size();
    const Matrix theta = bank.stack();
    const Decomposition bands = decompose(theta, tau);
    std::ofstream out(path);
    if (!out) {
        throw IngestError("cannot write '" + path + "'");
    }
    out << "t,mean_raw,mean_low,mean_high,mean_reconstructed\n";
    for (Index t = 0; t < t_steps; ++t) {
        double recon;
        if (t == 0) {
            recon = theta.row(t).mean();
        } else {
            const Matrix predicted = koopman.predict_next_param(
                bands.low.row(t - 1), bands.high.row(t - 1));
            recon = predicted.row(0).mean();
        }
        out << (t + 1) << "," << fmt(theta.row(t).mean()) << ","
            << fmt(bands.low.row(t).mean()) << "," << fmt(bands.high.row(t).mean())
            << "," << fmt(recon) << "\n";
    }
}

}  // namespace frekoo
