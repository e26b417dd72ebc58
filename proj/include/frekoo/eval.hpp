#pragma once

#include <string>
#include <vector>

#include "frekoo/checkpoint.hpp"
#include "frekoo/datasets.hpp"
#include "frekoo/trainer.hpp"

namespace frekoo {

struct EvalResult {
    std::string method;
    std::string dataset;
    std::string metric;  // "misclassification_percent" or "mae"
    std::vector<double> per_seed;
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation; 0 for a single seed

    static EvalResult from_values(std::string method, std::string dataset,
                                  std::string metric,
                                  std::vector<double> values);
};

// Misclassification % (classification) or MAE on the original label scale
// (regression; label_std undoes the training-domain standardization).
double evaluate(const TaskHead& head, const FlatParams& theta,
                const Domain& domain, OutputKind kind, double label_std = 1.0);

enum class BaselineKind { Offline, LastDomain, IncFinetune };

// Time-agnostic baselines. All train on the source domains (everything but
// the last) and evaluate on the final domain. Offline pools the sources,
// LastDomain uses only the newest one, IncFinetune fine-tunes sequentially
// and keeps the final model.
EvalResult run_baseline(BaselineKind kind, const DomainDataset& dataset,
                        const TrainConfig& config,
                        const std::vector<std::uint64_t>& seeds);

// Full method: train on sources, extrapolate, evaluate theta_next on the
// target domain.
EvalResult run_frekoo(const DomainDataset& dataset, const TrainConfig& config,
                      const std::vector<std::uint64_t>& seeds);

enum class AblationVariant {
    Full,
    NoKoop,      // K = I frozen and beta = 0
    NoFreq,      // decomposition bypassed
    NoRec,       // alpha = 0
    NoKoopLoss,  // beta = 0
    NoRegHigh    // gamma = 0
};

AblationVariant ablation_from_name(const std::string& name);
std::string ablation_name(AblationVariant variant);
TrainConfig apply_ablation(TrainConfig config, AblationVariant variant);

EvalResult run_ablation(AblationVariant variant, const DomainDataset& dataset,
                        const TrainConfig& config,
                        const std::vector<std::uint64_t>& seeds);

struct SweepPoint {
    std::string parameter;  // "tau", "alpha", "beta", "gamma"
    double value = 0.0;
    EvalResult result;
};

// tau over an 11-point grid 0.0..1.0; each loss weight over
// {0.01, 0.1, 1, 10, 100}. Swept one parameter at a time around `config`.
std::vector<SweepPoint> run_sensitivity(const DomainDataset& dataset,
                                        const TrainConfig& config,
                                        const std::vector<std::uint64_t>& seeds,
                                        const std::vector<std::string>& parameters);

struct RiskDiagnostics {
    double e_low = 0.0;
    double e_high = 0.0;
};

// Latent gaps behind the excess-risk view: e_low compares the operator's
// next-step low-band latent against the probe's own encoding, e_high the
// carried-over high-band latent against the probe's. The probe stands in
// for the unreachable next-step optimum.
RiskDiagnostics risk_diagnostics(const TrainOutcome& outcome,
                                 const FlatParams& probe_theta, double tau,
                                 bool bypass_decomposition = false);

// Convenience probe: fine-tune a copy of the last bank entry on the target
// domain, then run the diagnostics against it.
RiskDiagnostics risk_diagnostics_on_target(const TrainOutcome& outcome,
                                           const TrainConfig& config,
                                           const Domain& target);

// result rows: method,dataset,metric,mean,std,seed values...
void write_results_csv(const std::vector<EvalResult>& results,
                       const std::string& path);
void write_sweep_csv(const std::vector<SweepPoint>& points,
                     const std::string& path);

// Per-step trajectory summary: t, mean over dimensions of the raw, low,
// high, and one-step-reconstructed parameters (raw at t = 1, where no
// prediction exists yet).
void write_decomposition_csv(const ParameterBank& bank,
                             const KoopmanState& koopman, double tau,
                             const std::string& path);

std::vector<Domain> source_domains(const DomainDataset& dataset);
const Domain& target_domain(const DomainDataset& dataset);

}  // namespace frekoo
