#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "frekoo/base_model.hpp"
#include "frekoo/common.hpp"
#include "frekoo/datasets.hpp"
#include "frekoo/koopman.hpp"
#include "frekoo/objective.hpp"
#include "frekoo/optimizer.hpp"
#include "frekoo/spectral.hpp"

namespace frekoo {

struct TrainConfig {
    TaskHead head;

    double tau = 0.9;
    double alpha = 10.0;
    double beta = 1.0;
    double gamma = 1.0;

    double lr_pre = 1e-2;  // parameter bank
    double lr_co = 1e-3;   // encoders and decoder
    double lr_ko = 1e-3;   // operator K

    int epochs = 200;
    Index latent_dim = 32;
    std::vector<Index> enc_hidden = {1024, 512, 128};
    std::uint64_t seed = 0;

    // Per-domain warm start of the bank before joint training.
    int warm_epochs_first = 300;
    int warm_epochs_next = 100;
    double lr_warm = 0.0;  // 0: use lr_pre
    // L2 pull on the warm fits. Cross-entropy keeps inflating weights long
    // after the domain is solved; a small decay keeps parameter norms in the
    // range where the coder networks respond smoothly.
    double warm_weight_decay = 0.0;

    // Hold the bank at its warm-start values for the first N epochs so the
    // coder and operator fit a stable trajectory before the bank moves.
    int bank_refresh_epochs = 0;

    // Ablation and variant switches.
    bool fix_op_identity = false;       // K = I, never updated
    bool bypass_decomposition = false;  // theta_low = theta, theta_high = 0
    bool retrain_bank_each_epoch = false;

    double op_init_scale = 1e-2;
    double divergence_threshold = 1e8;

    void validate() const;
    // Canonical text form; hashed into checkpoints and logged in manifests.
    std::string canonical_string() const;
};

struct ParameterBank {
    std::vector<FlatParams> thetas;

    Index size() const { return static_cast<Index>(thetas.size()); }
    Index param_dim() const;
    // T x D matrix, one row per domain.
    Matrix stack() const;
    void load_rows(const Eigen::Ref<const Matrix>& rows);
};

struct TrainOutcome {
    ParameterBank bank;
    KoopmanState koopman;
    FlatParams theta_next;
    std::vector<LossBreakdown> log;
    FrequencyMask final_mask;
};

// Gradients of the total loss w.r.t. every trainable quantity.
struct Gradients {
    Matrix bank;  // T x D
    Mlp::Grad enc_low;
    Mlp::Grad enc_high;
    Mlp::Grad dec;
    Matrix op;
};

// Algorithm: sequential per-domain task training. theta_1 from random init,
// each later theta_t fine-tuned starting at its predecessor.
ParameterBank warm_start_bank(const std::vector<Domain>& domains,
                              const TrainConfig& config);

// Total loss (Eq. 11 shape) under a frozen frequency mask, optionally with
// gradients. Pure in its inputs, so finite-difference checks can call it
// with perturbed parameters.
LossBreakdown compute_loss(const std::vector<Domain>& domains,
                           const ParameterBank& bank,
                           const KoopmanState& koopman,
                           const FrequencyMask& mask, const TrainConfig& config,
                           Gradients* grads);

// One joint pass: decompose with the current tau (mask frozen for this
// epoch), compute Eq. 11, take one Adam step over the three groups.
LossBreakdown train_epoch(ParameterBank& bank, KoopmanState& koopman,
                          AdamOptimizer& opt,
                          const std::vector<Domain>& domains,
                          const TrainConfig& config, int epoch);

// theta_hat over the decomposition of the final bank: decode(K phi_low + phi_high)
// at the last row.
FlatParams extrapolate_target(const ParameterBank& bank,
                              const KoopmanState& koopman, double tau,
                              bool bypass_decomposition = false);

using EpochObserver = std::function<void(
    int epoch, const ParameterBank& bank, const KoopmanState& koopman,
    const LossBreakdown& losses)>;

TrainOutcome train_frekoo(const std::vector<Domain>& domains,
                          const TrainConfig& config,
                          const EpochObserver& observer = nullptr);

// One row per epoch: epoch,task,rec,koop,reg_high,total (full precision).
void write_train_log(const std::vector<LossBreakdown>& log,
                     const std::string& path);

}  // namespace frekoo
