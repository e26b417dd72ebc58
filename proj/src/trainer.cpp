#include "frekoo/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace frekoo {

void TrainConfig::validate() const {
    if (!(tau >= 0.0 && tau <= 1.0)) {
        throw ConfigError("TrainConfig: tau must lie in [0, 1]");
    }
    if (alpha < 0.0 || beta < 0.0 || gamma < 0.0) {
        throw ConfigError("TrainConfig: loss weights must be nonnegative");
    }
    if (!(lr_pre > 0.0 && lr_co > 0.0 && lr_ko > 0.0)) {
        throw ConfigError("TrainConfig: learning rates must be positive");
    }
    if (lr_warm < 0.0) {
        throw ConfigError("TrainConfig: lr_warm must be nonnegative");
    }
    if (warm_weight_decay < 0.0) {
        throw ConfigError("TrainConfig: warm weight decay must be nonnegative");
    }
    if (epochs < 0) {
        throw ConfigError("TrainConfig: epochs must be nonnegative");
    }
    if (latent_dim <= 0) {
        throw ConfigError("TrainConfig: latent dimension must be positive");
    }
    if (warm_epochs_first < 0 || warm_epochs_next < 0) {
        throw ConfigError("TrainConfig: warm-start epochs must be nonnegative");
    }
    if (bank_refresh_epochs < 0) {
        throw ConfigError(
            "TrainConfig: bank refresh epochs must be nonnegative");
    }
    if (head.widths.size() < 2) {
        throw ConfigError("TrainConfig: head needs input and output widths");
    }
    if (!(divergence_threshold > 0.0)) {
        throw ConfigError("TrainConfig: divergence threshold must be positive");
    }
}

std::string TrainConfig::canonical_string() const {
    std::ostringstream out;
    char buf[64];
    const auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    out << "head=";
    for (std::size_t i = 0; i < head.widths.size(); ++i) {
        out << (i ? "x" : "") << head.widths[i];
    }
    out << (head.hidden_act == Activation::Tanh ? ",tanh" : ",identity");
    out << (head.output == OutputKind::Classification ? ",classification"
                                                      : ",regression");
    out << ";tau=" << num(tau) << ";alpha=" << num(alpha)
        << ";beta=" << num(beta) << ";gamma=" << num(gamma)
        << ";lr_pre=" << num(lr_pre) << ";lr_co=" << num(lr_co)
        << ";lr_ko=" << num(lr_ko) << ";epochs=" << epochs
        << ";m=" << latent_dim << ";enc=";
    for (std::size_t i = 0; i < enc_hidden.size(); ++i) {
        out << (i ? "x" : "") << enc_hidden[i];
    }
    out << ";seed=" << seed << ";warm_first=" << warm_epochs_first
        << ";warm_next=" << warm_epochs_next << ";lr_warm=" << num(lr_warm)
        << ";wwd=" << num(warm_weight_decay)
        << ";fix_op=" << (fix_op_identity ? 1 : 0)
        << ";bypass=" << (bypass_decomposition ? 1 : 0)
        << ";retrain=" << (retrain_bank_each_epoch ? 1 : 0)
        << ";refresh=" << bank_refresh_epochs
        << ";op_init=" << num(op_init_scale)
        << ";guard=" << num(divergence_threshold);
    return out.str();
}

Index ParameterBank::param_dim() const {
    require(!thetas.empty(), "ParameterBank: empty");
    return thetas.front().values.size();
}

Matrix ParameterBank::stack() const {
    const Index t_steps = size();
    const Index d = param_dim();
    Matrix out(t_steps, d);
    for (Index t = 0; t < t_steps; ++t) {
        require(thetas[static_cast<std::size_t>(t)].values.size() == d,
                "ParameterBank: inconsistent parameter lengths");
        out.row(t) = thetas[static_cast<std::size_t>(t)].values.transpose();
    }
    return out;
}

void ParameterBank::load_rows(const Eigen::Ref<const Matrix>& rows) {
    require(rows.rows() == size() && rows.cols() == param_dim(),
            "ParameterBank: row matrix shape mismatch");
    for (Index t = 0; t < size(); ++t) {
        thetas[static_cast<std::size_t>(t)].values = rows.row(t).transpose();
    }
}

namespace {

void check_domains(const std::vector<Domain>& domains, const TaskHead& head) {
    require(domains.size() >= 2, "trainer: need at least two source domains");
    for (std::size_t t = 0; t < domains.size(); ++t) {
        const std::string where = "domain " + std::to_string(t);
        require(domains[t].x.rows() > 0, where + " is empty");
        require(domains[t].x.cols() == head.in_dim(),
                where + " feature width does not match the head");
        require(domains[t].x.rows() == domains[t].y.size(),
                where + " label count mismatch");
    }
}

FlatParams train_on_domain(const TaskHead& head, FlatParams theta,
                           const Domain& domain, int steps, double lr,
                           double weight_decay) {
    AdamOptimizer opt;
    const std::size_t block =
        opt.register_block(theta.values.size(), lr);
    Vector grad;
    for (int step = 0; step < steps; ++step) {
        const double loss = head.loss_and_grad(theta, domain.x, domain.y, grad);
        if (!std::isfinite(loss)) {
            throw TrainingDivergedError(
                step, "warm start: task loss became non-finite at step " +
                          std::to_string(step));
        }
        if (weight_decay > 0.0) {
            grad += weight_decay * theta.values;
        }
        opt.begin_step();
        opt.update(block, theta.values, grad);
    }
    return theta;
}

// Synthetic all-pass mask used when the decomposition is bypassed.
FrequencyMask full_mask(Index t_steps, double tau) {
    FrequencyMask mask;
    mask.n_freq = num_frequencies(t_steps);
    mask.tau = tau;
    mask.q = mask.n_freq;
    mask.selected.resize(static_cast<std::size_t>(mask.n_freq));
    for (Index f = 0; f < mask.n_freq; ++f) {
        mask.selected[static_cast<std::size_t>(f)] = f;
    }
    return mask;
}

FrequencyMask mask_for_epoch(const Matrix& theta, const TrainConfig& config) {
    if (config.bypass_decomposition) {
        return full_mask(theta.rows(), config.tau);
    }
    const Spectrum spectrum = dft_forward(theta);
    return select_top_frequencies(spectral_magnitudes(spectrum), config.tau);
}

}  // namespace

ParameterBank warm_start_bank(const std::vector<Domain>& domains,
                              const TrainConfig& config) {
    config.validate();
    check_domains(domains, config.head);
    const double lr = config.lr_warm > 0.0 ? config.lr_warm : config.lr_pre;
    Rng init_rng = make_rng(derive_seed(config.seed, 1));
    ParameterBank bank;
    bank.thetas.reserve(domains.size());
    for (std::size_t t = 0; t < domains.size(); ++t) {
        FlatParams start = t == 0 ? config.head.init_params(init_rng)
                                  : bank.thetas.back();
        const int steps =
            t == 0 ? config.warm_epochs_first : config.warm_epochs_next;
        bank.thetas.push_back(train_on_domain(config.head, std::move(start),
                                              domains[t], steps, lr,
                                              config.warm_weight_decay));
    }
    return bank;
}

LossBreakdown compute_loss(const std::vector<Domain>& domains,
                           const ParameterBank& bank,
                           const KoopmanState& koopman,
                           const FrequencyMask& mask, const TrainConfig& config,
                           Gradients* grads) {
    const Index t_steps = bank.size();
    const Index d = bank.param_dim();
    const Index m = koopman.latent_dim;
    require(t_steps >= 2, "compute_loss: need at least two bank entries");
    require(static_cast<Index>(domains.size()) == t_steps,
            "compute_loss: domain count does not match the bank");
    require(koopman.param_dim == d, "compute_loss: encoder width mismatch");

    const Matrix theta = bank.stack();

    Matrix p_low;
    Matrix theta_low;
    Matrix theta_high;
    if (config.bypass_decomposition) {
        theta_low = theta;
        theta_high = Matrix::Zero(t_steps, d);
    } else {
        p_low = band_projector(t_steps, mask, /*keep_selected=*/true);
        theta_low = p_low * theta;
        theta_high = theta - theta_low;
    }

    // Task term at the bank parameters, one mean loss per domain.
    double task_total = 0.0;
    Matrix bank_grad = Matrix::Zero(t_steps, d);
    for (Index t = 0; t < t_steps; ++t) {
        Vector g;
        task_total += config.head.loss_and_grad(
            bank.thetas[static_cast<std::size_t>(t)],
            domains[static_cast<std::size_t>(t)].x,
            domains[static_cast<std::size_t>(t)].y, g);
        bank_grad.row(t) = g.transpose();
    }

    Mlp::Cache cache_low, cache_high, cache_dec;
    const Matrix z_low = koopman.enc_low.forward(theta_low, cache_low);
    const Matrix z_high = koopman.enc_high.forward(theta_high, cache_high);
    const Matrix z_pred = z_low.topRows(t_steps - 1) * koopman.op.transpose();

    const double l_koop = loss_koop(z_low, z_pred);
    const double r_high_val = reg_high(z_high);

    const Matrix latent_sum = z_pred + z_high.topRows(t_steps - 1);
    const Matrix theta_pred = koopman.dec.forward(latent_sum, cache_dec);
    const double l_rec = loss_rec(theta, theta_pred);

    const LossBreakdown breakdown =
        total_loss(task_total, l_rec, l_koop, r_high_val, config.alpha,
                   config.beta, config.gamma);

    if (grads != nullptr) {
        Matrix d_theta = bank_grad;

        const Matrix diff_rec = theta_pred - theta.bottomRows(t_steps - 1);
        const Matrix d_theta_pred = 2.0 * config.alpha * diff_rec;
        d_theta.bottomRows(t_steps - 1) -= 2.0 * config.alpha * diff_rec;

        grads->dec = koopman.dec.zero_grad();
        const Matrix d_latent_sum =
            koopman.dec.backward(cache_dec, d_theta_pred, grads->dec);

        Matrix d_z_pred = d_latent_sum;
        Matrix d_z_high = Matrix::Zero(t_steps, m);
        d_z_high.topRows(t_steps - 1) += d_latent_sum;

        const Matrix diff_koop = z_pred - z_low.bottomRows(t_steps - 1);
        d_z_pred += 2.0 * config.beta * diff_koop;
        Matrix d_z_low = Matrix::Zero(t_steps, m);
        d_z_low.bottomRows(t_steps - 1) -= 2.0 * config.beta * diff_koop;

        const Matrix diff_high =
            z_high.bottomRows(t_steps - 1) - z_high.topRows(t_steps - 1);
        d_z_high.bottomRows(t_steps - 1) += 2.0 * config.gamma * diff_high;
        d_z_high.topRows(t_steps - 1) -= 2.0 * config.gamma * diff_high;

        grads->op = d_z_pred.transpose() * z_low.topRows(t_steps - 1);
        d_z_low.topRows(t_steps - 1) += d_z_pred * koopman.op;

        grads->enc_low = koopman.enc_low.zero_grad();
        const Matrix d_theta_low =
            koopman.enc_low.backward(cache_low, d_z_low, grads->enc_low);
        grads->enc_high = koopman.enc_high.zero_grad();
        const Matrix d_theta_high =
            koopman.enc_high.backward(cache_high, d_z_high, grads->enc_high);

        if (config.bypass_decomposition) {
            // theta_high is identically zero; only the low path reaches theta.
            d_theta += d_theta_low;
        } else {
            d_theta += p_low.transpose() * d_theta_low;
            d_theta += d_theta_high - p_low.transpose() * d_theta_high;
        }
        grads->bank = std::move(d_theta);
        if (config.fix_op_identity) {
            grads->op.setZero();
        }
    }
    return breakdown;
}

namespace {

// Canonical block order shared by registration and updates.
struct BlockIds {
    std::size_t bank = 0;
    std::vector<std::pair<std::size_t, std::size_t>> enc_low, enc_high, dec;
    std::size_t op = 0;
    bool has_op = false;
};

// Registers all blocks on the first call; afterwards it only recounts ids
// in the same order, so the optimizer state persists across epochs.
BlockIds ensure_registered(AdamOptimizer& opt, const ParameterBank& bank,
                           const KoopmanState& koopman,
                           const TrainConfig& config) {
    const bool fresh = opt.blocks.empty();
    BlockIds ids;
    std::size_t counter = 0;
    const auto place = [&](Index count, double lr) {
        const std::size_t id = fresh ? opt.register_block(count, lr) : counter;
        ++counter;
        return id;
    };

    ids.bank = place(bank.size() * bank.param_dim(), config.lr_pre);
    const auto place_net = [&](const Mlp& net) {
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (const Mlp::Layer& layer : net.layers) {
            const std::size_t w_id = place(layer.w.size(), config.lr_co);
            const std::size_t b_id = place(layer.b.size(), config.lr_co);
            pairs.emplace_back(w_id, b_id);
        }
        return pairs;
    };
    ids.enc_low = place_net(koopman.enc_low);
    ids.enc_high = place_net(koopman.enc_high);
    ids.dec = place_net(koopman.dec);
    if (!config.fix_op_identity) {
        ids.op = place(koopman.op.size(), config.lr_ko);
        ids.has_op = true;
    }
    require(opt.blocks.size() == counter,
            "trainer: optimizer blocks out of sync with model shapes");
    return ids;
}

void apply_mlp_update(AdamOptimizer& opt,
                      const std::vector<std::pair<std::size_t, std::size_t>>& ids,
                      Mlp& net, const Mlp::Grad& grad) {
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        opt.update(ids[i].first, net.layers[i].w, grad.layers[i].w);
        opt.update(ids[i].second, net.layers[i].b, grad.layers[i].b);
    }
}

}  // namespace

LossBreakdown train_epoch(ParameterBank& bank, KoopmanState& koopman,
                          AdamOptimizer& opt,
                          const std::vector<Domain>& domains,
                          const TrainConfig& config, int epoch) {
    Matrix theta = bank.stack();
    const FrequencyMask mask = mask_for_epoch(theta, config);

    Gradients grads;
    const LossBreakdown breakdown =
        compute_loss(domains, bank, koopman, mask, config, &grads);
    if (!std::isfinite(breakdown.total) ||
        breakdown.total > config.divergence_threshold) {
        throw TrainingDivergedError(
            epoch, "total loss " + std::to_string(breakdown.total) +
                       " breached the divergence guard at epoch " +
                       std::to_string(epoch));
    }

    const BlockIds ids = ensure_registered(opt, bank, koopman, config);
    opt.begin_step();
    opt.update(ids.bank, theta, grads.bank);
    bank.load_rows(theta);
    apply_mlp_update(opt, ids.enc_low, koopman.enc_low, grads.enc_low);
    apply_mlp_update(opt, ids.enc_high, koopman.enc_high, grads.enc_high);
    apply_mlp_update(opt, ids.dec, koopman.dec, grads.dec);
    if (ids.has_op) {
        opt.update(ids.op, koopman.op, grads.op);
    }
    return breakdown;
}

FlatParams extrapolate_target(const ParameterBank& bank,
                              const KoopmanState& koopman, double tau,
                              bool bypass_decomposition) {
    const Index t_steps = bank.size();
    require(t_steps >= 2, "extrapolate_target: need at least two bank entries");
    const Matrix theta = bank.stack();

    Matrix low_last, high_last;
    if (bypass_decomposition) {
        low_last = theta.row(t_steps - 1);
        high_last = Matrix::Zero(1, theta.cols());
    } else {
        const Spectrum spectrum = dft_forward(theta);
        const FrequencyMask mask =
            select_top_frequencies(spectral_magnitudes(spectrum), tau);
        const Matrix p_low = band_projector(t_steps, mask, true);
        const Matrix theta_low = p_low * theta;
        low_last = theta_low.row(t_steps - 1);
        high_last = theta.row(t_steps - 1) - low_last;
    }

    const Matrix z =
        koopman.koopman_step(koopman.encode_low(low_last)) +
        koopman.encode_high(high_last);
    const Matrix decoded = koopman.decode(z);

    FlatParams out;
    out.layout = bank.thetas.front().layout;
    out.values = decoded.row(0).transpose();
    return out;
}

TrainOutcome train_frekoo(const std::vector<Domain>& domains,
                          const TrainConfig& config,
                          const EpochObserver& observer) {
    config.validate();
    check_domains(domains, config.head);

    ParameterBank bank = warm_start_bank(domains, config);
    // Rebuilding the per-domain fits each epoch always reproduces the same
    // values (warm start is deterministic), so cache them once.
    Matrix warm_rows;
    if (config.retrain_bank_each_epoch || config.bank_refresh_epochs > 0) {
        warm_rows = bank.stack();
    }
    Rng koop_rng = make_rng(derive_seed(config.seed, 2));
    KoopmanState koopman =
        KoopmanState::make(bank.param_dim(), config.latent_dim,
                           config.enc_hidden, koop_rng, config.op_init_scale);
    if (config.fix_op_identity) {
        koopman.op = Matrix::Identity(config.latent_dim, config.latent_dim);
    }

    AdamOptimizer opt;
    TrainOutcome outcome;
    outcome.log.reserve(static_cast<std::size_t>(config.epochs));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (epoch > 0 && (config.retrain_bank_each_epoch ||
                          epoch <= config.bank_refresh_epochs)) {
            bank.load_rows(warm_rows);
        }
        const LossBreakdown breakdown =
            train_epoch(bank, koopman, opt, domains, config, epoch);
        outcome.log.push_back(breakdown);
        if (observer) {
            observer(epoch, bank, koopman, breakdown);
        }
    }

    outcome.final_mask = mask_for_epoch(bank.stack(), config);
    outcome.theta_next = extrapolate_target(bank, koopman, config.tau,
                                            config.bypass_decomposition);
    outcome.bank = std::move(bank);
    outcome.koopman = std::move(koopman);
    return outcome;
}

void write_train_log(const std::vector<LossBreakdown>& log,
                     const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw IngestError("cannot write '" + path + "'");
    }
    out << "epoch,task,rec,koop,reg_high,total\n";
    char buf[64];
    const auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (std::size_t i = 0; i < log.size(); ++i) {
        out << i << "," << num(log[i].task) << "," << num(log[i].rec) << ","
            << num(log[i].koop) << "," << num(log[i].reg_high) << ","
            << num(log[i].total) << "\n";
    }
}

}  // namespace frekoo
