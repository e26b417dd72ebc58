#include "frekoo/objective.hpp"

#include <cmath>

namespace frekoo {

namespace {

double shifted_sq_diff(const Eigen::Ref<const Matrix>& target_seq,
                       const Eigen::Ref<const Matrix>& pred_seq,
                       const char* what) {
    require(target_seq.rows() >= 2,
            std::string(what) + ": need at least two steps");
    require(pred_seq.rows() == target_seq.rows() - 1,
            std::string(what) + ": prediction count must be T-1");
    require(pred_seq.cols() == target_seq.cols(),
            std::string(what) + ": width mismatch");
    double total = 0.0;
    for (Index t = 0; t + 1 < target_seq.rows(); ++t) {
        total += (target_seq.row(t + 1) - pred_seq.row(t)).squaredNorm();
    }
    return total;
}

}  // namespace

double loss_koop(const Eigen::Ref<const Matrix>& z_low_seq,
                 const Eigen::Ref<const Matrix>& z_low_pred_seq) {
    return shifted_sq_diff(z_low_seq, z_low_pred_seq, "loss_koop");
}

double reg_high(const Eigen::Ref<const Matrix>& z_high_seq) {
    require(z_high_seq.rows() >= 2, "reg_high: need at least two steps");
    double total = 0.0;
    for (Index t = 0; t + 1 < z_high_seq.rows(); ++t) {
        total += (z_high_seq.row(t + 1) - z_high_seq.row(t)).squaredNorm();
    }
    return total;
}

double loss_rec(const Eigen::Ref<const Matrix>& theta_seq,
                const Eigen::Ref<const Matrix>& theta_pred_seq) {
    return shifted_sq_diff(theta_seq, theta_pred_seq, "loss_rec");
}

LossBreakdown total_loss(double task, double rec, double koop, double reg,
                         double alpha, double beta, double gamma) {
    if (alpha < 0.0 || beta < 0.0 || gamma < 0.0) {
        throw ConfigError("total_loss: loss weights must be nonnegative");
    }
    LossBreakdown out;
    out.task = task;
    out.rec = rec;
    out.koop = koop;
    out.reg_high = reg;
    out.alpha = alpha;
    out.beta = beta;
    out.gamma = gamma;
    out.total = task + alpha * rec + beta * koop + gamma * reg;
    return out;
}

MapEquivalence map_equivalence_check(const Eigen::Ref<const Matrix>& z_high_seq,
                                     double sigma) {
    if (!(sigma > 0.0)) {
        throw ConfigError("map_equivalence_check: sigma must be positive");
    }
    const Index t_steps = z_high_seq.rows();
    const Index m = z_high_seq.cols();
    require(t_steps >= 2, "map_equivalence_check: need at least two steps");

    MapEquivalence out;
    out.r_high = reg_high(z_high_seq);

    // -log prod_t N(z_{t+1}; z_t, sigma^2 I), written out per transition so
    // the quadratic term and the normalizer stay separate routes.
    const double kTwoPi = 6.283185307179586476925286766559;
    double neg_log = 0.0;
    for (Index t = 0; t + 1 < t_steps; ++t) {
        const double sq = (z_high_seq.row(t + 1) - z_high_seq.row(t)).squaredNorm();
        neg_log += sq / (2.0 * sigma * sigma) +
                   0.5 * static_cast<double>(m) * std::log(kTwoPi * sigma * sigma);
    }
    out.neg_log_prior = neg_log;
    out.constant_gap = neg_log - out.r_high / (2.0 * sigma * sigma);
    return out;
}

}  // namespace frekoo
