#pragma once

#include <Eigen/Core>

#include "frekoo/common.hpp"

namespace frekoo {

struct LossBreakdown {
    double task = 0.0;
    double rec = 0.0;
    double koop = 0.0;
    double reg_high = 0.0;
    double total = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
};

// Sum over t of ||z_low_seq[t+1] - z_low_pred_seq[t]||^2, where
// z_low_pred_seq[t] is the operator's one-step prediction from step t.
double loss_koop(const Eigen::Ref<const Matrix>& z_low_seq,
                 const Eigen::Ref<const Matrix>& z_low_pred_seq);

// Sum over t of ||z_high_seq[t+1] - z_high_seq[t]||^2.
double reg_high(const Eigen::Ref<const Matrix>& z_high_seq);

// Sum over t of ||theta_seq[t+1] - theta_pred_seq[t]||^2.
double loss_rec(const Eigen::Ref<const Matrix>& theta_seq,
                const Eigen::Ref<const Matrix>& theta_pred_seq);

LossBreakdown total_loss(double task, double rec, double koop, double reg,
                         double alpha, double beta, double gamma);

struct MapEquivalence {
    double r_high = 0.0;
    double neg_log_prior = 0.0;
    double constant_gap = 0.0;  // neg_log_prior - r_high / (2 sigma^2)
};

// Negative log density of the sequence under the Gaussian random walk
// z_{t+1} ~ N(z_t, sigma^2 I). The gap to R_high/(2 sigma^2) depends only
// on (T, m, sigma): (T-1) * (m/2) * ln(2 pi sigma^2).
MapEquivalence map_equivalence_check(const Eigen::Ref<const Matrix>& z_high_seq,
                                     double sigma);

}  // namespace frekoo
