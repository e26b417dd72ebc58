#pragma once

#include <vector>

#include <Eigen/Core>

#include "frekoo/common.hpp"
#include "frekoo/mlp.hpp"

namespace frekoo {

// Latent linear-dynamics block: two encoders (one per band), a shared
// decoder, and the square operator K acting on the low-band latents.
struct KoopmanState {
    Mlp enc_low;
    Mlp enc_high;
    Mlp dec;
    Matrix op;  // m x m
    Index latent_dim = 0;
    Index param_dim = 0;

    // Encoders map param_dim -> hidden... -> latent_dim, the decoder the
    // reverse. With identity_base, K starts near the identity:
    // I + op_init_scale * N(0, 1). Without it K is pure noise,
    // op_init_scale * N(0, 1), so the operator carries signal from the first
    // epoch instead of hiding behind a no-op.
    static KoopmanState make(Index param_dim, Index latent_dim,
                             const std::vector<Index>& enc_hidden, Rng& rng,
                             double op_init_scale = 1e-2,
                             bool identity_base = true);

    Matrix encode_low(const Eigen::Ref<const Matrix>& theta) const;
    Matrix encode_high(const Eigen::Ref<const Matrix>& theta) const;
    Matrix decode(const Eigen::Ref<const Matrix>& z) const;
    Matrix koopman_step(const Eigen::Ref<const Matrix>& z) const;

    // decode(K * enc_low(theta_low) + enc_high(theta_high)), rowwise.
    Matrix predict_next_param(const Eigen::Ref<const Matrix>& theta_low,
                              const Eigen::Ref<const Matrix>& theta_high) const;
};

// Largest eigenvalue modulus of a square matrix.
double spectral_radius(const Eigen::Ref<const Matrix>& k);

struct StabilityReport {
    double rho = 0.0;
    double cond_v = 0.0;  // condition number of the eigenvector matrix
    bool diagonalizable = false;
    int q = 1;  // Jordan-size exponent used in the bound; m when defective
    struct Row {
        int horizon;
        double measured;  // ||K^h e0||
        double bound;
    };
    std::vector<Row> rows;
    bool violation = false;  // any measured > bound * (1 + slack)
};

// Tracks ||K^h e0|| for h = 1..h_max against the envelope implied by the
// eigenstructure of K: cond_v * rho^h * ||e0|| when K is diagonalizable
// (eigenvector conditioning below `cond_threshold`), otherwise the
// polynomial fallback cond_v * (1+h)^(m-1) * max(rho,1)^h * ||e0||.
StabilityReport stability_bound_check(const Eigen::Ref<const Matrix>& k,
                                      const Eigen::Ref<const Vector>& e0,
                                      int h_max, double slack = 1e-8,
                                      double cond_threshold = 1e8);

}  // namespace frekoo
