#include "frekoo/koopman.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace frekoo {

KoopmanState KoopmanState::make(Index param_dim, Index latent_dim,
                                const std::vector<Index>& enc_hidden, Rng& rng,
                                double op_init_scale) {
    require(param_dim > 0 && latent_dim > 0,
            "KoopmanState::make: dimensions must be positive");
    KoopmanState state;
    state.param_dim = param_dim;
    state.latent_dim = latent_dim;

    std::vector<Index> enc_widths;
    enc_widths.push_back(param_dim);
    enc_widths.insert(enc_widths.end(), enc_hidden.begin(), enc_hidden.end());
    enc_widths.push_back(latent_dim);
    std::vector<Index> dec_widths(enc_widths.rbegin(), enc_widths.rend());

    state.enc_low = Mlp::make(enc_widths, Activation::Tanh, rng);
    state.enc_high = Mlp::make(enc_widths, Activation::Tanh, rng);
    state.dec = Mlp::make(dec_widths, Activation::Tanh, rng);

    std::normal_distribution<double> noise(0.0, 1.0);
    state.op = Matrix::Identity(latent_dim, latent_dim);
    for (Index r = 0; r < latent_dim; ++r) {
        for (Index c = 0; c < latent_dim; ++c) {
            state.op(r, c) += op_init_scale * noise(rng);
        }
    }
    return state;
}

Matrix KoopmanState::encode_low(const Eigen::Ref<const Matrix>& theta) const {
    require(theta.cols() == param_dim, "encode_low: parameter width mismatch");
    return enc_low.forward(theta);
}

Matrix KoopmanState::encode_high(const Eigen::Ref<const Matrix>& theta) const {
    require(theta.cols() == param_dim, "encode_high: parameter width mismatch");
    return enc_high.forward(theta);
}

Matrix KoopmanState::decode(const Eigen::Ref<const Matrix>& z) const {
    require(z.cols() == latent_dim, "decode: latent width mismatch");
    return dec.forward(z);
}

Matrix KoopmanState::koopman_step(const Eigen::Ref<const Matrix>& z) const {
    require(z.cols() == latent_dim, "koopman_step: latent width mismatch");
    return z * op.transpose();
}

Matrix KoopmanState::predict_next_param(
    const Eigen::Ref<const Matrix>& theta_low,
    const Eigen::Ref<const Matrix>& theta_high) const {
    require(theta_low.rows() == theta_high.rows() &&
                theta_low.cols() == theta_high.cols(),
            "predict_next_param: band shapes differ");
    Matrix z = koopman_step(encode_low(theta_low)) + encode_high(theta_high);
    return decode(z);
}

double spectral_radius(const Eigen::Ref<const Matrix>& k) {
    require(k.rows() == k.cols() && k.rows() > 0,
            "spectral_radius: matrix must be square and non-empty");
    require(all_finite(k), "spectral_radius: matrix has non-finite entries");
    Eigen::EigenSolver<Matrix> solver(k, /*computeEigenvectors=*/false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

StabilityReport stability_bound_check(const Eigen::Ref<const Matrix>& k,
                                      const Eigen::Ref<const Vector>& e0,
                                      int h_max, double slack,
                                      double cond_threshold) {
    require(k.rows() == k.cols() && k.rows() > 0,
            "stability_bound_check: matrix must be square and non-empty");
    require(all_finite(k), "stability_bound_check: matrix has non-finite entries");
    require(e0.size() == k.rows(), "stability_bound_check: probe length mismatch");
    const double e0_norm = e0.norm();
    require(e0_norm > 0.0, "stability_bound_check: probe vector must be nonzero");
    require(h_max >= 1, "stability_bound_check: horizon must be at least 1");

    const Index m = k.rows();
    Eigen::EigenSolver<Matrix> solver(k, /*computeEigenvectors=*/true);
    StabilityReport report;
    report.rho = solver.eigenvalues().cwiseAbs().maxCoeff();

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(solver.eigenvectors());
    const double sigma_max = svd.singularValues()(0);
    const double sigma_min = svd.singularValues()(svd.singularValues().size() - 1);
    report.cond_v = sigma_min > 0.0 ? sigma_max / sigma_min
                                    : std::numeric_limits<double>::infinity();
    report.diagonalizable = report.cond_v < cond_threshold;
    report.q = report.diagonalizable ? 1 : static_cast<int>(m);

    const double rho_eff = report.diagonalizable
                               ? report.rho
                               : std::max(report.rho, 1.0);

    report.rows.reserve(static_cast<std::size_t>(h_max));
    Vector v = e0;
    for (int h = 1; h <= h_max; ++h) {
        v = k * v;
        double bound = report.cond_v * std::pow(rho_eff, h) * e0_norm;
        if (!report.diagonalizable) {
            bound *= std::pow(1.0 + h, static_cast<double>(report.q - 1));
        }
        const double measured = v.norm();
        report.rows.push_back({h, measured, bound});
        if (measured > bound * (1.0 + slack)) {
            report.violation = true;
        }
    }
    return report;
}

}  // namespace frekoo
