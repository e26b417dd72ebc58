#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>

#include "frekoo/common.hpp"

namespace frekoo {

// Half-spectrum of a real T x D trajectory, one column per parameter
// dimension. Forward transform is the unnormalized sum
// coeffs[f,d] = sum_t traj[t,d] * exp(-i 2 pi f t / T), f = 0 .. floor(T/2).
struct Spectrum {
    Eigen::MatrixXcd coeffs;  // n_freq x D
    Index t_original = 0;

    Index n_freq() const { return coeffs.rows(); }
    Index dims() const { return coeffs.cols(); }
};

// Top-q frequency bins by averaged magnitude. `selected` is kept sorted
// ascending; ranking ties break toward the lower bin index.
struct FrequencyMask {
    std::vector<Index> selected;
    Index q = 0;
    double tau = 0.0;
    Index n_freq = 0;

    bool contains(Index f) const;
};

// Time-domain band pair with low + high == input (up to roundoff).
struct Decomposition {
    Matrix low;
    Matrix high;
};

Index num_frequencies(Index t);

Spectrum dft_forward(const Eigen::Ref<const Matrix>& trajectory);

// M_f = mean over dimensions of |coeffs[f,d]|.
Vector spectral_magnitudes(const Spectrum& spectrum);

// q = ceil(tau * n_freq); emits a warning when q == 0 (tau == 0).
FrequencyMask select_top_frequencies(const Eigen::Ref<const Vector>& magnitudes,
                                     double tau);

// Inverse transform of the masked half-spectrum, scaled 1/T with Hermitian
// symmetry so the output is real. keep_selected toggles band vs complement.
Matrix idft_band(const Spectrum& spectrum, const FrequencyMask& mask,
                 bool keep_selected);

Decomposition decompose(const Eigen::Ref<const Matrix>& trajectory, double tau);
Decomposition decompose_with_mask(const Eigen::Ref<const Matrix>& trajectory,
                                  const FrequencyMask& mask);

// T x T matrix P with P * traj == the band component of traj. Used both as
// a second algebraic route in tests and as the adjoint in backprop (band
// projections on the half-spectrum are symmetric once Hermitian symmetry is
// folded in).
Matrix band_projector(Index t, const FrequencyMask& mask, bool keep_selected);

}  // namespace frekoo
