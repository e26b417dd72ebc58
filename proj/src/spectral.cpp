#include "frekoo/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

namespace frekoo {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Real and imaginary parts of the forward DFT weights, n_freq x T.
// re[f,t] = cos(2 pi f t / T), im[f,t] = -sin(2 pi f t / T).
void forward_weights(Index t_len, Matrix& re, Matrix& im) {
    const Index nf = num_frequencies(t_len);
    re.resize(nf, t_len);
    im.resize(nf, t_len);
    for (Index f = 0; f < nf; ++f) {
        for (Index t = 0; t < t_len; ++t) {
            const double arg = kTwoPi * static_cast<double>(f) *
                               static_cast<double>(t) / static_cast<double>(t_len);
            re(f, t) = std::cos(arg);
            im(f, t) = -std::sin(arg);
        }
    }
}

// Inverse weights mapping half-spectrum (Re, Im) back to the time domain:
// x[t] = sum_f a_re[t,f] Re(c_f) + a_im[t,f] Im(c_f). Bins other than DC
// (and Nyquist for even T) carry weight 2 from their Hermitian mirror.
void inverse_weights(Index t_len, Matrix& a_re, Matrix& a_im) {
    const Index nf = num_frequencies(t_len);
    a_re.resize(t_len, nf);
    a_im.resize(t_len, nf);
    const double inv_t = 1.0 / static_cast<double>(t_len);
    for (Index f = 0; f < nf; ++f) {
        const bool self_conjugate = (f == 0) || (t_len % 2 == 0 && f == t_len / 2);
        const double w = (self_conjugate ? 1.0 : 2.0) * inv_t;
        for (Index t = 0; t < t_len; ++t) {
            const double arg = kTwoPi * static_cast<double>(f) *
                               static_cast<double>(t) / static_cast<double>(t_len);
            a_re(t, f) = w * std::cos(arg);
            a_im(t, f) = -w * std::sin(arg);
        }
    }
}

}  // namespace

bool FrequencyMask::contains(Index f) const {
    return std::binary_search(selected.begin(), selected.end(), f);
}

Index num_frequencies(Index t) { return t / 2 + 1; }

Spectrum dft_forward(const Eigen::Ref<const Matrix>& trajectory) {
    require(trajectory.rows() >= 1 && trajectory.cols() >= 1,
            "dft_forward: trajectory must be non-empty");
    require(all_finite(trajectory), "dft_forward: trajectory has non-finite entries");

    const Index t_len = trajectory.rows();
    Matrix re, im;
    forward_weights(t_len, re, im);

    Spectrum s;
    s.t_original = t_len;
    s.coeffs.resize(re.rows(), trajectory.cols());
    s.coeffs.real() = re * trajectory;
    s.coeffs.imag() = im * trajectory;
    return s;
}

Vector spectral_magnitudes(const Spectrum& spectrum) {
    require(spectrum.coeffs.size() > 0, "spectral_magnitudes: empty spectrum");
    require(spectrum.coeffs.allFinite(),
            "spectral_magnitudes: spectrum has non-finite entries");
    return spectrum.coeffs.cwiseAbs().rowwise().mean();
}

FrequencyMask select_top_frequencies(const Eigen::Ref<const Vector>& magnitudes,
                                     double tau) {
    if (!(tau >= 0.0 && tau <= 1.0))
        throw ConfigError("select_top_frequencies: tau must lie in [0, 1], got " +
                          std::to_string(tau));
    require((magnitudes.array() >= 0.0).all(),
            "select_top_frequencies: magnitudes must be nonnegative");

    const Index nf = magnitudes.size();
    FrequencyMask mask;
    mask.tau = tau;
    mask.n_freq = nf;
    mask.q = static_cast<Index>(std::ceil(tau * static_cast<double>(nf)));
    if (mask.q == 0) {
        std::cerr << "warning: tau=" << tau
                  << " selects zero frequency bins; low band will be empty\n";
        return mask;
    }

    std::vector<Index> order(static_cast<std::size_t>(nf));
    std::iota(order.begin(), order.end(), Index{0});
    // Stable descending sort on magnitude; equal magnitudes keep index order.
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return magnitudes[a] > magnitudes[b];
    });

    mask.selected.assign(order.begin(), order.begin() + mask.q);
    std::sort(mask.selected.begin(), mask.selected.end());
    return mask;
}

Matrix idft_band(const Spectrum& spectrum, const FrequencyMask& mask,
                 bool keep_selected) {
    const Index t_len = spectrum.t_original;
    require(t_len >= 1, "idft_band: invalid spectrum length");
    require(mask.n_freq == spectrum.n_freq(),
            "idft_band: mask and spectrum bin counts differ");

    Matrix a_re, a_im;
    inverse_weights(t_len, a_re, a_im);

    Matrix masked_re = spectrum.coeffs.real();
    Matrix masked_im = spectrum.coeffs.imag();
    for (Index f = 0; f < spectrum.n_freq(); ++f) {
        if (mask.contains(f) != keep_selected) {
            masked_re.row(f).setZero();
            masked_im.row(f).setZero();
        }
    }
    return a_re * masked_re + a_im * masked_im;
}

Decomposition decompose_with_mask(const Eigen::Ref<const Matrix>& trajectory,
                                  const FrequencyMask& mask) {
    require(trajectory.rows() >= 2,
            "decompose: trajectory needs at least 2 timesteps");
    const Spectrum s = dft_forward(trajectory);
    Decomposition d;
    d.low = idft_band(s, mask, true);
    d.high = idft_band(s, mask, false);
    return d;
}

Decomposition decompose(const Eigen::Ref<const Matrix>& trajectory, double tau) {
    require(trajectory.rows() >= 2,
            "decompose: trajectory needs at least 2 timesteps");
    const Spectrum s = dft_forward(trajectory);
    const FrequencyMask mask = select_top_frequencies(spectral_magnitudes(s), tau);
    Decomposition d;
    d.low = idft_band(s, mask, true);
    d.high = idft_band(s, mask, false);
    return d;
}

Matrix band_projector(Index t, const FrequencyMask& mask, bool keep_selected) {
    require(t >= 1, "band_projector: need t >= 1");
    require(mask.n_freq == num_frequencies(t),
            "band_projector: mask bin count does not match t");

    Matrix re, im, a_re, a_im;
    forward_weights(t, re, im);
    inverse_weights(t, a_re, a_im);
    for (Index f = 0; f < mask.n_freq; ++f) {
        if (mask.contains(f) != keep_selected) {
            re.row(f).setZero();
            im.row(f).setZero();
        }
    }
    return a_re * re + a_im * im;
}

}  // namespace frekoo
