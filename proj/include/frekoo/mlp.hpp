#pragma once

#include <vector>

#include <Eigen/Core>

#include "frekoo/common.hpp"

namespace frekoo {

enum class Activation { Tanh, Identity };

// Fully connected network, tanh (or identity) between layers, linear output.
// Rows of the in/out matrices are samples.
struct Mlp {
    struct Layer {
        Matrix w;  // out x in
        Vector b;  // out
    };

    std::vector<Layer> layers;
    Activation hidden_act = Activation::Tanh;

    // widths = [in, hidden..., out]; weights and biases drawn from
    // U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    static Mlp make(const std::vector<Index>& widths, Activation act, Rng& rng);

    Index in_dim() const { return layers.front().w.cols(); }
    Index out_dim() const { return layers.back().w.rows(); }
    Index param_count() const;

    Matrix forward(const Eigen::Ref<const Matrix>& x) const;

    // acts[0] is the input, acts[i] the post-activation output of layer i
    // (raw affine output for the last layer).
    struct Cache {
        std::vector<Matrix> acts;
    };
    Matrix forward(const Eigen::Ref<const Matrix>& x, Cache& cache) const;

    struct Grad {
        std::vector<Layer> layers;
    };
    Grad zero_grad() const;

    // Accumulates parameter gradients into `grad` and returns dL/dx.
    Matrix backward(const Cache& cache, const Eigen::Ref<const Matrix>& dy,
                    Grad& grad) const;
};

}  // namespace frekoo
