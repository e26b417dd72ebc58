#include "frekoo/mlp.hpp"

#include <cmath>
#include <random>

namespace frekoo {

Mlp Mlp::make(const std::vector<Index>& widths, Activation act, Rng& rng) {
    require(widths.size() >= 2, "Mlp::make: need at least input and output widths");
    for (Index w : widths) {
        require(w > 0, "Mlp::make: widths must be positive");
    }
    Mlp net;
    net.hidden_act = act;
    net.layers.reserve(widths.size() - 1);
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const Index fan_in = widths[i];
        const Index fan_out = widths[i + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Layer layer;
        layer.w.resize(fan_out, fan_in);
        // Row-major draw order so a fixed seed pins every coefficient.
        for (Index r = 0; r < fan_out; ++r) {
            for (Index c = 0; c < fan_in; ++c) {
                layer.w(r, c) = dist(rng);
            }
        }
        layer.b.resize(fan_out);
        for (Index r = 0; r < fan_out; ++r) {
            layer.b(r) = dist(rng);
        }
        net.layers.push_back(std::move(layer));
    }
    return net;
}

Index Mlp::param_count() const {
    Index n = 0;
    for (const Layer& layer : layers) {
        n += layer.w.size() + layer.b.size();
    }
    return n;
}

Matrix Mlp::forward(const Eigen::Ref<const Matrix>& x) const {
    Cache cache;
    return forward(x, cache);
}

Matrix Mlp::forward(const Eigen::Ref<const Matrix>& x, Cache& cache) const {
    require(x.cols() == in_dim(), "Mlp::forward: input width mismatch");
    cache.acts.clear();
    cache.acts.reserve(layers.size() + 1);
    cache.acts.push_back(x);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& layer = layers[i];
        Matrix z = cache.acts.back() * layer.w.transpose();
        z.rowwise() += layer.b.transpose();
        const bool last = i + 1 == layers.size();
        if (!last && hidden_act == Activation::Tanh) {
            z = z.array().tanh().matrix();
        }
        cache.acts.push_back(std::move(z));
    }
    return cache.acts.back();
}

Mlp::Grad Mlp::zero_grad() const {
    Grad grad;
    grad.layers.reserve(layers.size());
    for (const Layer& layer : layers) {
        Layer g;
        g.w = Matrix::Zero(layer.w.rows(), layer.w.cols());
        g.b = Vector::Zero(layer.b.size());
        grad.layers.push_back(std::move(g));
    }
    return grad;
}

Matrix Mlp::backward(const Cache& cache, const Eigen::Ref<const Matrix>& dy,
                     Grad& grad) const {
    require(cache.acts.size() == layers.size() + 1,
            "Mlp::backward: cache does not match network depth");
    require(grad.layers.size() == layers.size(),
            "Mlp::backward: grad does not match network depth");
    Matrix delta = dy;
    for (std::size_t idx = layers.size(); idx-- > 0;) {
        const Layer& layer = layers[idx];
        const bool last = idx + 1 == layers.size();
        if (!last && hidden_act == Activation::Tanh) {
            // acts[idx + 1] already holds tanh(z); d tanh = 1 - tanh^2.
            delta.array() *= 1.0 - cache.acts[idx + 1].array().square();
        }
        grad.layers[idx].w.noalias() += delta.transpose() * cache.acts[idx];
        grad.layers[idx].b += delta.colwise().sum().transpose();
        if (idx > 0) {
            delta = delta * layer.w;
        }
    }
    return delta * layers.front().w;
}

}  // namespace frekoo
