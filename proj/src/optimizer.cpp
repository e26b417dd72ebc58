#include "frekoo/optimizer.hpp"

#include <cmath>

namespace frekoo {

std::size_t AdamOptimizer::register_block(Index count, double lr) {
    require(count > 0, "AdamOptimizer: block size must be positive");
    if (!(lr > 0.0)) {
        throw ConfigError("AdamOptimizer: learning rate must be positive");
    }
    Block block;
    block.m = Vector::Zero(count);
    block.v = Vector::Zero(count);
    block.lr = lr;
    blocks.push_back(std::move(block));
    return blocks.size() - 1;
}

void AdamOptimizer::update(std::size_t block_id, double* param,
                           const double* grad, Index count) {
    require(block_id < blocks.size(), "AdamOptimizer: unknown block");
    require(step_count >= 1, "AdamOptimizer: begin_step() not called");
    Block& block = blocks[block_id];
    require(count == block.m.size(),
            "AdamOptimizer: element count does not match registered block");

    const double m_corr = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double v_corr = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (Index i = 0; i < count; ++i) {
        const double g = grad[i];
        block.m(i) = beta1 * block.m(i) + (1.0 - beta1) * g;
        block.v(i) = beta2 * block.v(i) + (1.0 - beta2) * g * g;
        param[i] -= block.lr * (block.m(i) / m_corr) /
                    (std::sqrt(block.v(i) / v_corr) + eps);
    }
}

}  // namespace frekoo
