#pragma once

#include <vector>

#include <Eigen/Core>

#include "frekoo/common.hpp"

namespace frekoo {

// Adam with per-block learning rates. Blocks are registered once (shape and
// learning rate) and addressed by the returned id; moment buffers live here
// so parameters can stay in their owning structs.
struct AdamOptimizer {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    // Updates are elementwise, so blocks track flat element counts; matrix
    // parameters pass their contiguous storage.
    struct Block {
        Vector m;
        Vector v;
        double lr;
    };

    std::vector<Block> blocks;
    long step_count = 0;

    std::size_t register_block(Index count, double lr);

    // Call once per optimization step, before the update() calls of that step.
    void begin_step() { ++step_count; }

    void update(std::size_t block_id, double* param, const double* grad,
                Index count);

    void update(std::size_t block_id, Matrix& param, const Matrix& grad) {
        require(param.rows() == grad.rows() && param.cols() == grad.cols(),
                "AdamOptimizer: gradient shape mismatch");
        update(block_id, param.data(), grad.data(), param.size());
    }
    void update(std::size_t block_id, Vector& param, const Vector& grad) {
        require(param.size() == grad.size(),
                "AdamOptimizer: gradient shape mismatch");
        update(block_id, param.data(), grad.data(), param.size());
    }
};

}  // namespace frekoo
