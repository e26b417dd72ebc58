#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "frekoo/common.hpp"
#include "frekoo/mlp.hpp"

namespace frekoo {

struct TensorSpec {
    std::string name;
    Index rows = 0;
    Index cols = 0;  // 1 for bias vectors
    Index offset = 0;

    Index size() const { return rows * cols; }
};

struct Layout {
    std::vector<TensorSpec> tensors;

    Index total_size() const;
    void validate() const;  // contiguous, non-overlapping, positive shapes
};

// One domain's model parameters as a flat vector plus the layout that maps
// slices back to layer tensors.
struct FlatParams {
    Vector values;
    Layout layout;
};

enum class OutputKind { Classification, Regression };

// Architecture of the per-domain task network. The same head is shared by
// every domain; only the flat parameter vector differs.
struct TaskHead {
    std::vector<Index> widths;  // [in, hidden..., out]
    Activation hidden_act = Activation::Tanh;
    OutputKind output = OutputKind::Classification;

    Index in_dim() const { return widths.front(); }
    Index out_dim() const { return widths.back(); }
    Index param_dim() const;
    Layout layout() const;

    FlatParams init_params(Rng& rng) const;

    Mlp unflatten(const FlatParams& theta) const;
    FlatParams flatten(const Mlp& net) const;

    // Logits (classification) or raw outputs (regression), one row per sample.
    Matrix forward(const FlatParams& theta,
                   const Eigen::Ref<const Matrix>& x) const;

    // Mean task loss over the batch and its gradient w.r.t. the flat
    // parameters. labels: class indices (classification) or targets
    // (regression, one column).
    double loss_and_grad(const FlatParams& theta,
                         const Eigen::Ref<const Matrix>& x,
                         const Eigen::Ref<const Vector>& labels,
                         Vector& grad) const;
};

// Mean cross-entropy of logits against integer class labels.
double cross_entropy(const Eigen::Ref<const Matrix>& logits,
                     const Eigen::Ref<const Vector>& labels);

// Mean squared error of one-column predictions against targets.
double mean_squared_error(const Eigen::Ref<const Matrix>& predictions,
                          const Eigen::Ref<const Vector>& targets);

double task_loss(const Eigen::Ref<const Matrix>& predictions,
                 const Eigen::Ref<const Vector>& labels, OutputKind kind);

// Percent of samples whose argmax logit disagrees with the label; argmax
// ties resolve to the lowest class index.
double misclassification_percent(const Eigen::Ref<const Matrix>& logits,
                                 const Eigen::Ref<const Vector>& labels);

double mean_absolute_error(const Eigen::Ref<const Matrix>& predictions,
                           const Eigen::Ref<const Vector>& targets);

}  // namespace frekoo
