#include "frekoo/base_model.hpp"

#include <cmath>

namespace frekoo {

Index Layout::total_size() const {
    Index n = 0;
    for (const TensorSpec& spec : tensors) {
        n += spec.size();
    }
    return n;
}

void Layout::validate() const {
    require(!tensors.empty(), "Layout: no tensors declared");
    Index expected_offset = 0;
    for (const TensorSpec& spec : tensors) {
        require(spec.rows > 0 && spec.cols > 0,
                "Layout: tensor '" + spec.name + "' has a non-positive shape");
        require(spec.offset == expected_offset,
                "Layout: tensor '" + spec.name + "' is not contiguous");
        expected_offset += spec.size();
    }
}

Index TaskHead::param_dim() const {
    return layout().total_size();
}

Layout TaskHead::layout() const {
    require(widths.size() >= 2, "TaskHead: need at least input and output widths");
    Layout out;
    Index offset = 0;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const Index fan_in = widths[i];
        const Index fan_out = widths[i + 1];
        const std::string idx = std::to_string(i);
        out.tensors.push_back({"w" + idx, fan_out, fan_in, offset});
        offset += fan_out * fan_in;
        out.tensors.push_back({"b" + idx, fan_out, 1, offset});
        offset += fan_out;
    }
    out.validate();
    return out;
}

FlatParams TaskHead::init_params(Rng& rng) const {
    return flatten(Mlp::make(widths, hidden_act, rng));
}

Mlp TaskHead::unflatten(const FlatParams& theta) const {
    theta.layout.validate();
    require(theta.values.size() == theta.layout.total_size(),
            "unflatten: flat vector length does not match layout");
    Mlp net;
    net.hidden_act = hidden_act;
    net.layers.reserve(widths.size() - 1);
    std::size_t spec_idx = 0;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        require(spec_idx + 2 <= theta.layout.tensors.size(),
                "unflatten: layout is missing tensors");
        const TensorSpec& w_spec = theta.layout.tensors[spec_idx++];
        const TensorSpec& b_spec = theta.layout.tensors[spec_idx++];
        require(w_spec.rows == widths[i + 1] && w_spec.cols == widths[i],
                "unflatten: weight shape does not match head widths");
        require(b_spec.rows == widths[i + 1] && b_spec.cols == 1,
                "unflatten: bias shape does not match head widths");
        Mlp::Layer layer;
        // Row-major within each weight slice, matching flatten below.
        layer.w = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                 Eigen::Dynamic, Eigen::RowMajor>>(
            theta.values.data() + w_spec.offset, w_spec.rows, w_spec.cols);
        layer.b = theta.values.segment(b_spec.offset, b_spec.rows);
        net.layers.push_back(std::move(layer));
    }
    require(spec_idx == theta.layout.tensors.size(),
            "unflatten: layout declares extra tensors");
    return net;
}

FlatParams TaskHead::flatten(const Mlp& net) const {
    require(net.layers.size() + 1 == widths.size(),
            "flatten: network depth does not match head widths");
    FlatParams out;
    out.layout = layout();
    out.values.resize(out.layout.total_size());
    std::size_t spec_idx = 0;
    for (const Mlp::Layer& layer : net.layers) {
        const TensorSpec& w_spec = out.layout.tensors[spec_idx++];
        const TensorSpec& b_spec = out.layout.tensors[spec_idx++];
        require(layer.w.rows() == w_spec.rows && layer.w.cols() == w_spec.cols,
                "flatten: weight shape does not match layout");
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>(
            out.values.data() + w_spec.offset, w_spec.rows, w_spec.cols) = layer.w;
        out.values.segment(b_spec.offset, b_spec.rows) = layer.b;
    }
    return out;
}

Matrix TaskHead::forward(const FlatParams& theta,
                         const Eigen::Ref<const Matrix>& x) const {
    require(x.cols() == in_dim(), "TaskHead::forward: feature width mismatch");
    return unflatten(theta).forward(x);
}

double TaskHead::loss_and_grad(const FlatParams& theta,
                               const Eigen::Ref<const Matrix>& x,
                               const Eigen::Ref<const Vector>& labels,
                               Vector& grad) const {
    require(x.rows() == labels.size(), "loss_and_grad: batch sizes differ");
    require(x.rows() > 0, "loss_and_grad: empty batch");
    const Mlp net = unflatten(theta);
    Mlp::Cache cache;
    const Matrix out = net.forward(x, cache);
    const Index n = x.rows();

    double loss = 0.0;
    Matrix dout(out.rows(), out.cols());
    if (output == OutputKind::Classification) {
        loss = cross_entropy(out, labels);
        for (Index i = 0; i < n; ++i) {
            const double row_max = out.row(i).maxCoeff();
            Eigen::RowVectorXd p = (out.row(i).array() - row_max).exp();
            p /= p.sum();
            dout.row(i) = p;
            dout(i, static_cast<Index>(labels(i))) -= 1.0;
        }
        dout /= static_cast<double>(n);
    } else {
        require(out.cols() == 1, "loss_and_grad: regression head must be scalar");
        loss = mean_squared_error(out, labels);
        dout = 2.0 * (out.col(0) - labels) / static_cast<double>(n);
    }

    Mlp::Grad net_grad = net.zero_grad();
    net.backward(cache, dout, net_grad);
    Mlp grad_holder;
    grad_holder.hidden_act = hidden_act;
    grad_holder.layers = std::move(net_grad.layers);
    grad = flatten(grad_holder).values;
    return loss;
}

double cross_entropy(const Eigen::Ref<const Matrix>& logits,
                     const Eigen::Ref<const Vector>& labels) {
    require(logits.rows() == labels.size(), "cross_entropy: batch sizes differ");
    require(logits.rows() > 0, "cross_entropy: empty batch");
    double total = 0.0;
    for (Index i = 0; i < logits.rows(); ++i) {
        const Index label = static_cast<Index>(labels(i));
        require(label >= 0 && label < logits.cols(),
                "cross_entropy: label out of range");
        const double row_max = logits.row(i).maxCoeff();
        const double lse =
            row_max + std::log((logits.row(i).array() - row_max).exp().sum());
        total += lse - logits(i, label);
    }
    return total / static_cast<double>(logits.rows());
}

double mean_squared_error(const Eigen::Ref<const Matrix>& predictions,
                          const Eigen::Ref<const Vector>& targets) {
    require(predictions.cols() == 1, "mean_squared_error: expected one column");
    require(predictions.rows() == targets.size(),
            "mean_squared_error: batch sizes differ");
    require(predictions.rows() > 0, "mean_squared_error: empty batch");
    return (predictions.col(0) - targets).squaredNorm() /
           static_cast<double>(predictions.rows());
}

double task_loss(const Eigen::Ref<const Matrix>& predictions,
                 const Eigen::Ref<const Vector>& labels, OutputKind kind) {
    return kind == OutputKind::Classification
               ? cross_entropy(predictions, labels)
               : mean_squared_error(predictions, labels);
}

double misclassification_percent(const Eigen::Ref<const Matrix>& logits,
                                 const Eigen::Ref<const Vector>& labels) {
    require(logits.rows() == labels.size(),
            "misclassification_percent: batch sizes differ");
    require(logits.rows() > 0, "misclassification_percent: empty batch");
    Index wrong = 0;
    for (Index i = 0; i < logits.rows(); ++i) {
        Index argmax = 0;
        for (Index c = 1; c < logits.cols(); ++c) {
            if (logits(i, c) > logits(i, argmax)) {
                argmax = c;
            }
        }
        if (argmax != static_cast<Index>(labels(i))) {
            ++wrong;
        }
    }
    return 100.0 * static_cast<double>(wrong) /
           static_cast<double>(logits.rows());
}

double mean_absolute_error(const Eigen::Ref<const Matrix>& predictions,
                           const Eigen::Ref<const Vector>& targets) {
    require(predictions.cols() == 1, "mean_absolute_error: expected one column");
    require(predictions.rows() == targets.size(),
            "mean_absolute_error: batch sizes differ");
    require(predictions.rows() > 0, "mean_absolute_error: empty batch");
    return (predictions.col(0) - targets).cwiseAbs().mean();
}

}  // namespace frekoo
