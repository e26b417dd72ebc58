#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "frekoo/base_model.hpp"
#include "oracles.hpp"

using namespace frekoo;

namespace {

TaskHead moons_head() {
    TaskHead head;
    head.widths = {2, 50, 2};
    head.hidden_act = Activation::Tanh;
    head.output = OutputKind::Classification;
    return head;
}

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix out(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
            out(r, c) = dist(rng);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("TaskHead: layout covers the flat vector contiguously") {
    const TaskHead head = moons_head();
    // 2*50 + 50 + 50*2 + 2 = 252, the trajectory width used throughout.
    CHECK(head.param_dim() == 252);
    const Layout layout = head.layout();
    CHECK(layout.tensors.size() == 4);
    CHECK(layout.total_size() == 252);
    Index offset = 0;
    for (const TensorSpec& spec : layout.tensors) {
        CHECK(spec.offset == offset);
        offset += spec.size();
    }
    CHECK(layout.tensors[0].name == "w0");
    CHECK(layout.tensors[1].name == "b0");
    CHECK(layout.tensors[1].cols == 1);
}

TEST_CASE("TaskHead: flatten/unflatten round trip is bitwise") {
    const TaskHead head = moons_head();
    Rng rng = make_rng(5);
    const FlatParams theta = head.init_params(rng);
    CHECK(theta.values.size() == 252);

    const Mlp net = head.unflatten(theta);
    REQUIRE(net.layers.size() == 2);
    CHECK(net.layers[0].w.rows() == 50);
    CHECK(net.layers[0].w.cols() == 2);
    CHECK(net.layers[1].w.rows() == 2);
    CHECK(net.layers[1].w.cols() == 50);

    const FlatParams back = head.flatten(net);
    CHECK((back.values - theta.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("TaskHead: each flat entry maps to exactly one tensor entry") {
    const TaskHead head = moons_head();
    Rng rng = make_rng(7);
    FlatParams theta = head.init_params(rng);
    const Mlp before = head.unflatten(theta);
    // Perturb one flat entry inside w1 and confirm exactly one tensor entry moves.
    const Index idx = head.layout().tensors[2].offset + 3;
    theta.values(idx) += 1.0;
    const Mlp after = head.unflatten(theta);
    CHECK((after.layers[0].w - before.layers[0].w).cwiseAbs().maxCoeff() == 0.0);
    CHECK((after.layers[0].b - before.layers[0].b).cwiseAbs().maxCoeff() == 0.0);
    CHECK((after.layers[1].b - before.layers[1].b).cwiseAbs().maxCoeff() == 0.0);
    const Matrix dw = (after.layers[1].w - before.layers[1].w).cwiseAbs();
    CHECK(dw.maxCoeff() == 1.0);
    CHECK(dw.sum() == 1.0);
}

TEST_CASE("TaskHead::forward: matches the unflattened network") {
    const TaskHead head = moons_head();
    Rng rng = make_rng(9);
    const FlatParams theta = head.init_params(rng);
    const Matrix x = random_matrix(17, 2, 10);
    const Matrix logits = head.forward(theta, x);
    CHECK(logits.rows() == 17);
    CHECK(logits.cols() == 2);
    const Matrix direct = head.unflatten(theta).forward(x);
    CHECK((logits - direct).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("TaskHead::forward: zero parameters give zero logits") {
    const TaskHead head = moons_head();
    FlatParams theta;
    theta.layout = head.layout();
    theta.values = Vector::Zero(head.param_dim());
    const Matrix x = random_matrix(5, 2, 11);
    CHECK(head.forward(theta, x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cross_entropy: uniform logits give ln(num_classes)") {
    Matrix logits = Matrix::Zero(4, 2);
    Vector labels(4);
    labels << 0, 1, 0, 1;
    CHECK(cross_entropy(logits, labels) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("cross_entropy: hand-computed two-sample case") {
    Matrix logits(2, 3);
    logits << 2.0, 0.0, -1.0,
              0.5, 0.5, 0.5;
    Vector labels(2);
    labels << 0, 2;
    // sample 0: -2 + ln(e^2 + 1 + e^-1)
    const double l0 = -2.0 + std::log(std::exp(2.0) + 1.0 + std::exp(-1.0));
    const double l1 = std::log(3.0);
    CHECK(cross_entropy(logits, labels) ==
          doctest::Approx(0.5 * (l0 + l1)).epsilon(1e-12));
}

TEST_CASE("cross_entropy: invariant to a per-row logit shift") {
    const Matrix logits = random_matrix(12, 4, 13);
    Vector labels(12);
    Rng rng = make_rng(14);
    std::uniform_int_distribution<int> cls(0, 3);
    for (Index i = 0; i < 12; ++i) {
        labels(i) = cls(rng);
    }
    Matrix shifted = logits;
    shifted.array() += 1234.5;  // same shift in every entry of a row
    CHECK(cross_entropy(logits, labels) ==
          doctest::Approx(cross_entropy(shifted, labels)).epsilon(1e-9));
    // Large magnitudes must not overflow thanks to the row-max trick.
    Matrix huge = logits;
    huge.array() += 5000.0;
    CHECK(std::isfinite(cross_entropy(huge, labels)));
}

TEST_CASE("cross_entropy: rejects out-of-range labels") {
    const Matrix logits = Matrix::Zero(2, 2);
    Vector labels(2);
    labels << 0, 2;
    CHECK_THROWS_AS(cross_entropy(logits, labels), InvalidInputError);
}

TEST_CASE("mean_squared_error and mean_absolute_error: hand cases") {
    Matrix pred(3, 1);
    pred << 1.0, 2.0, 3.0;
    Vector target(3);
    target << 1.0, 4.0, 0.0;
    // squared: (0 + 4 + 9) / 3
    CHECK(mean_squared_error(pred, target) ==
          doctest::Approx(13.0 / 3.0).epsilon(1e-12));
    // absolute: (0 + 2 + 3) / 3
    CHECK(mean_absolute_error(pred, target) ==
          doctest::Approx(5.0 / 3.0).epsilon(1e-12));
    CHECK(mean_squared_error(pred, pred.col(0)) == 0.0);
}

TEST_CASE("task_loss: dispatches on output kind") {
    Matrix pred(2, 1);
    pred << 0.5, -0.5;
    Vector target(2);
    target << 0.0, 0.0;
    CHECK(task_loss(pred, target, OutputKind::Regression) ==
          doctest::Approx(0.25).epsilon(1e-12));
    Matrix logits = Matrix::Zero(2, 2);
    CHECK(task_loss(logits, target, OutputKind::Classification) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("misclassification_percent: counts argmax disagreements") {
    Matrix logits(4, 2);
    logits << 2.0, 1.0,   // argmax 0
              0.0, 3.0,   // argmax 1
              1.0, 1.0,   // tie, resolves to class 0
              -1.0, -2.0; // argmax 0
    Vector labels(4);
    labels << 0, 1, 1, 1;
    // rows 2 and 3 are wrong
    CHECK(misclassification_percent(logits, labels) ==
          doctest::Approx(50.0).epsilon(1e-12));
    Vector all_zero(4);
    all_zero << 0, 1, 0, 0;
    CHECK(misclassification_percent(logits, all_zero) == 0.0);
}

TEST_CASE("loss_and_grad: classification gradient matches central differences") {
    TaskHead head;
    head.widths = {3, 6, 4};
    head.hidden_act = Activation::Tanh;
    head.output = OutputKind::Classification;
    Rng rng = make_rng(21);
    FlatParams theta = head.init_params(rng);
    const Matrix x = random_matrix(9, 3, 22);
    Vector labels(9);
    std::uniform_int_distribution<int> cls(0, 3);
    for (Index i = 0; i < 9; ++i) {
        labels(i) = cls(rng);
    }

    Vector grad;
    const double loss = head.loss_and_grad(theta, x, labels, grad);
    CHECK(loss == doctest::Approx(cross_entropy(head.forward(theta, x), labels))
                      .epsilon(1e-12));
    REQUIRE(grad.size() == head.param_dim());

    for (Index i = 0; i < head.param_dim(); ++i) {
        const double fd = oracles::central_diff(
            [&](double v) {
                FlatParams probe = theta;
                probe.values(i) = v;
                return cross_entropy(head.forward(probe, x), labels);
            },
            theta.values(i), 1e-5);
        CHECK(grad(i) == doctest::Approx(fd).epsilon(1e-4));
    }
}

TEST_CASE("loss_and_grad: regression gradient matches central differences") {
    TaskHead head;
    head.widths = {4, 5, 1};
    head.hidden_act = Activation::Tanh;
    head.output = OutputKind::Regression;
    Rng rng = make_rng(25);
    FlatParams theta = head.init_params(rng);
    const Matrix x = random_matrix(7, 4, 26);
    const Vector targets = random_matrix(7, 1, 27).col(0);

    Vector grad;
    const double loss = head.loss_and_grad(theta, x, targets, grad);
    CHECK(loss ==
          doctest::Approx(mean_squared_error(head.forward(theta, x), targets))
              .epsilon(1e-12));

    for (Index i = 0; i < head.param_dim(); ++i) {
        const double fd = oracles::central_diff(
            [&](double v) {
                FlatParams probe = theta;
                probe.values(i) = v;
                return mean_squared_error(head.forward(probe, x), targets);
            },
            theta.values(i), 1e-5);
        CHECK(grad(i) == doctest::Approx(fd).epsilon(1e-4));
    }
}

TEST_CASE("Layout::validate: rejects gaps and zero-size tensors") {
    Layout layout;
    layout.tensors.push_back({"w0", 2, 3, 0});
    layout.tensors.push_back({"b0", 2, 1, 6});
    CHECK_NOTHROW(layout.validate());

    Layout gap = layout;
    gap.tensors[1].offset = 7;
    CHECK_THROWS_AS(gap.validate(), InvalidInputError);

    Layout zero = layout;
    zero.tensors[0].rows = 0;
    CHECK_THROWS_AS(zero.validate(), InvalidInputError);
}
