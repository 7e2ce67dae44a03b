#include <doctest.h>

#include <cmath>
#include <limits>

#include "kol/errors.hpp"
#include "kol/metrics.hpp"
#include "kol/ops.hpp"
#include "kol/tensor_ops.hpp"
#include "kol/train.hpp"
#include "oracles.hpp"

using namespace kol;

namespace {

void check_loss_gradient(const LossFn& loss, const Tensor& pred, const Tensor& target) {
  const Tensor g = loss(pred, target).grad;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    Tensor p = pred, q = pred;
    p[i] += 1e-6;
    q[i] -= 1e-6;
    const double fd = (loss(p, target).value - loss(q, target).value) / 2e-6;
    CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6).scale(1e-6));
  }
}

// y = A theta with one fixed design matrix per example
struct LeastSquares {
  Graph graph;
  std::vector<Example> data;
  std::array<double, 2> optimum{};
};

LeastSquares least_squares(std::size_t examples, std::uint64_t seed) {
  LeastSquares ls;
  const NodeId a = ls.graph.input("A");
  const NodeId theta = ls.graph.parameter("theta", Tensor({2, 1}));
  ls.graph.set_output(ls.graph.apply(ops::matmul(), {a, theta}));
  double ata[2][2] = {{0, 0}, {0, 0}}, atb[2] = {0, 0};
  for (std::size_t e = 0; e < examples; ++e) {
    const Tensor m = oracle::random_tensor({4, 2}, seed + 2 * e);
    const Tensor b = oracle::random_tensor({4, 1}, seed + 2 * e + 1);
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t i = 0; i < 2; ++i) {
        atb[i] += m.at(r, i) * b[r];
        for (std::size_t j = 0; j < 2; ++j) ata[i][j] += m.at(r, i) * m.at(r, j);
      }
    }
    ls.data.push_back({{{"A", m}}, b});
  }
  const double det = ata[0][0] * ata[1][1] - ata[0][1] * ata[1][0];
  ls.optimum = {(ata[1][1] * atb[0] - ata[0][1] * atb[1]) / det, (ata[0][0] * atb[1] - ata[1][0] * atb[0]) / det};
  return ls;
}

}  // namespace

TEST_CASE("mean squared error values and gradient") {
  const Tensor a = oracle::random_tensor({3, 4}, 1);
  CHECK(loss_mse(a, a).value == 0.0);
  Tensor b = a;
  for (std::size_t i = 0; i < b.size(); ++i) b[i] -= 2.0;
  CHECK(loss_mse(a, b).value == doctest::Approx(4.0));
  check_loss_gradient(loss_mse, a, oracle::random_tensor({3, 4}, 2));
  CHECK_THROWS_AS(loss_mse(a, Tensor({4, 3})), ArgumentError);
}

TEST_CASE("soft Dice loss values and gradient") {
  Tensor mask({6, 6});
  for (std::size_t i = 0; i < 12; ++i) mask[i * 3] = 1.0;
  CHECK(loss_dice(mask, mask).value < 1e-5);
  CHECK(loss_dice(Tensor({6, 6}), mask).value == doctest::Approx(1.0).epsilon(1e-6));
  check_loss_gradient([](const Tensor& p, const Tensor& m) { return loss_dice(p, m); },
                      oracle::random_tensor({6, 6}, 3, 0.0, 1.0), mask);
}

TEST_CASE("ROC-AUC and Dice coefficient") {
  const Tensor labels({6}, std::vector<double>{0, 0, 0, 1, 1, 1});
  CHECK(roc_auc(Tensor({6}, std::vector<double>{0.1, 0.2, 0.3, 0.7, 0.8, 0.9}), labels) == 1.0);
  CHECK(roc_auc(Tensor({6}, std::vector<double>{0.9, 0.8, 0.7, 0.3, 0.2, 0.1}), labels) == 0.0);
  CHECK(roc_auc(Tensor({6}, 0.5), labels) == 0.5);
  // one inverted pair out of nine
  CHECK(roc_auc(Tensor({6}, std::vector<double>{0.1, 0.2, 0.75, 0.7, 0.8, 0.9}), labels) == doctest::Approx(8.0 / 9.0));
  CHECK_THROWS_AS(roc_auc(Tensor({3}, 0.5), Tensor({3}, 1.0)), ArgumentError);

  CHECK(dice_coefficient(labels, labels) == 1.0);
  CHECK(dice_coefficient(Tensor({6}), Tensor({6})) == 1.0);
  CHECK(dice_coefficient(Tensor({6}, std::vector<double>{0, 0, 1, 1, 0, 0}), labels) == doctest::Approx(0.4));
  CHECK(rmse(Tensor({4}, 1.0), Tensor({4}, 3.0)) == doctest::Approx(2.0));
}

TEST_CASE("optimizer steps follow learning rates and scales") {
  for (OptimizerKind kind : {OptimizerKind::sgd, OptimizerKind::momentum, OptimizerKind::adam}) {
    CAPTURE(to_string(kind));
    LeastSquares ls = least_squares(1, 4);
    const Tensor before = ls.graph.parameter_value("theta");
    Gradients g{{"theta", Tensor({2, 1}, std::vector<double>{0.5, -1.0})}};
    OptimizerConfig oc;
    oc.kind = kind;
    oc.learning_rate = 0.0;
    Optimizer zero(oc);
    zero.step(ls.graph, g);
    CHECK(ls.graph.parameter_value("theta").identical(before));

    oc.learning_rate = 0.1;
    Optimizer idle(oc);
    idle.step(ls.graph, {{"theta", Tensor({2, 1})}});
    CHECK(norm(sub(ls.graph.parameter_value("theta"), before), NormKind::inf) < 1e-12);
    CHECK(optimizer_kind_from_string(to_string(kind)) == kind);
  }

  LeastSquares ls = least_squares(1, 5);
  OptimizerConfig oc;
  oc.kind = OptimizerKind::sgd;
  oc.learning_rate = 0.2;
  oc.lr_scale["theta"] = 0.5;
  CHECK(oc.rate_for("theta") == doctest::Approx(0.1));
  CHECK(oc.rate_for("other") == doctest::Approx(0.2));
  Optimizer sgd(oc);
  sgd.step(ls.graph, {{"theta", Tensor({2, 1}, std::vector<double>{1.0, -2.0})}});
  CHECK(ls.graph.parameter_value("theta")[0] == doctest::Approx(-0.1));
  CHECK(ls.graph.parameter_value("theta")[1] == doctest::Approx(0.2));
  CHECK(sgd.steps() == 1);

  oc.learning_rate = -1.0;
  CHECK_THROWS_AS(oc.validate(), ArgumentError);
  CHECK_THROWS_AS(optimizer_kind_from_string("lbfgs"), ArgumentError);
}

TEST_CASE("training a linear least-squares problem reaches the analytic optimum") {
  LeastSquares ls = least_squares(4, 20);
  TrainConfig tc;
  tc.epochs = 400;
  tc.optimizer.kind = OptimizerKind::momentum;
  tc.optimizer.learning_rate = 0.05;
  const TrainResult r = train_loop(ls.graph, ls.data, ls.data, loss_mse, tc);
  const Tensor& theta = ls.graph.parameter_value("theta");
  CHECK(theta[0] == doctest::Approx(ls.optimum[0]).epsilon(1e-4).scale(1e-4));
  CHECK(theta[1] == doctest::Approx(ls.optimum[1]).epsilon(1e-4).scale(1e-4));
  CHECK(r.best_val_loss < r.initial_val_loss);
  CHECK(r.history.front().epoch == 0);
  CHECK(r.history.size() == 2 * (tc.epochs + 1));
}

TEST_CASE("a fixed seed reproduces the loss trajectory") {
  TrainConfig tc;
  tc.epochs = 15;
  tc.batch_size = 2;
  tc.seed = 9;
  tc.optimizer.learning_rate = 0.05;
  const auto run = [&] {
    LeastSquares ls = least_squares(6, 30);
    return train_loop(ls.graph, ls.data, ls.data, loss_mse, tc).history;
  };
  const auto a = run(), b = run();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].loss == b[i].loss);
  CHECK(history_csv(a) == history_csv(b));
  CHECK(history_csv(a).rfind("epoch,split,loss\n", 0) == 0);
}

TEST_CASE("a non-finite loss stops training at the last good parameters") {
  LeastSquares ls = least_squares(2, 40);
  TrainConfig tc;
  tc.epochs = 10;
  tc.optimizer.learning_rate = 0.05;
  int calls = 0;
  const LossFn flaky = [&](const Tensor& p, const Tensor& t) {
    LossValue v = loss_mse(p, t);
    if (++calls > 12) v.value = std::numeric_limits<double>::quiet_NaN();
    return v;
  };
  try {
    train_loop(ls.graph, ls.data, ls.data, flaky, tc);
    FAIL("expected divergence");
  } catch (const TrainingDiverged& e) {
    REQUIRE(e.checkpoint.count("theta"));
    CHECK(std::isfinite(e.checkpoint.at("theta")[0]));
    CHECK(ls.graph.parameter_value("theta").identical(e.checkpoint.at("theta")));
    CHECK_FALSE(e.history.empty());
  }
}

TEST_CASE("training rejects empty data and graphs without trainable parameters") {
  LeastSquares ls = least_squares(1, 50);
  CHECK_THROWS_AS(train_loop(ls.graph, {}, ls.data, loss_mse, {}), ArgumentError);
  ls.graph.set_trainable("theta", false);
  CHECK_THROWS_AS(train_loop(ls.graph, ls.data, ls.data, loss_mse, {}), ArgumentError);
}
