#include <doctest.h>

#include "kol/errors.hpp"
#include "kol/filter.hpp"
#include "kol/graph.hpp"
#include "kol/ops.hpp"
#include "kol/tensor_ops.hpp"
#include "oracles.hpp"

using namespace kol;

namespace {

/// Scales its input by 3 but reports a gradient of 2.
class BrokenScale : public Operator {
 public:
  std::string name() const override { return "broken_scale"; }
  Tensor forward(std::span<const Tensor* const> in) const override { return scale(*in[0], 3.0); }
  std::vector<Tensor> backward(std::span<const Tensor* const>, const Tensor&, const Tensor& g) const override {
    return {scale(g, 2.0)};
  }
};

}  // namespace

TEST_CASE("forward of relu(w * x)") {
  Graph g;
  const NodeId x = g.input("x");
  const NodeId w = g.parameter("w", Tensor::scalar(2.0));
  g.apply(ops::relu(), {g.apply(ops::scale_by(), {x, w})});
  const Tensor y = g.evaluate({{"x", Tensor::vector({-1.0, 3.0})}});
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 6.0);
}

TEST_CASE("identity chain passes input through") {
  Graph g;
  NodeId n = g.input("x");
  for (int i = 0; i < 3; ++i) n = g.apply(ops::identity(), {n});
  const Tensor x = oracle::random_tensor({4, 3}, 1);
  CHECK(g.evaluate({{"x", x}}).identical(x));
}

TEST_CASE("unbound input and shape mismatch are argument errors") {
  Graph g;
  const NodeId a = g.input("a");
  const NodeId b = g.input("b");
  g.apply(ops::add(), {a, b}, "sum_ab");
  CHECK_THROWS_AS(g.evaluate({{"a", Tensor::vector({1.0})}}), ArgumentError);
  try {
    g.evaluate({{"a", Tensor::vector({1.0})}, {"b", Tensor::vector({1.0, 2.0})}});
    FAIL("expected a shape error");
  } catch (const ArgumentError& e) {
    CHECK(std::string(e.what()).find("sum_ab") != std::string::npos);
  }
}

TEST_CASE("scalar chain rule: (w x - t)^2") {
  Graph g;
  const NodeId x = g.input("x");
  const NodeId t = g.input("t");
  const NodeId w = g.parameter("w", Tensor::scalar(3.0));
  g.apply(ops::square(), {g.apply(ops::sub(), {g.apply(ops::scale_by(), {x, w}), t})});
  const Tape tape = g.forward({{"x", Tensor::scalar(1.0)}, {"t", Tensor::scalar(0.0)}});
  CHECK(tape.output().item() == 9.0);
  const Gradients grads = g.backward(tape, Tensor::scalar(1.0));
  CHECK(grads.at("w").item() == doctest::Approx(6.0));
}

TEST_CASE("relu blocks gradient at negative pre-activation and at zero") {
  Graph g;
  const NodeId x = g.input("x");
  const NodeId w = g.parameter("w", Tensor::scalar(1.0));
  g.apply(ops::relu(), {g.apply(ops::scale_by(), {x, w})});
  const Tape tape = g.forward({{"x", Tensor::vector({-2.0, 0.0})}});
  CHECK(g.backward(tape, Tensor::vector({1.0, 1.0})).at("w").item() == 0.0);
}

TEST_CASE("tape from another graph is a state error") {
  Graph a, b;
  a.apply(ops::identity(), {a.input("x")});
  b.apply(ops::relu(), {b.input("x")});
  b.parameter("p", Tensor::scalar(1.0));
  const Tape tape = a.forward({{"x", Tensor::scalar(1.0)}});
  CHECK_THROWS_AS(b.backward(tape, Tensor::scalar(1.0)), StateError);
  a.parameter("late", Tensor::scalar(1.0));
  CHECK_THROWS_AS(a.backward(tape, Tensor::scalar(1.0)), StateError);
}

TEST_CASE("gradcheck: linear layer passes at 1e-6") {
  Graph g;
  const NodeId x = g.input("x");
  const NodeId w = g.parameter("W", oracle::random_tensor({4, 6}, 2));
  const NodeId b = g.parameter("b", oracle::random_tensor({4, 1}, 3));
  g.apply(ops::add(), {g.apply(ops::matmul(), {w, x}), b});
  GradcheckOptions opt;
  opt.tolerance = 1e-6;
  opt.max_entries = 0;
  const auto report = gradcheck(g, {{"x", oracle::random_tensor({6, 1}, 4)}}, opt);
  CHECK(report.pass);
  CHECK(report.entries.size() == 2);
}

TEST_CASE("gradcheck: circulant filter spectrum passes at 1e-5") {
  const FilterKernel k = ramp_filter(12, 1.0);
  Graph g;
  const NodeId rows = g.input("rows");
  const NodeId c = g.parameter("C", k.parameters());
  g.apply(ops::row_filter(12, k.spectrum.size()), {rows, c});
  GradcheckOptions opt;
  opt.tolerance = 1e-5;
  opt.max_entries = 0;
  const auto report = gradcheck(g, {{"rows", oracle::random_tensor({3, 12}, 5)}}, opt);
  CHECK(report.pass);
  CHECK(report.max_rel_error() < 1e-5);
}

TEST_CASE("gradcheck: input gradients of the row filter") {
  const FilterKernel k = ramp_filter(9, 0.5, false);
  Graph g;
  const NodeId rows = g.parameter("rows", oracle::random_tensor({2, 9}, 6));
  const NodeId c = g.parameter("C", k.parameters(), false);
  g.apply(ops::row_filter(9, 9), {rows, c});
  CHECK(gradcheck(g, {}).pass);
}

TEST_CASE("gradcheck: spectral row filter on complex rows") {
  Graph g;
  const NodeId x = g.input("x");
  const NodeId c = g.parameter("C", oracle::random_tensor({10}, 7));
  g.apply(ops::spectral_row_filter(10), {x, c});
  const Tensor re = oracle::random_tensor({3, 10}, 8);
  const Tensor im = oracle::random_tensor({3, 10}, 9);
  std::vector<Complex> data(30);
  for (std::size_t i = 0; i < 30; ++i) data[i] = {re[i], im[i]};
  CHECK(gradcheck(g, {{"x", Tensor({3, 10}, data)}}).pass);
}

TEST_CASE("gradcheck: nonlinear ops") {
  Graph g;
  const NodeId x = g.input("x");
  const NodeId a = g.parameter("a", oracle::random_tensor({5}, 10));
  const NodeId b = g.parameter("b", oracle::random_tensor({5}, 11));
  const NodeId s = g.apply(ops::sigmoid(), {g.apply(ops::mul(), {a, x})});
  const NodeId t = g.apply(ops::tanh(), {g.apply(ops::add(), {b, x})});
  const NodeId e = g.apply(ops::exp(), {g.apply(ops::sub(), {s, t})});
  const NodeId m = g.apply(ops::max(), {e, s, g.apply(ops::square(), {t})});
  g.apply(ops::sum(), {m});
  CHECK(gradcheck(g, {{"x", oracle::random_tensor({5}, 12)}}).pass);
}

TEST_CASE("gradcheck flags a corrupted gradient rule") {
  Graph g;
  const NodeId w = g.parameter("w", oracle::random_tensor({3}, 13));
  g.apply(std::make_shared<BrokenScale>(), {w});
  const auto report = gradcheck(g, {});
  CHECK_FALSE(report.pass);
  CHECK(report.max_rel_error() > 0.1);
}

TEST_CASE("backward is deterministic") {
  Graph g;
  const NodeId x = g.input("x");
  const NodeId w = g.parameter("W", oracle::random_tensor({8, 8}, 14));
  g.apply(ops::sum(), {g.apply(ops::tanh(), {g.apply(ops::matmul(), {w, x})})});
  const Bindings in{{"x", oracle::random_tensor({8, 3}, 15)}};
  const Gradients a = g.backward(g.forward(in), Tensor::scalar(1.0));
  const Gradients b = g.backward(g.forward(in), Tensor::scalar(1.0));
  CHECK(a.at("W").identical(b.at("W")));
}

TEST_CASE("composition gradient equals product of Jacobian actions") {
  // f = sum(tanh(A p)) with p parameter: grad = A^T (1 - tanh^2(A p)).
  const Tensor a = oracle::random_tensor({4, 3}, 16);
  const Tensor p = oracle::random_tensor({3, 1}, 17);
  Graph g;
  const NodeId an = g.input("A");
  const NodeId pn = g.parameter("p", p);
  g.apply(ops::sum(), {g.apply(ops::tanh(), {g.apply(ops::matmul(), {an, pn})})});
  const Tensor grad = g.backward(g.forward({{"A", a}}), Tensor::scalar(1.0)).at("p");
  for (std::size_t j = 0; j < 3; ++j) {
    double expect = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      double z = 0.0;
      for (std::size_t k = 0; k < 3; ++k) z += a.at(i, k) * p[k];
      expect += a.at(i, j) * (1.0 - std::tanh(z) * std::tanh(z));
    }
    CHECK(grad[j] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("graph structure serializes to json") {
  Graph g;
  const NodeId x = g.input("x");
  const NodeId w = g.parameter("w", Tensor::zeros({2, 3}), false);
  g.apply(ops::matmul(), {w, x}, "y");
  const auto j = g.to_json();
  CHECK(j.at("nodes").size() == 3);
  CHECK(j.at("nodes")[1].at("kind") == "parameter-leaf");
  CHECK(j.at("nodes")[2].at("kind") == "known-op");
  CHECK(g.trainable_scalar_count() == 0);
  g.set_trainable("w", true);
  CHECK(g.trainable_scalar_count() == 6);
}
