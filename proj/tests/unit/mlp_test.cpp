#include <doctest.h>

#include <cmath>

#include "kol/errors.hpp"
#include "kol/mlp.hpp"

using namespace kol;

TEST_CASE("box grids include both endpoints with the last axis fastest") {
  const Box b{{0.0, -1.0}, {1.0, 1.0}};
  const auto pts = b.grid(3);
  REQUIRE(pts.size() == 9);
  CHECK(pts[0] == Point{0.0, -1.0});
  CHECK(pts[1] == Point{0.0, 0.0});
  CHECK(pts[2] == Point{0.0, 1.0});
  CHECK(pts[8] == Point{1.0, 1.0});
  const Box h = Box::hull(pts);
  CHECK(h.lo == b.lo);
  CHECK(h.hi == b.hi);
  CHECK(b.padded(0.5).contains(Box{{-0.5, -2.0}, {1.5, 2.0}}));
  CHECK_FALSE(b.contains(Point{1.1, 0.0}));
  CHECK(b.contains(Point{1.1, 0.0}, 0.2));
  CHECK_THROWS_AS((Box{{1.0}, {0.0}}).validate(), ArgumentError);
}

TEST_CASE("activation slopes and Lipschitz constants") {
  CHECK(activation_lipschitz(Activation::sigmoid) == 0.25);
  CHECK(activation_lipschitz(Activation::tanh) == 1.0);
  for (Activation a : {Activation::sigmoid, Activation::tanh}) {
    for (double t : {-2.0, -0.3, 0.0, 0.7, 3.0}) {
      const double fd = (activate(a, t + 1e-6) - activate(a, t - 1e-6)) / 2e-6;
      CHECK(activation_slope(a, t) == doctest::Approx(fd).epsilon(1e-7));
    }
  }
  CHECK(activation_from_string(to_string(Activation::tanh)) == Activation::tanh);
}

TEST_CASE("evaluation and gradient of a hand-built MLP") {
  ApproxMLP m{Activation::tanh, Tensor({2, 3}, std::vector<double>{1.0, -2.0, 0.5, 0.3, 0.4, -0.1}),
              Tensor({1, 2}, std::vector<double>{2.0, -1.0})};
  const Point x{0.2, -0.4};
  const double t1 = 1.0 * 0.2 - 2.0 * -0.4 + 0.5, t2 = 0.3 * 0.2 + 0.4 * -0.4 - 0.1;
  CHECK(m(x) == doctest::Approx(2.0 * std::tanh(t1) - std::tanh(t2)));
  const Point g = m.gradient(x);
  for (std::size_t i = 0; i < 2; ++i) {
    Point p = x, q = x;
    p[i] += 1e-6;
    q[i] -= 1e-6;
    CHECK(g[i] == doctest::Approx((m(p) - m(q)) / 2e-6).epsilon(1e-7));
  }
  CHECK(m.projection(0, {1.0, 1.0}) == doctest::Approx(-1.0));
}

TEST_CASE("the graph form evaluates the same function") {
  const ApproxMLP m = random_mlp(2, 5, 3, Activation::sigmoid);
  const MlpNetwork net = mlp_network(m);
  const auto pts = Box{{-1.0, -1.0}, {1.0, 1.0}}.grid(4);
  const Tensor y = net.graph.evaluate({{MlpNetwork::kInput, design_matrix(pts)}});
  REQUIRE(y.shape() == Shape{1, pts.size()});
  for (std::size_t k = 0; k < pts.size(); ++k) CHECK(y[k] == doctest::Approx(m(pts[k])).epsilon(1e-14));
  const ApproxMLP back = net.mlp(Activation::sigmoid);
  CHECK(back.weights.identical(m.weights));
  CHECK(back.coefficients.identical(m.coefficients));
}

TEST_CASE("MLP weights pass a finite-difference check") {
  MlpNetwork net = mlp_network(random_mlp(1, 6, 4, Activation::tanh));
  const auto pts = Box{{-1.0}, {1.0}}.grid(25);
  CHECK(gradcheck(net.graph, {{MlpNetwork::kInput, design_matrix(pts)}}, {}).pass);
}

TEST_CASE("fitting a constant is essentially exact") {
  const FitResult r = fit_mlp([](const Point&) { return 0.3; }, Box{{-1.0}, {1.0}}, 1);
  CHECK(r.epsilon < 1e-3);
}

TEST_CASE("fits are deterministic for a seed and vary across seeds") {
  const auto f = [](const Point& x) { return std::sin(3.0 * x[0]); };
  FitConfig cfg;
  cfg.steps = 200;
  cfg.seed = 11;
  const FitResult a = fit_mlp(f, Box{{-1.0}, {1.0}}, 6, cfg);
  const FitResult b = fit_mlp(f, Box{{-1.0}, {1.0}}, 6, cfg);
  CHECK(a.mlp.weights.identical(b.mlp.weights));
  CHECK(a.epsilon == b.epsilon);
  cfg.seed = 12;
  CHECK_FALSE(fit_mlp(f, Box{{-1.0}, {1.0}}, 6, cfg).mlp.weights.identical(a.mlp.weights));
}

TEST_CASE("more nodes fit a smooth 2-D target better") {
  const auto f = [](const Point& x) { return std::exp(-x[0] * x[0]) * std::cos(2.0 * x[1]); };
  const Box box{{-1.0, -1.0}, {1.0, 1.0}};
  FitConfig cfg;
  cfg.steps = 500;
  cfg.eval_resolution = 41;
  CHECK(fit_mlp(f, box, 16, cfg).epsilon < fit_mlp(f, box, 2, cfg).epsilon);
}

TEST_CASE("invalid fit settings are rejected") {
  FitConfig cfg;
  cfg.restarts = 0;
  CHECK_THROWS_AS(fit_mlp([](const Point&) { return 0.0; }, Box{{0.0}, {1.0}}, 3, cfg), ArgumentError);
  CHECK_THROWS_AS(fit_mlp([](const Point&) { return 0.0; }, Box{{0.0}, {1.0}}, 0), ArgumentError);
}
