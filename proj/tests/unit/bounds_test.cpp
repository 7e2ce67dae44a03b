#include <doctest.h>

#include <cmath>

#include "kol/bounds.hpp"
#include "kol/errors.hpp"

using namespace kol;

namespace {

const FunctionPair& pair_named(const std::vector<FunctionPair>& cat, const std::string& name) {
  for (const auto& p : cat)
    if (p.name == name) return p;
  FAIL("no pair " << name);
  return cat.front();
}

FitConfig quick_fit(std::uint64_t seed) {
  FitConfig c;
  c.steps = 400;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("vector and operator norms") {
  CHECK(p_norm({3.0, -4.0}, 2.0) == doctest::Approx(5.0));
  CHECK(p_norm({3.0, -4.0}, 1.0) == doctest::Approx(7.0));
  CHECK(operator_norm({{1.0, -2.0}, {3.0, 0.5}}, 1.0) == doctest::Approx(4.0));
  CHECK(operator_norm({{3.0, 0.0}, {0.0, 1.0}}, 2.0) == doctest::Approx(3.0));
  CHECK(operator_norm({{1.0, 1.0}, {0.0, 0.0}}, 2.0) == doctest::Approx(std::sqrt(2.0)));
  CHECK(operator_norm({{2.0}, {1.0}}, 2.0) == doctest::Approx(std::sqrt(5.0)));
}

TEST_CASE("grid Lipschitz estimates on closed-form examples") {
  const Box box{{-1.0, -1.0}, {1.0, 1.0}};
  const GradientFn linear = [](const Point&) { return Point{0.6, -0.8}; };
  CHECK(lipschitz(linear, box, 2.0, 11).value == doctest::Approx(1.0));
  CHECK(lipschitz(linear, box, 1.0, 11).value == doctest::Approx(1.4));
  const Box line{{-2.0}, {2.0}};
  const GradientFn sig = [](const Point& x) { return Point{activation_slope(Activation::sigmoid, x[0])}; };
  const GradientFn th = [](const Point& x) { return Point{activation_slope(Activation::tanh, x[0])}; };
  const LipschitzEstimate ls = lipschitz(sig, line, 2.0, 101);
  CHECK(ls.value == doctest::Approx(0.25));
  CHECK(ls.lower_estimate());
  CHECK(lipschitz(th, line, 2.0, 101).value == doctest::Approx(1.0));
  CHECK_FALSE(lipschitz_analytic(1.0, 2.0).lower_estimate());
}

TEST_CASE("catalog pairs are consistent with their derivatives") {
  const auto cat = catalog();
  REQUIRE(cat.size() == 3);
  for (const auto& pair : cat) {
    CAPTURE(pair.name);
    for (const auto& x : pair.domain.grid(5)) {
      const Point u = pair.u(x);
      CHECK(pair.intermediate.contains(u, 1e-12));
      const auto jac = pair.u_jacobian(x);
      for (std::size_t i = 0; i < x.size(); ++i) {
        Point p = x, q = x;
        p[i] += 1e-6;
        q[i] -= 1e-6;
        const Point up = pair.u(p), uq = pair.u(q);
        for (std::size_t k = 0; k < u.size(); ++k) CHECK(jac[k][i] == doctest::Approx((up[k] - uq[k]) / 2e-6).epsilon(1e-6));
      }
      const Point g = pair.g_gradient(u);
      for (std::size_t k = 0; k < u.size(); ++k) {
        Point p = u, q = u;
        p[k] += 1e-6;
        q[k] -= 1e-6;
        CHECK(g[k] == doctest::Approx((pair.g(p) - pair.g(q)) / 2e-6).epsilon(1e-6));
      }
      if (pair.g_as_mlp) CHECK((*pair.g_as_mlp)(u) == doctest::Approx(pair.g(u)).epsilon(1e-15));
    }
  }
}

TEST_CASE("measured errors agree with a direct loop") {
  const auto cat = catalog();
  const FunctionPair& pair = pair_named(cat, "sin-cos-squares");
  const UApprox u_hat = fit_components(pair.u, 2, pair.domain, 6, quick_fit(1));
  const ErrorSups e = measure_errors(pair, &u_hat, nullptr, pair.domain, 51);
  double ref = 0.0, ref_u0 = 0.0;
  for (const auto& x : pair.domain.grid(51)) {
    ref = std::max(ref, std::fabs(pair.f(x) - pair.g(evaluate(u_hat, x))));
    ref_u0 = std::max(ref_u0, std::fabs(pair.u(x)[0] - u_hat[0](x)));
  }
  REQUIRE(e.e_f_u);
  CHECK(*e.e_f_u == ref);
  CHECK(e.e_u.at(0) == ref_u0);
  CHECK_FALSE(e.e_g);

  CHECK_THROWS_AS(measure_errors(pair, nullptr, nullptr, pair.domain), ArgumentError);
  CHECK_THROWS_AS(measure_errors(pair, &u_hat, nullptr, pair.domain.padded(0.5)), ArgumentError);
}

TEST_CASE("known g with approximated u respects the Lipschitz bound") {
  const auto cat = catalog();
  for (const auto& pair : cat) {
    const UApprox u_hat = fit_components(pair.u, pair.outputs(), pair.domain, 6, quick_fit(2));
    for (double p : {1.0, 2.0}) {
      CAPTURE(pair.name);
      CAPTURE(p);
      const BoundReport r = check_theorem2(pair, u_hat, {p, 41, std::nullopt});
      CHECK(r.pass);
      CHECK(r.sup_error > 0.0);
      CHECK(r.sup_error <= r.bound + BoundReport::kSlack);
    }
  }
}

TEST_CASE("an underestimated Lipschitz constant breaks the bound") {
  const auto cat = catalog();
  const FunctionPair& pair = pair_named(cat, "affine");
  const UApprox u_hat = fit_components(pair.u, 2, pair.domain, 3, quick_fit(3));
  const BoundReport honest = check_theorem2(pair, u_hat, {2.0, 41, std::nullopt});
  const double lg = honest.ingredients.at("l_g").at("value").get<double>();
  const BoundReport low = check_theorem2(pair, u_hat, {2.0, 41, lg / 10.0});
  CHECK(honest.pass);
  CHECK_FALSE(low.pass);
}

TEST_CASE("exactly known blocks give zero error") {
  const auto cat = catalog();
  const FunctionPair& pair = pair_named(cat, "tanh-ramp-sigmoid-ridge");
  REQUIRE(pair.g_as_mlp);
  const BoundReport r = check_theorem3(pair, nullptr, *pair.g_as_mlp, 41);
  CHECK(r.sup_error == 0.0);
  CHECK(r.bound == 0.0);
  CHECK(r.pass);

  const LayerChain chain = reference_chain();
  const BoundReport none = check_theorem4(chain, {std::nullopt, std::nullopt, std::nullopt}, {2.0, 41, false});
  CHECK(none.sup_error == 0.0);
  CHECK(none.bound == 0.0);
}

TEST_CASE("approximating g as well as u stays within the combined bound") {
  const auto cat = catalog();
  const FunctionPair& pair = pair_named(cat, "sin-cos-squares");
  const UApprox u_hat = fit_components(pair.u, 2, pair.domain, 6, quick_fit(4));
  const ScalarFn g = pair.g;
  const ApproxMLP g_hat = fit_mlp(g, pair.intermediate.padded(0.1), 6, quick_fit(5)).mlp;
  const BoundReport r = check_theorem3(pair, &u_hat, g_hat, 41);
  CHECK(r.pass);
  CHECK(r.bound > r.ingredients.at("eps_g").get<double>());
}

TEST_CASE("layer chain bound and Lipschitz product") {
  const LayerChain chain = reference_chain();
  chain.validate();
  std::vector<std::optional<UApprox>> approx;
  for (std::size_t i = 0; i < chain.layers.size(); ++i) {
    const Layer& l = chain.layers[i];
    approx.push_back(fit_components(l.u, l.u(l.domain.lo).size(), l.domain, 6, quick_fit(10 + i)));
  }
  const BoundReport r = check_theorem4(chain, approx, {2.0, 41, true});
  CHECK(r.pass);
  for (const auto& s : r.ingredients.at("substitutions")) CHECK(s.at("bound").get<double>() < r.bound);
  const ProductCheck pc = lipschitz_product(chain, 2.0, 41);
  CHECK(pc.holds);
  CHECK(pc.chain <= pc.product);
}
