#include "kol/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "kol/errors.hpp"
#include "kol/random.hpp"

namespace kol {

namespace {

double sigmoid(double t) { return activate(Activation::sigmoid, t); }
double sigmoid_slope(double t) { return activation_slope(Activation::sigmoid, t); }

// Largest sigmoid slope over t in [lo, hi].
double max_sigmoid_slope(double lo, double hi) {
  if (lo <= 0.0 && hi >= 0.0) return 0.25;
  return sigmoid_slope(std::abs(lo) < std::abs(hi) ? lo : hi);
}

// Range of v^T z + b over a box.
std::pair<double, double> ridge_range(const Point& v, double b, const Box& box) {
  double lo = b, hi = b;
  for (std::size_t i = 0; i < v.size(); ++i) {
    lo += std::min(v[i] * box.lo[i], v[i] * box.hi[i]);
    hi += std::max(v[i] * box.lo[i], v[i] * box.hi[i]);
  }
  return {lo, hi};
}

Point subtract(const Point& a, const Point& b) {
  Point d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

std::vector<Point> matmul(const std::vector<Point>& a, const std::vector<Point>& b) {
  const std::size_t k = b.size(), c = b.empty() ? 0 : b.front().size();
  std::vector<Point> out(a.size(), Point(c, 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != k) throw ArgumentError("jacobian product: inner dimensions differ");
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t l = 0; l < c; ++l) out[i][l] += a[i][j] * b[j][l];
    }
  }
  return out;
}

void check_p(double p) {
  if (p != 1.0 && p != 2.0) throw ArgumentError("only p = 1 and p = 2 are supported");
}

void check_u_hat(const FunctionPair& pair, const UApprox& u_hat) {
  if (u_hat.size() != pair.outputs()) throw ArgumentError("u_hat needs one MLP per component of u");
  for (const auto& m : u_hat) {
    m.validate();
    if (m.inputs() != pair.domain.dim()) throw ArgumentError("u_hat input dimension differs from the domain");
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double p_norm(const Point& v, double p) {
  check_p(p);
  double s = 0.0;
  if (p == 1.0) {
    for (double x : v) s += std::abs(x);
    return s;
  }
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double operator_norm(const std::vector<Point>& rows, double p) {
  check_p(p);
  if (rows.empty()) return 0.0;
  const std::size_t cols = rows.front().size();
  if (p == 1.0) {
    double best = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      double s = 0.0;
      for (const auto& r : rows) s += std::abs(r[j]);
      best = std::max(best, s);
    }
    return best;
  }
  if (cols > 2) throw ArgumentError("operator_norm: p = 2 supports at most two columns");
  double g00 = 0.0, g01 = 0.0, g11 = 0.0;
  for (const auto& r : rows) {
    g00 += r[0] * r[0];
    if (cols == 2) {
      g01 += r[0] * r[1];
      g11 += r[1] * r[1];
    }
  }
  if (cols == 1) return std::sqrt(g00);
  const double half = 0.5 * (g00 + g11);
  const double disc = std::sqrt(std::max(0.0, 0.25 * (g00 - g11) * (g00 - g11) + g01 * g01));
  return std::sqrt(half + disc);
}

std::vector<FunctionPair> catalog() {
  std::vector<FunctionPair> out;

  {
    FunctionPair f;
    f.name = "affine";
    f.domain = {{-1.0, -1.0}, {1.0, 1.0}};
    const double a[2][2] = {{0.8, -0.3}, {0.4, 0.6}};
    const double b[2] = {0.1, -0.2};
    f.u = [=](const Point& x) {
      return Point{a[0][0] * x[0] + a[0][1] * x[1] + b[0], a[1][0] * x[0] + a[1][1] * x[1] + b[1]};
    };
    f.u_jacobian = [=](const Point&) { return std::vector<Point>{{a[0][0], a[0][1]}, {a[1][0], a[1][1]}}; };
    f.intermediate = {{b[0] - 1.1, b[1] - 1.0}, {b[0] + 1.1, b[1] + 1.0}};
    const Point c{0.7, -1.2};
    f.g = [=](const Point& z) { return c[0] * z[0] + c[1] * z[1] + 0.05; };
    f.g_gradient = [=](const Point&) { return c; };
    f.g_lipschitz = [=](const Box&, double p) { return p_norm(c, p); };
    out.push_back(std::move(f));
  }

  {
    FunctionPair f;
    f.name = "sin-cos-squares";
    f.domain = {{-1.0}, {1.0}};
    f.u = [](const Point& x) { return Point{std::sin(2.0 * x[0]), std::cos(2.0 * x[0])}; };
    f.u_jacobian = [](const Point& x) {
      return std::vector<Point>{{2.0 * std::cos(2.0 * x[0])}, {-2.0 * std::sin(2.0 * x[0])}};
    };
    f.intermediate = {{-1.0, std::cos(2.0)}, {1.0, 1.0}};
    const double w0 = 0.6, w1 = 0.3;
    f.g = [=](const Point& z) { return w0 * z[0] * z[0] + w1 * z[1] * z[1]; };
    f.g_gradient = [=](const Point& z) { return Point{2.0 * w0 * z[0], 2.0 * w1 * z[1]}; };
    f.g_lipschitz = [=](const Box& box, double p) {
      const double m0 = std::max(std::abs(box.lo[0]), std::abs(box.hi[0]));
      const double m1 = std::max(std::abs(box.lo[1]), std::abs(box.hi[1]));
      return p_norm({2.0 * w0 * m0, 2.0 * w1 * m1}, p);
    };
    out.push_back(std::move(f));
  }

  {
    FunctionPair f;
    f.name = "tanh-ramp-sigmoid-ridge";
    f.domain = {{-1.0, -1.0}, {1.0, 1.0}};
    f.u = [](const Point& x) { return Point{std::tanh(1.5 * x[0] + 0.5 * x[1]), std::tanh(x[0] - x[1])}; };
    f.u_jacobian = [](const Point& x) {
      const double t0 = std::tanh(1.5 * x[0] + 0.5 * x[1]), t1 = std::tanh(x[0] - x[1]);
      const double s0 = 1.0 - t0 * t0, s1 = 1.0 - t1 * t1;
      return std::vector<Point>{{1.5 * s0, 0.5 * s0}, {s1, -s1}};
    };
    f.intermediate = {{std::tanh(-2.0), std::tanh(-2.0)}, {std::tanh(2.0), std::tanh(2.0)}};
    const Point v{2.0, -1.5};
    const double bias = 0.3;
    ApproxMLP ridge{Activation::sigmoid, Tensor({1, 3}, std::vector<double>{v[0], v[1], bias}),
                    Tensor({1, 1}, 1.0)};
    f.g = [ridge](const Point& z) { return ridge(z); };
    f.g_gradient = [ridge](const Point& z) { return ridge.gradient(z); };
    f.g_lipschitz = [=](const Box& box, double p) {
      const auto [lo, hi] = ridge_range(v, bias, box);
      return max_sigmoid_slope(lo, hi) * p_norm(v, p);
    };
    f.g_as_mlp = ridge;
    out.push_back(std::move(f));
  }
  return out;
}

nlohmann::json LipschitzEstimate::to_json() const {
  nlohmann::json j = {{"value", value}, {"method", method}, {"p", p}, {"lower_estimate", lower_estimate()}};
  if (resolution > 0) j["resolution"] = resolution;
  return j;
}

LipschitzEstimate lipschitz(const GradientFn& grad, const Box& domain, double p, std::size_t resolution) {
  check_p(p);
  double best = 0.0;
  for (const auto& x : domain.grid(resolution)) best = std::max(best, p_norm(grad(x), p));
  return {best, "grid-sup", resolution, p};
}

LipschitzEstimate lipschitz_analytic(double value, double p) {
  check_p(p);
  return {value, "analytic", 0, p};
}

Point evaluate(const UApprox& u_hat, const Point& x) {
  Point out(u_hat.size());
  for (std::size_t k = 0; k < u_hat.size(); ++k) out[k] = u_hat[k](x);
  return out;
}

nlohmann::json ErrorSups::to_json() const {
  nlohmann::json j = {{"e_u", e_u}};
  if (e_g) j["e_g"] = *e_g;
  if (e_f_u) j["e_f_u"] = *e_f_u;
  if (e_f) j["e_f"] = *e_f;
  return j;
}

ErrorSups measure_errors(const FunctionPair& pair, const UApprox* u_hat, const ApproxMLP* g_hat, const Box& grid,
                         std::size_t resolution) {
  if (!u_hat && !g_hat) throw ArgumentError("measure_errors: approximate at least one of u and g");
  grid.validate();
  if (grid.dim() != pair.domain.dim() || !pair.domain.contains(grid, 1e-12)) {
    throw ArgumentError("measure_errors: grid box lies outside the domain of " + pair.name);
  }
  if (u_hat) check_u_hat(pair, *u_hat);
  if (g_hat) {
    g_hat->validate();
    if (g_hat->inputs() != pair.outputs()) throw ArgumentError("g_hat input dimension differs from u's output");
  }
  ErrorSups e;
  double eg = 0.0, efu = 0.0, ef = 0.0;
  if (u_hat) e.e_u.assign(pair.outputs(), 0.0);
  for (const auto& x : grid.grid(resolution)) {
    const Point uv = pair.u(x);
    const double fx = pair.g(uv);
    if (g_hat) eg = std::max(eg, std::abs(fx - (*g_hat)(uv)));
    if (u_hat) {
      const Point uh = evaluate(*u_hat, x);
      for (std::size_t k = 0; k < uv.size(); ++k) e.e_u[k] = std::max(e.e_u[k], std::abs(uv[k] - uh[k]));
      efu = std::max(efu, std::abs(fx - pair.g(uh)));
      if (g_hat) ef = std::max(ef, std::abs(fx - (*g_hat)(uh)));
    }
  }
  if (g_hat) e.e_g = eg;
  if (u_hat) e.e_f_u = efu;
  e.e_f = u_hat && g_hat ? ef : (u_hat ? efu : eg);
  return e;
}

nlohmann::json BoundReport::to_json() const {
  return {{"theorem", theorem}, {"subject", subject}, {"p", p},         {"sup_error", sup_error},
          {"bound", bound},     {"pointwise", pointwise}, {"pass", pass}, {"ingredients", ingredients}};
}

std::string BoundReport::csv_header() { return "theorem,subject,p,sup_error,bound,pointwise,pass"; }

std::string BoundReport::csv_row() const {
  return theorem + "," + subject + "," + fmt(p) + "," + fmt(sup_error) + "," + fmt(bound) + "," +
         (pointwise ? "1" : "0") + "," + (pass ? "1" : "0");
}

BoundReport check_theorem2(const FunctionPair& pair, const UApprox& u_hat, const Theorem2Options& opt) {
  check_p(opt.p);
  check_u_hat(pair, u_hat);
  const auto grid = pair.domain.grid(opt.resolution);
  std::vector<Point> uv, uh, reach;
  uv.reserve(grid.size());
  uh.reserve(grid.size());
  for (const auto& x : grid) {
    uv.push_back(pair.u(x));
    uh.push_back(evaluate(u_hat, x));
    reach.push_back(uv.back());
    reach.push_back(uh.back());
  }
  const Box hull = Box::hull(reach);
  const LipschitzEstimate lg = opt.lipschitz_override ? LipschitzEstimate{*opt.lipschitz_override, "override", 0, opt.p}
                                                      : lipschitz_analytic(pair.g_lipschitz(hull, opt.p), opt.p);

  BoundReport r;
  r.theorem = "2";
  r.subject = pair.name;
  r.p = opt.p;
  std::vector<double> eu(pair.outputs(), 0.0);
  double eu_norm = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point e = subtract(uv[i], uh[i]);
    for (std::size_t k = 0; k < e.size(); ++k) eu[k] = std::max(eu[k], std::abs(e[k]));
    const double n = p_norm(e, opt.p);
    eu_norm = std::max(eu_norm, n);
    const double err = std::abs(pair.g(uv[i]) - pair.g(uh[i]));
    const double b = lg.value * n;
    r.sup_error = std::max(r.sup_error, err);
    r.bound = std::max(r.bound, b);
    if (err > b + BoundReport::kSlack) r.pointwise = false;
  }
  r.pass = r.pointwise && r.sup_error <= r.bound + BoundReport::kSlack;
  r.ingredients = {{"l_g", lg.to_json()},
                   {"lipschitz_box", hull.to_json()},
                   {"e_u", eu},
                   {"sup_norm_e_u", eu_norm},
                   {"bound_known_u", 0.0},
                   {"resolution", opt.resolution}};
  return r;
}

BoundReport check_theorem3(const FunctionPair& pair, const UApprox* u_hat, const ApproxMLP& g_hat,
                           std::size_t resolution) {
  if (u_hat) check_u_hat(pair, *u_hat);
  g_hat.validate();
  if (g_hat.inputs() != pair.outputs()) throw ArgumentError("g_hat input dimension differs from u's output");
  const auto grid = pair.domain.grid(resolution);
  const std::size_t n = g_hat.nodes();
  const double lphi = g_hat.l_phi();

  double eps_g = 0.0;
  std::vector<Point> uv, uh;
  for (const auto& x : grid) {
    uv.push_back(pair.u(x));
    uh.push_back(u_hat ? evaluate(*u_hat, x) : uv.back());
    eps_g = std::max(eps_g, std::abs(pair.g(uv.back()) - g_hat(uv.back())));
  }

  BoundReport r;
  r.theorem = "3";
  r.subject = pair.name;
  r.p = 0.0;
  std::vector<double> node_terms(n, 0.0), eu(pair.outputs(), 0.0);
  double term_u = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point e = subtract(uv[i], uh[i]);
    for (std::size_t k = 0; k < e.size(); ++k) eu[k] = std::max(eu[k], std::abs(e[k]));
    double t = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double tj = std::abs(g_hat.coefficients.at(0, j)) * lphi * std::abs(g_hat.projection(j, e));
      node_terms[j] = std::max(node_terms[j], tj);
      t += tj;
    }
    term_u = std::max(term_u, t);
    const double err = std::abs(pair.g(uv[i]) - g_hat(uh[i]));
    r.sup_error = std::max(r.sup_error, err);
    if (err > t + eps_g + BoundReport::kSlack) r.pointwise = false;
  }
  r.bound = term_u + eps_g;
  r.pass = r.pointwise && r.sup_error <= r.bound + BoundReport::kSlack;
  r.ingredients = {{"eps_g", eps_g},
                   {"term_u", term_u},
                   {"node_terms", node_terms},
                   {"l_phi", lphi},
                   {"e_u", eu},
                   {"known_u", u_hat == nullptr},
                   {"bound_known_u", eps_g},
                   {"bound_known_g", term_u},
                   {"resolution", resolution}};
  return r;
}

Point LayerChain::operator()(const Point& x) const {
  Point y = x;
  for (const auto& l : layers) y = l.u(y);
  return y;
}

void LayerChain::validate() const {
  domain.validate();
  if (layers.size() < 2) throw ArgumentError("a layer chain needs at least two layers");
  if (layers.front().domain.dim() != domain.dim() || !layers.front().domain.contains(domain, 1e-12)) {
    throw ArgumentError("chain domain must lie inside the first layer's domain");
  }
  Point y = domain.lo;
  for (std::size_t a = 0; a < layers.size(); ++a) {
    const Layer& l = layers[a];
    l.domain.validate();
    if (!l.u || !l.jacobian || !l.lipschitz) throw ArgumentError("layer '" + l.name + "' is incomplete");
    if (y.size() != l.domain.dim()) throw ArgumentError("layer '" + l.name + "' input dimension mismatch");
    y = l.u(y);
  }
}

LayerChain reference_chain() {
  LayerChain c;
  c.domain = {{-1.0}, {1.0}};

  Layer a;
  a.name = "sin-cos";
  a.domain = c.domain;
  a.u = [](const Point& x) { return Point{std::sin(2.0 * x[0]), std::cos(x[0])}; };
  a.jacobian = [](const Point& x) { return std::vector<Point>{{2.0 * std::cos(2.0 * x[0])}, {-std::sin(x[0])}}; };
  // |2 cos 2x| <= 2 and |sin x| <= 1 everywhere
  a.lipschitz = [](double p) { return p == 1.0 ? 3.0 : std::sqrt(5.0); };

  const double m[2][2] = {{1.2, -0.6}, {0.5, 0.9}};
  const double bias[2] = {0.1, -0.2};
  Layer b;
  b.name = "tanh-mix";
  b.domain = {{-1.1, 0.45}, {1.1, 1.1}};
  b.u = [=](const Point& z) {
    return Point{std::tanh(m[0][0] * z[0] + m[0][1] * z[1] + bias[0]),
                 std::tanh(m[1][0] * z[0] + m[1][1] * z[1] + bias[1])};
  };
  b.jacobian = [=](const Point& z) {
    const double t0 = std::tanh(m[0][0] * z[0] + m[0][1] * z[1] + bias[0]);
    const double t1 = std::tanh(m[1][0] * z[0] + m[1][1] * z[1] + bias[1]);
    const double s0 = 1.0 - t0 * t0, s1 = 1.0 - t1 * t1;
    return std::vector<Point>{{s0 * m[0][0], s0 * m[0][1]}, {s1 * m[1][0], s1 * m[1][1]}};
  };
  b.lipschitz = [=](double p) {
    return operator_norm({{m[0][0], m[0][1]}, {m[1][0], m[1][1]}}, p);
  };

  const Point v{1.5, -1.0};
  Layer r;
  r.name = "sigmoid-ridge";
  r.domain = {{-1.05, -1.05}, {1.05, 1.05}};
  r.u = [=](const Point& z) { return Point{sigmoid(v[0] * z[0] + v[1] * z[1] + 0.2)}; };
  r.jacobian = [=](const Point& z) {
    const double s = sigmoid_slope(v[0] * z[0] + v[1] * z[1] + 0.2);
    return std::vector<Point>{{s * v[0], s * v[1]}};
  };
  r.lipschitz = [=](double p) { return 0.25 * operator_norm({v}, p); };

  c.layers = {a, b, r};
  return c;
}

BoundReport check_theorem4(const LayerChain& chain, const std::vector<std::optional<UApprox>>& approx,
                           const Theorem4Options& opt) {
  chain.validate();
  check_p(opt.p);
  const std::size_t n = chain.layers.size();
  if (approx.size() != n) throw ArgumentError("check_theorem4: one entry per layer required");

  std::vector<double> down(n, 1.0);
  for (std::size_t a = n; a-- > 1;) down[a - 1] = down[a] * chain.layers[a].lipschitz(opt.p);

  BoundReport r;
  r.theorem = "4";
  r.subject = "chain";
  r.p = opt.p;
  std::vector<double> term(n, 0.0), eu(n, 0.0);
  bool in_domain = true;
  for (const auto& x : chain.domain.grid(opt.resolution)) {
    const Point exact = chain(x);
    Point y = x;
    double total = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      const Layer& l = chain.layers[a];
      if (!l.domain.contains(y, 1e-12)) in_domain = false;
      const Point uy = l.u(y);
      if (!approx[a]) {
        y = uy;
        continue;
      }
      const Point uh = evaluate(*approx[a], y);
      if (uh.size() != uy.size()) throw ArgumentError("approximation of layer '" + l.name + "' has wrong arity");
      const double e = p_norm(subtract(uy, uh), opt.p);
      eu[a] = std::max(eu[a], e);
      term[a] = std::max(term[a], down[a] * e);
      total += down[a] * e;
      y = uh;
    }
    double err = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) err = std::max(err, std::abs(exact[k] - y[k]));
    r.sup_error = std::max(r.sup_error, err);
    if (err > total + BoundReport::kSlack) r.pointwise = false;
  }
  for (double t : term) r.bound += t;
  r.pass = r.pointwise && r.sup_error <= r.bound + BoundReport::kSlack;

  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t a = 0; a < n; ++a) {
    layers.push_back({{"name", chain.layers[a].name},
                      {"approximated", approx[a].has_value()},
                      {"lipschitz", chain.layers[a].lipschitz(opt.p)},
                      {"downstream_lipschitz", down[a]},
                      {"sup_e_u", eu[a]},
                      {"term", term[a]}});
  }
  r.ingredients = {{"layers", layers}, {"in_domain", in_domain}, {"resolution", opt.resolution}};

  if (opt.substitutions) {
    nlohmann::json subs = nlohmann::json::array();
    Theorem4Options inner = opt;
    inner.substitutions = false;
    for (std::size_t a = 0; a < n; ++a) {
      if (!approx[a]) continue;
      auto known = approx;
      known[a].reset();
      const BoundReport s = check_theorem4(chain, known, inner);
      subs.push_back({{"layer", chain.layers[a].name},
                      {"bound", s.bound},
                      {"drop", r.bound - s.bound},
                      {"term", term[a]},
                      {"pass", s.pass}});
    }
    r.ingredients["substitutions"] = subs;
  }
  return r;
}

nlohmann::json ProductCheck::to_json() const {
  return {{"chain", chain}, {"layers", layers}, {"product", product}, {"holds", holds}};
}

ProductCheck lipschitz_product(const LayerChain& chain, double p, std::size_t resolution) {
  chain.validate();
  check_p(p);
  const std::size_t n = chain.layers.size();
  ProductCheck c;
  c.layers.assign(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    const Layer& l = chain.layers[a];
    for (const auto& y : l.domain.grid(resolution)) c.layers[a] = std::max(c.layers[a], operator_norm(l.jacobian(y), p));
  }
  for (const auto& x : chain.domain.grid(resolution)) {
    Point y = x;
    std::vector<Point> j;
    for (std::size_t a = 0; a < n; ++a) {
      const auto ja = chain.layers[a].jacobian(y);
      c.layers[a] = std::max(c.layers[a], operator_norm(ja, p));
      j = a == 0 ? ja : matmul(ja, j);
      y = chain.layers[a].u(y);
    }
    c.chain = std::max(c.chain, operator_norm(j, p));
  }
  c.product = 1.0;
  for (double l : c.layers) c.product *= l;
  c.holds = c.chain <= c.product * (1.0 + 1e-12);
  return c;
}

UApprox fit_components(const VectorFn& fn, std::size_t outputs, const Box& box, std::size_t nodes,
                       const FitConfig& cfg) {
  UApprox out;
  for (std::size_t k = 0; k < outputs; ++k) {
    FitConfig c = cfg;
    c.seed = derive_seed(cfg.seed, k);
    out.push_back(fit_mlp([&](const Point& x) { return fn(x)[k]; }, box, nodes, c).mlp);
  }
  return out;
}

void BoundsSuiteConfig::validate() const {
  if (resolution < 2) throw ArgumentError("bounds suite: resolution must be >= 2");
  if (nodes_u == 0 || nodes_g == 0 || chain_nodes == 0) throw ArgumentError("bounds suite: node counts must be positive");
  if (norms.empty()) throw ArgumentError("bounds suite: at least one norm");
  for (double p : norms) check_p(p);
  if (scaling_seeds == 0) throw ArgumentError("bounds suite: scaling_seeds must be positive");
  for (std::size_t n : scaling_nodes) {
    if (n == 0) throw ArgumentError("bounds suite: scaling node counts must be positive");
  }
  fit.validate();
}

bool BoundsSuite::reports_pass() const {
  return std::all_of(reports.begin(), reports.end(), [](const BoundReport& r) { return r.pass; });
}

nlohmann::json BoundsSuite::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : reports) rs.push_back(r.to_json());
  nlohmann::json sc = nlohmann::json::array();
  for (const auto& row : scaling) sc.push_back({{"nodes", row.nodes}, {"epsilon", row.epsilon}, {"median", row.median}});
  return {{"reports", rs},
          {"reports_pass", reports_pass()},
          {"substitutions", substitutions},
          {"substitutions_strict", substitutions_strict},
          {"known_zero", known_zero},
          {"lipschitz_product", product.to_json()},
          {"scaling", sc},
          {"scaling_monotone", scaling_monotone}};
}

std::string BoundsSuite::reports_csv() const {
  std::string out = BoundReport::csv_header() + "\n";
  for (const auto& r : reports) out += r.csv_row() + "\n";
  return out;
}

std::string BoundsSuite::scaling_csv() const {
  std::string out = "nodes,seed,epsilon\n";
  for (const auto& row : scaling) {
    for (std::size_t s = 0; s < row.epsilon.size(); ++s) {
      out += std::to_string(row.nodes) + "," + std::to_string(s) + "," + fmt(row.epsilon[s]) + "\n";
    }
    out += std::to_string(row.nodes) + ",median," + fmt(row.median) + "\n";
  }
  return out;
}

BoundsSuite run_bounds_suite(const BoundsSuiteConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  BoundsSuite suite;
  FitConfig fit = cfg.fit;
  std::uint64_t stream = 0;
  auto next_fit = [&] {
    fit.seed = derive_seed(seed, stream++);
    return fit;
  };
  auto strict = [&](const std::string& what, double before, double after) {
    const bool ok = after < before;
    suite.substitutions.push_back({{"case", what}, {"bound", before}, {"substituted", after}, {"strict", ok}});
    if (!ok) suite.substitutions_strict = false;
  };

  for (const auto& pair : catalog()) {
    const UApprox u_hat = fit_components(pair.u, pair.outputs(), pair.domain, cfg.nodes_u, next_fit());
    const ApproxMLP g_hat = fit_mlp(pair.g, pair.intermediate.padded(0.1), cfg.nodes_g, next_fit()).mlp;

    for (double p : cfg.norms) {
      Theorem2Options opt;
      opt.p = p;
      opt.resolution = cfg.resolution;
      BoundReport r = check_theorem2(pair, u_hat, opt);
      r.subject = pair.name;
      strict("theorem2/" + pair.name + "/p" + fmt(p) + "/known-u", r.bound, r.ingredients["bound_known_u"].get<double>());
      suite.reports.push_back(std::move(r));
    }

    BoundReport r3 = check_theorem3(pair, &u_hat, g_hat, cfg.resolution);
    strict("theorem3/" + pair.name + "/known-u", r3.bound, r3.ingredients["bound_known_u"].get<double>());
    strict("theorem3/" + pair.name + "/known-g", r3.bound, r3.ingredients["bound_known_g"].get<double>());
    suite.reports.push_back(r3);

    BoundReport known_u = check_theorem3(pair, nullptr, g_hat, cfg.resolution);
    known_u.subject = pair.name + "/known-u";
    suite.reports.push_back(std::move(known_u));

    if (pair.g_as_mlp) {
      BoundReport exact_g = check_theorem3(pair, &u_hat, *pair.g_as_mlp, cfg.resolution);
      exact_g.subject = pair.name + "/known-g";
      if (exact_g.ingredients["eps_g"].get<double>() != 0.0) suite.known_zero = false;
      suite.reports.push_back(std::move(exact_g));

      const BoundReport both = check_theorem3(pair, nullptr, *pair.g_as_mlp, cfg.resolution);
      if (both.sup_error != 0.0 || both.bound != 0.0) suite.known_zero = false;
    }
  }

  const LayerChain chain = reference_chain();
  std::vector<std::optional<UApprox>> approx;
  for (const auto& layer : chain.layers) {
    const std::size_t outs = layer.u(layer.domain.lo).size();
    approx.emplace_back(fit_components(layer.u, outs, layer.domain, cfg.chain_nodes, next_fit()));
  }
  Theorem4Options t4;
  t4.resolution = cfg.resolution;
  for (double p : cfg.norms) {
    t4.p = p;
    t4.substitutions = true;
    BoundReport r4 = check_theorem4(chain, approx, t4);
    for (const auto& s : r4.ingredients["substitutions"]) {
      strict("theorem4/p" + fmt(p) + "/known-" + s["layer"].get<std::string>(), r4.bound, s["bound"].get<double>());
    }
    suite.reports.push_back(std::move(r4));

    t4.substitutions = false;
    for (std::size_t a = 0; a < approx.size(); ++a) {
      std::vector<std::optional<UApprox>> single(approx.size());
      single[a] = approx[a];
      BoundReport one = check_theorem4(chain, single, t4);
      one.subject = "chain/only-" + chain.layers[a].name;
      suite.reports.push_back(std::move(one));
    }
    const BoundReport none = check_theorem4(chain, std::vector<std::optional<UApprox>>(approx.size()), t4);
    if (none.sup_error != 0.0 || none.bound != 0.0) suite.known_zero = false;
  }
  suite.product = lipschitz_product(chain, 2.0, cfg.resolution);

  const Box line{{-1.0}, {1.0}};
  for (std::size_t n : cfg.scaling_nodes) {
    ScalingRow row;
    row.nodes = n;
    for (std::size_t s = 0; s < cfg.scaling_seeds; ++s) {
      FitConfig c = cfg.fit;
      c.seed = derive_seed(seed, 1000 + s);
      row.epsilon.push_back(fit_mlp([](const Point& x) { return std::sin(3.0 * x[0]); }, line, n, c).epsilon);
    }
    std::vector<double> sorted = row.epsilon;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    row.median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    if (!suite.scaling.empty() && row.median > suite.scaling.back().median) suite.scaling_monotone = false;
    suite.scaling.push_back(std::move(row));
  }
  return suite;
}

}  // namespace kol
