#include "kol/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "kol/errors.hpp"
#include "kol/losses.hpp"
#include "kol/ops.hpp"
#include "kol/optim.hpp"
#include "kol/random.hpp"

namespace kol {

void Box::validate() const {
  if (lo.empty() || lo.size() != hi.size()) throw ArgumentError("box bounds must be non-empty and of equal length");
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || !(lo[i] <= hi[i])) {
      throw ArgumentError("box must satisfy lo <= hi with finite bounds");
    }
  }
}

bool Box::contains(const Point& x, double tol) const {
  if (x.size() != dim()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
  }
  return true;
}

bool Box::contains(const Box& other, double tol) const { return contains(other.lo, tol) && contains(other.hi, tol); }

Box Box::padded(double fraction) const {
  Box b = *this;
  for (std::size_t i = 0; i < dim(); ++i) {
    const double m = fraction * (hi[i] - lo[i]);
    b.lo[i] -= m;
    b.hi[i] += m;
  }
  return b;
}

std::vector<Point> Box::grid(std::size_t resolution) const {
  validate();
  if (resolution < 2) throw ArgumentError("grid resolution must be >= 2");
  const std::size_t d = dim();
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= resolution;
  std::vector<Point> out;
  out.reserve(total);
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t n = 0; n < total; ++n) {
    Point p(d);
    for (std::size_t i = 0; i < d; ++i) {
      const double t = static_cast<double>(idx[i]) / static_cast<double>(resolution - 1);
      p[i] = idx[i] + 1 == resolution ? hi[i] : lo[i] + t * (hi[i] - lo[i]);
    }
    out.push_back(std::move(p));
    for (std::size_t i = d; i-- > 0;) {
      if (++idx[i] < resolution) break;
      idx[i] = 0;
    }
  }
  return out;
}

Box Box::hull(const std::vector<Point>& points) {
  if (points.empty()) throw ArgumentError("hull of an empty point set");
  Box b{points.front(), points.front()};
  for (const auto& p : points) {
    if (p.size() != b.dim()) throw ArgumentError("hull: points of mixed dimension");
    for (std::size_t i = 0; i < p.size(); ++i) {
      b.lo[i] = std::min(b.lo[i], p[i]);
      b.hi[i] = std::max(b.hi[i], p[i]);
    }
  }
  return b;
}

nlohmann::json Box::to_json() const { return {{"lo", lo}, {"hi", hi}}; }

Activation activation_from_string(const std::string& s) {
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "tanh") return Activation::tanh;
  throw ArgumentError("unknown activation '" + s + "'");
}

std::string to_string(Activation a) { return a == Activation::sigmoid ? "sigmoid" : "tanh"; }

double activate(Activation a, double t) {
  return a == Activation::sigmoid ? 1.0 / (1.0 + std::exp(-t)) : std::tanh(t);
}

double activation_slope(Activation a, double t) {
  const double y = activate(a, t);
  return a == Activation::sigmoid ? y * (1.0 - y) : 1.0 - y * y;
}

double activation_lipschitz(Activation a) { return a == Activation::sigmoid ? 0.25 : 1.0; }

void ApproxMLP::validate() const {
  if (weights.rank() != 2 || weights.dim(0) == 0 || weights.dim(1) < 2 || weights.is_complex()) {
    throw ArgumentError("mlp weights must be a real (N, d + 1) matrix with d >= 1");
  }
  if (coefficients.shape() != Shape{1, nodes()} || coefficients.is_complex()) {
    throw ArgumentError("mlp coefficients must have shape (1, N)");
  }
}

double ApproxMLP::operator()(const Point& x) const {
  const std::size_t d = inputs();
  if (x.size() != d) throw ArgumentError("mlp: input dimension mismatch");
  double out = 0.0;
  for (std::size_t j = 0; j < nodes(); ++j) {
    double t = weights.at(j, d);
    for (std::size_t i = 0; i < d; ++i) t += weights.at(j, i) * x[i];
    out += coefficients.at(0, j) * activate(activation, t);
  }
  return out;
}

Point ApproxMLP::gradient(const Point& x) const {
  const std::size_t d = inputs();
  if (x.size() != d) throw ArgumentError("mlp: input dimension mismatch");
  Point g(d, 0.0);
  for (std::size_t j = 0; j < nodes(); ++j) {
    double t = weights.at(j, d);
    for (std::size_t i = 0; i < d; ++i) t += weights.at(j, i) * x[i];
    const double s = coefficients.at(0, j) * activation_slope(activation, t);
    for (std::size_t i = 0; i < d; ++i) g[i] += s * weights.at(j, i);
  }
  return g;
}

double ApproxMLP::projection(std::size_t j, const Point& e) const {
  const std::size_t d = inputs();
  if (e.size() != d || j >= nodes()) throw ArgumentError("mlp projection: bad index or dimension");
  double t = 0.0;
  for (std::size_t i = 0; i < d; ++i) t += weights.at(j, i) * e[i];
  return t;
}

nlohmann::json ApproxMLP::to_json() const {
  nlohmann::json w = nlohmann::json::array();
  for (std::size_t j = 0; j < nodes(); ++j) {
    std::vector<double> row(weights.values().begin() + j * (inputs() + 1),
                            weights.values().begin() + (j + 1) * (inputs() + 1));
    w.push_back(row);
  }
  const auto c = coefficients.values();
  return {{"activation", to_string(activation)},
          {"nodes", nodes()},
          {"weights", w},
          {"coefficients", std::vector<double>(c.begin(), c.end())}};
}

ApproxMLP MlpNetwork::mlp(Activation a) const {
  return {a, graph.parameter_value(kWeights), graph.parameter_value(kCoefficients)};
}

MlpNetwork mlp_network(const ApproxMLP& init) {
  init.validate();
  MlpNetwork net;
  Graph& g = net.graph;
  const NodeId x = g.input(MlpNetwork::kInput);
  const NodeId w = g.parameter(MlpNetwork::kWeights, init.weights);
  const NodeId c = g.parameter(MlpNetwork::kCoefficients, init.coefficients);
  const NodeId pre = g.apply(ops::matmul(), {w, x}, "pre");
  const NodeId h = g.apply(init.activation == Activation::sigmoid ? ops::sigmoid() : ops::tanh(), {pre}, "hidden");
  g.apply(ops::matmul(), {c, h}, "out");
  return net;
}

Tensor design_matrix(const std::vector<Point>& points) {
  if (points.empty()) throw ArgumentError("design matrix needs at least one point");
  const std::size_t d = points.front().size(), m = points.size();
  Tensor x({d + 1, m}, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    if (points[k].size() != d) throw ArgumentError("design matrix: points of mixed dimension");
    for (std::size_t i = 0; i < d; ++i) x.at(i, k) = points[k][i];
    x.at(d, k) = 1.0;
  }
  return x;
}

ApproxMLP random_mlp(std::size_t inputs, std::size_t nodes, std::uint64_t seed, Activation a) {
  if (inputs == 0 || nodes == 0) throw ArgumentError("random_mlp: inputs and nodes must be positive");
  std::mt19937_64 rng(seed);
  ApproxMLP m{a, Tensor({nodes, inputs + 1}), Tensor({1, nodes})};
  for (auto& v : m.weights.values()) v = normal(rng);
  for (auto& v : m.coefficients.values()) v = normal(rng);
  return m;
}

void FitConfig::validate() const {
  if (steps > 0 && !(learning_rate > 0.0)) throw ArgumentError("fit_mlp: learning rate must be positive");
  if (train_resolution == 1 || eval_resolution < 2) throw ArgumentError("fit_mlp: grid resolutions must be >= 2");
  if (!(ridge >= 0.0)) throw ArgumentError("fit_mlp: ridge must be >= 0");
  if (restarts == 0) throw ArgumentError("fit_mlp: restarts must be >= 1");
}

namespace {

// Solves the symmetric positive definite system a x = b in place (Cholesky).
std::vector<double> solve_spd(std::vector<double> a, std::vector<double> b, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) throw NumericalError("fit_mlp: least-squares system is not positive definite");
    d = std::sqrt(d);
    a[j * n + j] = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= a[i * n + k] * b[k];
    b[i] /= a[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) b[i] -= a[k * n + i] * b[k];
    b[i] /= a[i * n + i];
  }
  return b;
}

}  // namespace

FitResult fit_mlp(const ScalarFn& target, const Box& domain, std::size_t nodes, const FitConfig& cfg) {
  domain.validate();
  cfg.validate();
  if (nodes == 0) throw ArgumentError("fit_mlp: N must be >= 1");
  const std::size_t d = domain.dim();
  std::size_t res = cfg.train_resolution;
  if (res == 0) res = d == 1 ? 101 : 31;
  const std::vector<Point> pts = domain.grid(res);
  const std::size_t m = pts.size();
  Tensor y({1, m});
  for (std::size_t k = 0; k < m; ++k) y[k] = target(pts[k]);

  std::mt19937_64 rng(derive_seed(cfg.seed, nodes));
  double half = 0.0;
  for (std::size_t i = 0; i < d; ++i) half += 0.5 * (domain.hi[i] - domain.lo[i]) / static_cast<double>(d);
  if (!(half > 0.0)) half = 1.0;
  const Tensor x = design_matrix(pts);

  ApproxMLP init;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t attempt = 0; attempt < cfg.restarts; ++attempt) {
    ApproxMLP cand{cfg.activation, Tensor({nodes, d + 1}), Tensor({1, nodes})};
    for (std::size_t j = 0; j < nodes; ++j) {
      Point dir(d);
      double len = 0.0;
      while (!(len > 1e-12)) {
        len = 0.0;
        for (auto& v : dir) {
          v = normal(rng);
          len += v * v;
        }
        len = std::sqrt(len);
      }
      // the first candidate is bias-only, the exact form of a constant target
      const double slope = attempt == 0 ? 0.0 : uniform(rng, 0.0, 8.0) / half;
      double bias = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double w = slope * dir[i] / len;
        cand.weights.at(j, i) = w;
        bias -= w * uniform(rng, domain.lo[i], domain.hi[i]);
      }
      cand.weights.at(j, d) = bias;
    }

    std::vector<double> h(nodes * m);
    for (std::size_t j = 0; j < nodes; ++j) {
      for (std::size_t k = 0; k < m; ++k) {
        double t = cand.weights.at(j, d);
        for (std::size_t i = 0; i < d; ++i) t += cand.weights.at(j, i) * pts[k][i];
        h[j * m + k] = activate(cfg.activation, t);
      }
    }
    std::vector<double> gram(nodes * nodes, 0.0), rhs(nodes, 0.0);
    double trace = 0.0;
    for (std::size_t a = 0; a < nodes; ++a) {
      for (std::size_t b = 0; b <= a; ++b) {
        double s = 0.0;
        for (std::size_t k = 0; k < m; ++k) s += h[a * m + k] * h[b * m + k];
        gram[a * nodes + b] = gram[b * nodes + a] = s;
      }
      trace += gram[a * nodes + a];
      for (std::size_t k = 0; k < m; ++k) rhs[a] += h[a * m + k] * y[k];
    }
    const double lambda = std::max(cfg.ridge * trace / static_cast<double>(nodes), 1e-300);
    for (std::size_t a = 0; a < nodes; ++a) gram[a * nodes + a] += lambda;
    const auto c = solve_spd(std::move(gram), std::move(rhs), nodes);
    double resid = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      double fk = 0.0;
      for (std::size_t j = 0; j < nodes; ++j) fk += c[j] * h[j * m + k];
      resid += (fk - y[k]) * (fk - y[k]);
    }
    if (resid < best) {
      best = resid;
      std::copy(c.begin(), c.end(), cand.coefficients.values().begin());
      init = std::move(cand);
    }
  }

  MlpNetwork net = mlp_network(init);
  const Bindings bind{{MlpNetwork::kInput, x}};
  OptimizerConfig oc;
  oc.kind = OptimizerKind::adam;
  oc.learning_rate = cfg.learning_rate > 0.0 ? cfg.learning_rate : 1e-3;
  Optimizer opt(oc);
  double loss = 0.0;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    // linear decay to 1% of the base rate
    const double frac = static_cast<double>(step) / static_cast<double>(cfg.steps);
    opt.set_learning_rate(cfg.learning_rate * (1.0 - 0.99 * frac));
    const Tape tape = net.graph.forward(bind);
    const LossValue lv = loss_mse(tape.output(), y);
    if (!std::isfinite(lv.value)) {
      throw NumericalError("fit_mlp diverged at step " + std::to_string(step) + " (N = " + std::to_string(nodes) +
                           ", last finite loss " + std::to_string(loss) + ")");
    }
    loss = lv.value;
    opt.step(net.graph, net.graph.backward(tape, lv.grad));
  }

  FitResult r;
  r.mlp = net.mlp(cfg.activation);
  r.train_mse = loss_mse(net.graph.evaluate(bind), y).value;
  if (!std::isfinite(r.train_mse)) throw NumericalError("fit_mlp diverged in the final step");
  r.epsilon = sup_difference(target, [&](const Point& p) { return r.mlp(p); }, domain, cfg.eval_resolution);
  return r;
}

double sup_difference(const ScalarFn& a, const ScalarFn& b, const Box& domain, std::size_t resolution) {
  double s = 0.0;
  for (const auto& p : domain.grid(resolution)) s = std::max(s, std::abs(a(p) - b(p)));
  return s;
}

}  // namespace kol
