#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kol/mlp.hpp"

namespace kol {

using VectorFn = std::function<Point(const Point&)>;
using GradientFn = std::function<Point(const Point&)>;
/// Rows of the Jacobian, one per output component.
using JacobianFn = std::function<std::vector<Point>(const Point&)>;

/// f = g(u(x)) with u: D -> S (vector valued) and g: S -> R.
struct FunctionPair {
  std::string name;
  Box domain;
  Box intermediate;
  VectorFn u;
  JacobianFn u_jacobian;
  ScalarFn g;
  GradientFn g_gradient;
  /// sup over `box` of ||grad g||_p in closed form.
  std::function<double(const Box& box, double p)> g_lipschitz;
  /// g written exactly as a one-layer MLP, when it has that form.
  std::optional<ApproxMLP> g_as_mlp;

  double f(const Point& x) const { return g(u(x)); }
  std::size_t outputs() const { return intermediate.dim(); }
};

/// (i) affine/affine, (ii) sin-cos pair into a weighted sum of squares,
/// (iii) tanh ramp into a sigmoid ridge.
std::vector<FunctionPair> catalog();

double p_norm(const Point& v, double p);
/// Induced p -> p norm of a matrix given by rows (p in {1, 2}; p = 2 needs at
/// most two columns).
double operator_norm(const std::vector<Point>& rows, double p);

struct LipschitzEstimate {
  double value = 0.0;
  std::string method;  ///< "analytic" or "grid-sup" (a lower estimate of the true sup)
  std::size_t resolution = 0;
  double p = 2.0;

  bool lower_estimate() const { return method == "grid-sup"; }
  nlohmann::json to_json() const;
};

/// Max of ||grad||_p over the grid.
LipschitzEstimate lipschitz(const GradientFn& grad, const Box& domain, double p, std::size_t resolution = 201);
LipschitzEstimate lipschitz_analytic(double value, double p);

/// Componentwise approximation of u: one MLP per output.
using UApprox = std::vector<ApproxMLP>;

Point evaluate(const UApprox& u_hat, const Point& x);

struct ErrorSups {
  std::optional<double> e_g;       ///< sup |f - g_hat(u)|
  std::vector<double> e_u;         ///< sup |u_k - u_hat_k| per component
  std::optional<double> e_f_u;     ///< sup |f - g(u_hat)|
  std::optional<double> e_f;       ///< sup |f - g_hat(u_hat)|, or the single available composition
  nlohmann::json to_json() const;
};

/// Grid sups of the approximation errors. Pass nullptr for a known block; at
/// least one block must be approximated. The grid box must lie in the domain.
ErrorSups measure_errors(const FunctionPair& pair, const UApprox* u_hat, const ApproxMLP* g_hat, const Box& grid,
                         std::size_t resolution = 201);

struct BoundReport {
  std::string theorem;
  std::string subject;
  double p = 2.0;
  double sup_error = 0.0;
  double bound = 0.0;
  bool pointwise = true;  ///< |e_f(x)| <= bound(x) + slack at every grid point
  bool pass = false;
  nlohmann::json ingredients = nlohmann::json::object();

  static constexpr double kSlack = 1e-9;
  nlohmann::json to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

struct Theorem2Options {
  double p = 2.0;
  std::size_t resolution = 201;
  /// Replaces the analytic l_g; used for negative controls.
  std::optional<double> lipschitz_override;
};

/// Known g, approximated u: |e_f(x)| <= l_g ||e_u(x)||_p with l_g over the box
/// spanned by u and u_hat on the grid.
BoundReport check_theorem2(const FunctionPair& pair, const UApprox& u_hat, const Theorem2Options& opt = {});

/// u and g both approximated (u_hat may be nullptr for known u):
/// |e_f(x)| <= sum_j |g_j| l_phi |w_j^T e_u(x)| + eps_g.
BoundReport check_theorem3(const FunctionPair& pair, const UApprox* u_hat, const ApproxMLP& g_hat,
                           std::size_t resolution = 201);

/// One map in a layered chain; `lipschitz(p)` bounds the induced p-norm of
/// its Jacobian everywhere, not only on `domain`.
struct Layer {
  std::string name;
  Box domain;
  VectorFn u;
  JacobianFn jacobian;
  std::function<double(double p)> lipschitz;
};

/// Layers in application order: x -> layers[0] -> layers[1] -> ...
struct LayerChain {
  Box domain;
  std::vector<Layer> layers;

  Point operator()(const Point& x) const;
  void validate() const;
};

/// Three-layer chain R -> R^2 -> R^2 -> R with closed-form Lipschitz bounds.
LayerChain reference_chain();

struct Theorem4Options {
  double p = 2.0;
  std::size_t resolution = 201;
  /// Also re-run with each approximated layer replaced by its exact map.
  bool substitutions = true;
};

/// Per layer: nullopt keeps the exact map, otherwise its approximation.
/// Bound = sum over approximated layers of sup ||e_u(y)||_p times the product
/// of the downstream Lipschitz bounds, with y the approximate intermediate.
BoundReport check_theorem4(const LayerChain& chain, const std::vector<std::optional<UApprox>>& approx,
                           const Theorem4Options& opt = {});

struct ProductCheck {
  double chain = 0.0;               ///< grid sup of ||J_f||
  std::vector<double> layers;       ///< grid sups of ||J_u|| over each layer box and visited points
  double product = 0.0;
  bool holds = false;
  nlohmann::json to_json() const;
};

ProductCheck lipschitz_product(const LayerChain& chain, double p = 2.0, std::size_t resolution = 201);

/// Fits one MLP per output of `fn` on `box`.
UApprox fit_components(const VectorFn& fn, std::size_t outputs, const Box& box, std::size_t nodes,
                       const FitConfig& cfg = {});

struct BoundsSuiteConfig {
  std::size_t resolution = 201;
  std::size_t nodes_u = 8;
  std::size_t nodes_g = 8;
  std::size_t chain_nodes = 12;
  std::vector<double> norms{1.0, 2.0};
  FitConfig fit;
  std::vector<std::size_t> scaling_nodes{4, 8, 16, 32};
  std::size_t scaling_seeds = 3;

  void validate() const;
};

struct ScalingRow {
  std::size_t nodes = 0;
  std::vector<double> epsilon;  ///< one per seed
  double median = 0.0;
};

/// Every catalog check in one pass: theorem reports, known-operator
/// substitutions, exact zero cases, the Lipschitz product and the fit_mlp
/// scaling on sin(3x).
struct BoundsSuite {
  std::vector<BoundReport> reports;
  nlohmann::json substitutions = nlohmann::json::array();
  bool substitutions_strict = true;
  bool known_zero = true;
  ProductCheck product;
  std::vector<ScalingRow> scaling;
  bool scaling_monotone = true;

  bool reports_pass() const;
  nlohmann::json to_json() const;
  std::string reports_csv() const;
  std::string scaling_csv() const;
};

BoundsSuite run_bounds_suite(const BoundsSuiteConfig& cfg, std::uint64_t seed);

}  // namespace kol
