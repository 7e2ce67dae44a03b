#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kol/graph.hpp"
#include "kol/tensor.hpp"

namespace kol {

using Point = std::vector<double>;
using ScalarFn = std::function<double(const Point&)>;

/// Axis-aligned box [lo, hi] in R^d.
struct Box {
  Point lo;
  Point hi;

  std::size_t dim() const { return lo.size(); }
  void validate() const;
  bool contains(const Point& x, double tol = 0.0) const;
  bool contains(const Box& other, double tol = 0.0) const;
  /// Grows every side by `fraction` of its width.
  Box padded(double fraction) const;
  /// Tensor-product grid with `resolution` points per axis, endpoints included,
  /// last axis fastest.
  std::vector<Point> grid(std::size_t resolution) const;
  /// Smallest box containing all points.
  static Box hull(const std::vector<Point>& points);
  nlohmann::json to_json() const;
};

enum class Activation { sigmoid, tanh };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);
double activate(Activation a, double t);
double activation_slope(Activation a, double t);
/// sup |phi'|: 1/4 for the sigmoid, 1 for tanh.
double activation_lipschitz(Activation a);

/// Single hidden layer approximator  x -> sum_i c_i phi(w_i^T [x; 1]).
struct ApproxMLP {
  Activation activation = Activation::sigmoid;
  Tensor weights;       ///< (N, d + 1); the last column multiplies the constant 1
  Tensor coefficients;  ///< (1, N)

  std::size_t nodes() const { return weights.rank() == 2 ? weights.dim(0) : 0; }
  std::size_t inputs() const { return weights.rank() == 2 ? weights.dim(1) - 1 : 0; }
  double l_phi() const { return activation_lipschitz(activation); }
  void validate() const;

  double operator()(const Point& x) const;
  Point gradient(const Point& x) const;
  /// w_j^T e over the input part only (the bias entry of e is zero).
  double projection(std::size_t j, const Point& e) const;
  nlohmann::json to_json() const;
};

/// Graph x -> coefficients * phi(weights * x) where x is a (d + 1, M) design
/// matrix with a ones row; output shape (1, M).
struct MlpNetwork {
  static constexpr const char* kInput = "x";
  static constexpr const char* kWeights = "w";
  static constexpr const char* kCoefficients = "c";
  Graph graph;

  ApproxMLP mlp(Activation a) const;
};

MlpNetwork mlp_network(const ApproxMLP& init);
Tensor design_matrix(const std::vector<Point>& points);

/// Random weights with unit-scale entries; for tests and oracles.
ApproxMLP random_mlp(std::size_t inputs, std::size_t nodes, std::uint64_t seed,
                     Activation a = Activation::sigmoid);

struct FitConfig {
  Activation activation = Activation::sigmoid;
  std::size_t steps = 2000;
  double learning_rate = 1e-2;
  /// Training samples per axis; 0 picks 101 in 1-D and 31 in 2-D.
  std::size_t train_resolution = 0;
  std::size_t eval_resolution = 201;
  std::uint64_t seed = 0;
  /// Ridge factor for the least-squares start of the output coefficients.
  double ridge = 1e-8;
  /// Hidden layers tried (the first one bias-only, the rest random); the one
  /// with the smallest least-squares residual starts the gradient descent.
  std::size_t restarts = 8;

  void validate() const;
};

struct FitResult {
  ApproxMLP mlp;
  double epsilon = 0.0;  ///< grid sup |mlp - target| at eval_resolution
  double train_mse = 0.0;
};

/// Fits an N-node MLP to `target` on `domain`. Hidden units start as random
/// ridges centred inside the box, output coefficients by regularised least
/// squares; then all weights train by full-batch Adam on the MSE.
/// Throws NumericalError if the loss becomes non-finite.
FitResult fit_mlp(const ScalarFn& target, const Box& domain, std::size_t nodes, const FitConfig& cfg = {});

/// sup over the grid of |a - b|.
double sup_difference(const ScalarFn& a, const ScalarFn& b, const Box& domain, std::size_t resolution);

}  // namespace kol
