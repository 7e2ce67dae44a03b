#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kol/graph.hpp"
#include "kol/tensor.hpp"

namespace kol {

/// Second-derivative kernels per scale. Kernels are square with odd side and
/// indexed [row = y][col = x].
struct ScaleBank {
  std::vector<double> sigmas;
  std::vector<Tensor> kxx, kxy, kyy;
  bool trainable = false;

  std::size_t size() const { return sigmas.size(); }
  std::size_t kernel_size(std::size_t i) const { return kxx.at(i).dim(0); }
  void validate() const;
};

/// Odd kernel side covering +-half_width_sigmas * sigma: ceil(2 hw sigma),
/// rounded up to odd.
std::size_t gaussian_kernel_size(double sigma, double half_width_sigmas = 3.0);

/// Sampled Gaussian second derivatives at the given scales.
ScaleBank gaussian_bank(const std::vector<double>& sigmas, double half_width_sigmas = 3.0, bool trainable = false);
/// `count` scales in geometric progression from sigma_min to sigma_max.
ScaleBank geometric_bank(std::size_t count = 8, double sigma_min = 1.0, double sigma_max = 4.0,
                         double half_width_sigmas = 3.0, bool trainable = false);

enum class Polarity { dark, bright };

Polarity polarity_from_string(const std::string& s);
std::string to_string(Polarity p);

struct FrangiParams {
  double beta = 0.5;
  /// Structureness sensitivity; unset means half the largest Hessian
  /// Frobenius norm of the image over all scales.
  std::optional<double> c;
  Polarity polarity = Polarity::dark;

  void validate() const;
};

/// Zero mean, unit variance (a constant image maps to zeros).
Tensor normalize_image(const Tensor& img);

/// Reflect-padded convolution with the bank's kernels at one scale, scaled by
/// sigma^2. Output (3, H, W): h_xx, h_xy, h_yy.
Tensor hessian(const Tensor& img, const ScaleBank& bank, std::size_t scale_index);

/// Eigenvalues of the symmetric fields in a (3, H, W) Hessian, ordered
/// |l1| <= |l2|; on a magnitude tie l2 is the algebraically larger one.
std::pair<Tensor, Tensor> eig2x2(const Tensor& h);

/// Frangi vesselness; zero where l2 has the wrong sign for the polarity or
/// |l2| < 1e-12.
Tensor vesselness(const Tensor& l1, const Tensor& l2, const FrangiParams& params, double c);

/// Largest Frobenius norm over all pixels of a (3, H, W) Hessian.
double max_frobenius(const Tensor& h);

/// Per-pixel maximum of the vesselness over all scales of the normalised image.
Tensor frangi_multiscale(const Tensor& img, const ScaleBank& bank, const FrangiParams& params);

/// Graph operators of the network.
OperatorPtr hessian_op(double sigma);
OperatorPtr eig2x2_op();
OperatorPtr max_frobenius_op();
OperatorPtr vesselness_op(Polarity polarity);

/// Differentiable Frangi filter: normalised image -> per-scale Hessian
/// convolutions -> eigenvalues -> vesselness -> max over scales.
struct FrangiNetwork {
  static constexpr const char* kInput = "image";

  Graph graph;
  std::vector<double> sigmas;
  FrangiParams params;

  /// Normalises `img` and evaluates the graph.
  Tensor predict(const Tensor& img) const;
  Bindings bind(const Tensor& img) const;
  ScaleBank bank() const;
  static std::string kernel_name(const char* which, std::size_t scale);
};

/// With `head_trainable`, beta and c become trainable scalars (params.c must
/// then be set to the initial value).
FrangiNetwork frangi_network(const ScaleBank& bank, const FrangiParams& params, bool head_trainable = false);

/// Trainable scalar count: 3 * sum of kernel areas for a trainable bank,
/// plus 2 with a trainable head.
std::size_t frangi_param_count(const ScaleBank& bank, bool head_trainable);

}  // namespace kol
