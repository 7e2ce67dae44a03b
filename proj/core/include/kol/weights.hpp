#pragma once

#include "kol/geometry.hpp"
#include "kol/tensor.hpp"

namespace kol {

/// Per-(view, detector) multiplicative weight, the diagonal W.
struct WeightImage {
  Tensor values;  ///< shape (n_angles, n_det)
  bool trainable = false;
};

/// cos(gamma) per detector column, identical for every view.
WeightImage cosine_weights(const FanBeamGeometry& g);

/// Parker short-scan redundancy weight for source angle `beta` in
/// [0, pi + 2 delta] and fan angle `gamma`, with delta = half the overscan
/// beyond pi. Uses this library's fan-angle sign convention, where the ray
/// (beta, gamma) is measured again as (beta + pi - 2 gamma, -gamma).
double parker_weight(double beta, double gamma, double delta);

/// Parker weights sampled on the geometry's views. Requires
/// scan_range >= pi + 2 gamma_max (ArgumentError otherwise).
WeightImage parker_weights(const FanBeamGeometry& g);

/// Elementwise product of two weight images.
WeightImage combine(const WeightImage& a, const WeightImage& b);

}  // namespace kol
