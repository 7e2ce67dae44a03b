#include "kol/weights.hpp"

#include <cmath>

#include "kol/errors.hpp"
#include "kol/tensor_ops.hpp"

namespace kol {

WeightImage cosine_weights(const FanBeamGeometry& g) {
  g.validate();
  Tensor w(g.sinogram_shape());
  for (std::size_t a = 0; a < g.n_angles(); ++a) {
    for (std::size_t k = 0; k < g.n_det; ++k) w.at(a, k) = std::cos(g.gamma(k));
  }
  return {std::move(w), false};
}

double parker_weight(double beta, double gamma, double delta) {
  if (beta < 0.0 || beta > M_PI + 2.0 * delta) return 0.0;
  auto s2 = [](double x) {
    const double s = std::sin(x);
    return s * s;
  };
  // Start of the scan: rays measured again near the end.
  if (delta + gamma > 0.0 && beta <= 2.0 * (delta + gamma)) {
    return s2(0.25 * M_PI * beta / (delta + gamma));
  }
  if (delta - gamma > 0.0 && beta >= M_PI + 2.0 * gamma) {
    return s2(0.25 * M_PI * (M_PI + 2.0 * delta - beta) / (delta - gamma));
  }
  if (beta >= M_PI + 2.0 * gamma) return 0.0;
  return 1.0;
}

WeightImage parker_weights(const FanBeamGeometry& g) {
  g.validate();
  const double gmax = g.gamma_max();
  if (g.scan_range < M_PI + 2.0 * gmax - 1e-12) {
    throw ArgumentError("Parker weights need a scan range of at least pi + 2 gamma_max (" +
                        std::to_string(M_PI + 2.0 * gmax) + "), got " + std::to_string(g.scan_range));
  }
  const double delta = 0.5 * (g.scan_range - M_PI);
  Tensor w(g.sinogram_shape());
  for (std::size_t a = 0; a < g.n_angles(); ++a) {
    for (std::size_t k = 0; k < g.n_det; ++k) w.at(a, k) = parker_weight(g.angles[a], g.gamma(k), delta);
  }
  return {std::move(w), false};
}

WeightImage combine(const WeightImage& a, const WeightImage& b) {
  return {mul(a.values, b.values), a.trainable || b.trainable};
}

}  // namespace kol
