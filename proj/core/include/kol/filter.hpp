#pragma once

#include <cstddef>

#include "kol/fft.hpp"
#include "kol/geometry.hpp"
#include "kol/tensor.hpp"

namespace kol {

/// Circulant reconstruction filter K = F^H C F shared by all projection rows.
struct FilterKernel {
  Spectrum spectrum;           ///< length L >= row_length, conjugate symmetric
  std::size_t row_length = 0;  ///< detector bins per row; rows are zero-padded to L
  bool trainable = false;

  /// Halfcomplex parameter vector (length L) describing the spectrum.
  Tensor parameters() const;
  static FilterKernel from_parameters(const Tensor& params, std::size_t row_length, bool trainable);
  Tensor apply(const Tensor& rows) const;
};

/// Band-limited Ram-Lak kernel sampled at spacing `tau` on a circular grid of
/// `length` taps: tau * h(k tau) with h(0) = 1/(4 tau^2),
/// h(k tau) = -1/(pi^2 k^2 tau^2) for odd k, 0 for even k != 0. The taps sum
/// to roughly 1 / (pi^2 tau length / 2), the truncated tail.
std::vector<double> ramlak_kernel(std::size_t length, double tau);

/// Ram-Lak filter for rows of `row_length` bins at detector spacing `tau`.
/// `padded` zero-pads to the smallest even length >= 2 * row_length so the
/// circular convolution equals the linear one on the row.
FilterKernel ramp_filter(std::size_t row_length, double tau, bool padded = true);
/// Ramp filter for a fan-beam geometry (spacing scaled to the isocentre).
FilterKernel ramp_filter(const FanBeamGeometry& g, bool padded = true);
/// Ramp filter for a parallel-beam geometry.
FilterKernel ramp_filter(const ParallelGeometry& g, bool padded = true);

}  // namespace kol
