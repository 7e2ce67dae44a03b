#include "kol/filter.hpp"

#include <cmath>

#include "kol/errors.hpp"
#include "kol/ops.hpp"

namespace kol {

Tensor FilterKernel::parameters() const {
  return Tensor(Shape{spectrum.size()}, spectrum_to_halfcomplex(spectrum.values));
}

FilterKernel FilterKernel::from_parameters(const Tensor& params, std::size_t row_length, bool trainable) {
  FilterKernel k;
  k.spectrum = Spectrum{halfcomplex_to_spectrum(params.values()), 1, true};
  k.row_length = row_length;
  k.trainable = trainable;
  if (k.spectrum.size() < row_length) throw ArgumentError("filter spectrum shorter than the detector row");
  return k;
}

Tensor FilterKernel::apply(const Tensor& rows) const {
  if (rows.rank() != 2 || rows.dim(1) != row_length) {
    throw ArgumentError("filter expects rows of length " + std::to_string(row_length) + ", got " +
                        shape_string(rows.shape()));
  }
  return ops::apply_row_filter(rows, spectrum.values);
}

std::vector<double> ramlak_kernel(std::size_t length, double tau) {
  if (length == 0 || !(tau > 0.0)) throw ArgumentError("ramlak_kernel: invalid length or spacing");
  std::vector<double> h(length, 0.0);
  h[0] = 0.25 / tau;
  for (std::size_t j = 1; j < length; ++j) {
    // Circular index j stands for offset j (first half) or j - length.
    const long k = 2 * j < length ? static_cast<long>(j) : static_cast<long>(j) - static_cast<long>(length);
    if (k % 2 != 0) h[j] = -1.0 / (M_PI * M_PI * static_cast<double>(k * k) * tau);
  }
  return h;
}

FilterKernel ramp_filter(std::size_t row_length, double tau, bool padded) {
  std::size_t length = row_length;
  if (padded) length = 2 * row_length;
  FilterKernel k;
  k.spectrum = spectrum_of_kernel(ramlak_kernel(length, tau), 1);
  k.row_length = row_length;
  return k;
}

FilterKernel ramp_filter(const FanBeamGeometry& g, bool padded) {
  return ramp_filter(g.n_det, g.iso_spacing(), padded);
}

FilterKernel ramp_filter(const ParallelGeometry& g, bool padded) {
  return ramp_filter(g.n_det, g.det_spacing, padded);
}

}  // namespace kol
