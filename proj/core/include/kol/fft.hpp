#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "kol/tensor.hpp"

namespace kol {

/// Unitary forward DFT along `axis` (1/sqrt(n) scaling); other axes batched.
/// Real input is promoted to complex.
Tensor dft(const Tensor& t, std::size_t axis);
/// Unitary inverse DFT along `axis`. Output stays complex.
Tensor inverse_dft(const Tensor& t, std::size_t axis);

/// In-place unitary transform of one contiguous line. `inverse` selects the
/// positive exponent.
void dft_line(std::span<Complex> line, bool inverse);

/// Frequency-domain diagonal of a circulant operator acting on one axis.
///
/// A circulant filter on a length-n axis is y = F^H diag(values) F x with the
/// unitary F, i.e. a circular convolution with the kernel whose unnormalized
/// DFT is `values`.
struct Spectrum {
  std::vector<Complex> values;
  std::size_t axis = 0;
  /// The spectrum belongs to a real-valued kernel and must be conjugate
  /// symmetric: values[k] == conj(values[n - k]).
  bool real_kernel = true;

  std::size_t size() const { return values.size(); }
  bool is_conjugate_symmetric(double tol = 0.0) const;
  /// Throws ArgumentError if `real_kernel` is set but the symmetry is violated.
  void validate(double tol = 1e-12) const;
};

/// Spectrum of a real kernel (unnormalized DFT).
Spectrum spectrum_of_kernel(std::span<const double> kernel, std::size_t axis = 0);

/// Real parameterization of conjugate-symmetric spectra of length n.
///
/// Layout follows the FFTW halfcomplex order: p[0] = Re C_0,
/// p[k] = Re C_k and p[n-k] = Im C_k for 0 < k < n/2, p[n/2] = Re C_{n/2}
/// for even n. The map is a bijection between R^n and the conjugate-symmetric
/// spectra, so trainable filters keep exactly n degrees of freedom.
std::vector<Complex> halfcomplex_to_spectrum(std::span<const double> params);
std::vector<double> spectrum_to_halfcomplex(std::span<const Complex> spectrum);
/// Pulls a gradient w.r.t. the complex spectrum back onto halfcomplex
/// parameters. `grad_re[k]`/`grad_im[k]` are dL/dRe C_k and dL/dIm C_k.
std::vector<double> halfcomplex_pullback(std::span<const double> grad_re,
                                         std::span<const double> grad_im);

}  // namespace kol
