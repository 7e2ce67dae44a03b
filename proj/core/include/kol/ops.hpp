#pragma once

#include <functional>
#include <memory>
#include <string>

#include "kol/fft.hpp"
#include "kol/graph.hpp"

/// Generic graph operators. Domain-specific operators (projectors, Frangi
/// blocks) live next to their modules.
namespace kol::ops {

/// Elementwise sum / difference / product of two same-shape real tensors.
OperatorPtr add();
OperatorPtr sub();
OperatorPtr mul();
/// Tensor times a shape-{1} scalar: inputs (x, s).
OperatorPtr scale_by();
/// Multiplication by a fixed constant.
OperatorPtr constant_scale(double factor);
OperatorPtr identity();
/// relu with sub-gradient 0 at 0.
OperatorPtr relu();
OperatorPtr exp();
OperatorPtr sigmoid();
OperatorPtr tanh();
OperatorPtr square();
/// Elementwise maximum over any number of same-shape inputs; the gradient
/// goes to the first input attaining the maximum.
OperatorPtr max();
/// Sum of all entries, output shape {1}.
OperatorPtr sum();
/// (m x k) * (k x n) matrix product.
OperatorPtr matmul();

/// Known linear operator given by a forward map and its adjoint. The
/// backward rule is the adjoint, so the pair must satisfy <Ax, y> = <x, A^T y>.
struct LinearMap {
  std::string name;
  Shape in_shape;
  Shape out_shape;
  std::function<Tensor(const Tensor&)> apply;
  std::function<Tensor(const Tensor&)> adjoint;
};
OperatorPtr linear(LinearMap map);

/// Circulant filter applied independently to each row of a real
/// (rows x n) tensor: rows are zero-padded to the spectrum length L >= n,
/// filtered with F^H diag(C) F and cropped back to n. Inputs are the rows and
/// the halfcomplex parameter vector of length L describing C.
OperatorPtr row_filter(std::size_t row_length, std::size_t spectrum_length);

/// Spectral-domain diagonal followed by the inverse DFT: rows of a complex
/// (rows x n) tensor are multiplied by C (halfcomplex parameters, length n)
/// and transformed back with F^H; the real part is returned.
OperatorPtr spectral_row_filter(std::size_t row_length);

/// Applies a row filter outside a graph: rows (r x n), spectrum length L >= n.
Tensor apply_row_filter(const Tensor& rows, std::span<const Complex> spectrum);

}  // namespace kol::ops
