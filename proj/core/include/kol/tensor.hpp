#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace kol {

using Complex = std::complex<double>;
using Shape = std::vector<std::size_t>;

enum class DType { real, complex };

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major n-dimensional array of doubles or complex doubles.
///
/// Every dimension is positive and the element count always equals the
/// product of the shape. Tensors have value semantics; copies are deep.
class Tensor {
 public:
  /// A real scalar holding 0.
  Tensor();
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);
  Tensor(Shape shape, std::vector<Complex> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
  static Tensor complex_zeros(Shape shape);
  static Tensor scalar(double v) { return Tensor(Shape{1}, v); }
  static Tensor vector(std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return shape_size(shape_); }
  std::size_t dim(std::size_t axis) const;
  DType dtype() const { return dtype_; }
  bool is_complex() const { return dtype_ == DType::complex; }

  /// Real storage; throws ArgumentError on complex tensors.
  std::span<double> values();
  std::span<const double> values() const;
  /// Complex storage; throws ArgumentError on real tensors.
  std::span<Complex> cvalues();
  std::span<const Complex> cvalues() const;

  double operator[](std::size_t i) const { return real_[i]; }
  double& operator[](std::size_t i) { return real_[i]; }
  double at(std::size_t row, std::size_t col) const;
  double& at(std::size_t row, std::size_t col);
  double item() const;

  Tensor reshaped(Shape shape) const;
  Tensor real_part() const;
  Tensor imag_part() const;
  Tensor to_complex() const;

  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  /// Bitwise equality of shape, dtype and data.
  bool identical(const Tensor& other) const;

 private:
  Shape shape_;
  DType dtype_ = DType::real;
  std::vector<double> real_;
  std::vector<Complex> complex_;
};

}  // namespace kol
