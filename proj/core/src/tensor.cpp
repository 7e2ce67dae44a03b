#include "kol/tensor.hpp"

#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "kol/errors.hpp"

namespace kol {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty()) throw ArgumentError("tensor shape must have at least one dimension");
  for (auto d : shape) {
    if (d == 0) throw ArgumentError("tensor dimensions must be positive, got " + shape_string(shape));
  }
}

}  // namespace

Tensor::Tensor() : shape_{1}, real_(1, 0.0) {}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  real_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), real_(std::move(data)) {
  check_shape(shape_);
  if (real_.size() != shape_size(shape_)) {
    throw ArgumentError("data length " + std::to_string(real_.size()) + " does not match shape " +
                        shape_string(shape_));
  }
}

Tensor::Tensor(Shape shape, std::vector<Complex> data)
    : shape_(std::move(shape)), dtype_(DType::complex), complex_(std::move(data)) {
  check_shape(shape_);
  if (complex_.size() != shape_size(shape_)) {
    throw ArgumentError("data length " + std::to_string(complex_.size()) + " does not match shape " +
                        shape_string(shape_));
  }
}

Tensor Tensor::complex_zeros(Shape shape) {
  const auto n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<Complex>(n));
}

Tensor Tensor::vector(std::vector<double> values) {
  const auto n = values.size();
  return Tensor(Shape{n}, std::move(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ArgumentError("axis " + std::to_string(axis) + " out of range for shape " + shape_string(shape_));
  }
  return shape_[axis];
}

std::span<double> Tensor::values() {
  if (is_complex()) throw ArgumentError("real view requested on a complex tensor");
  return real_;
}

std::span<const double> Tensor::values() const {
  if (is_complex()) throw ArgumentError("real view requested on a complex tensor");
  return real_;
}

std::span<Complex> Tensor::cvalues() {
  if (!is_complex()) throw ArgumentError("complex view requested on a real tensor");
  return complex_;
}

std::span<const Complex> Tensor::cvalues() const {
  if (!is_complex()) throw ArgumentError("complex view requested on a real tensor");
  return complex_;
}

double Tensor::at(std::size_t row, std::size_t col) const {
  return real_[row * shape_.back() + col];
}

double& Tensor::at(std::size_t row, std::size_t col) {
  return real_[row * shape_.back() + col];
}

double Tensor::item() const {
  if (size() != 1) throw ArgumentError("item() requires a single-element tensor, got " + shape_string(shape_));
  return is_complex() ? complex_[0].real() : real_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != size()) {
    throw ArgumentError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  Tensor out = *this;
  check_shape(shape);
  out.shape_ = std::move(shape);
  return out;
}

Tensor Tensor::real_part() const {
  if (!is_complex()) return *this;
  std::vector<double> re(complex_.size());
  for (std::size_t i = 0; i < re.size(); ++i) re[i] = complex_[i].real();
  return Tensor(shape_, std::move(re));
}

Tensor Tensor::imag_part() const {
  std::vector<double> im(size(), 0.0);
  if (is_complex()) {
    for (std::size_t i = 0; i < im.size(); ++i) im[i] = complex_[i].imag();
  }
  return Tensor(shape_, std::move(im));
}

Tensor Tensor::to_complex() const {
  if (is_complex()) return *this;
  std::vector<Complex> c(real_.begin(), real_.end());
  return Tensor(shape_, std::move(c));
}

bool Tensor::all_finite() const {
  if (is_complex()) {
    for (const auto& z : complex_) {
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    }
    return true;
  }
  for (double v : real_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool Tensor::identical(const Tensor& other) const {
  if (shape_ != other.shape_ || dtype_ != other.dtype_) return false;
  if (is_complex()) {
    return std::memcmp(complex_.data(), other.complex_.data(), complex_.size() * sizeof(Complex)) == 0;
  }
  return std::memcmp(real_.data(), other.real_.data(), real_.size() * sizeof(double)) == 0;
}

}  // namespace kol
