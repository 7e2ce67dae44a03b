#include "kol/tensor_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kol/errors.hpp"

namespace kol {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ArgumentError(std::string(what) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                        shape_string(b.shape()));
  }
}

template <class RealFn, class ComplexFn>
Tensor binary(const Tensor& a, const Tensor& b, const char* what, RealFn rf, ComplexFn cf) {
  require_same_shape(a, b, what);
  if (a.is_complex() || b.is_complex()) {
    const Tensor ca = a.to_complex();
    const Tensor cb = b.to_complex();
    std::vector<Complex> out(ca.size());
    auto x = ca.cvalues();
    auto y = cb.cvalues();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = cf(x[i], y[i]);
    return Tensor(a.shape(), std::move(out));
  }
  std::vector<double> out(a.size());
  auto x = a.values();
  auto y = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = rf(x[i], y[i]);
  return Tensor(a.shape(), std::move(out));
}

template <class Fn>
Tensor unary_real(const Tensor& a, const char* what, Fn fn) {
  if (a.is_complex()) throw ArgumentError(std::string(what) + " is defined for real tensors only");
  std::vector<double> out(a.size());
  auto x = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(x[i]);
  return Tensor(a.shape(), std::move(out));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(a, b, "add", std::plus<double>(), std::plus<Complex>());
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(a, b, "sub", std::minus<double>(), std::minus<Complex>());
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(a, b, "mul", std::multiplies<double>(), std::multiplies<Complex>());
}

Tensor maximum(const Tensor& a, const Tensor& b) {
  if (a.is_complex() || b.is_complex()) throw ArgumentError("max is defined for real tensors only");
  return binary(
      a, b, "max", [](double x, double y) { return std::max(x, y); },
      [](Complex x, Complex) { return x; });
}

Tensor relu(const Tensor& a) {
  return unary_real(a, "relu", [](double x) { return x > 0.0 ? x : 0.0; });
}

Tensor exp(const Tensor& a) {
  return unary_real(a, "exp", [](double x) { return std::exp(x); });
}

Tensor abs(const Tensor& a) {
  if (a.is_complex()) {
    auto x = a.cvalues();
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(x[i]);
    return Tensor(a.shape(), std::move(out));
  }
  return unary_real(a, "abs", [](double x) { return std::fabs(x); });
}

Tensor elementwise(Elementwise op, const Tensor& a, const std::optional<Tensor>& b) {
  auto need_b = [&]() -> const Tensor& {
    if (!b) throw ArgumentError("binary elementwise op requires a second operand");
    return *b;
  };
  switch (op) {
    case Elementwise::add: return add(a, need_b());
    case Elementwise::sub: return sub(a, need_b());
    case Elementwise::mul: return mul(a, need_b());
    case Elementwise::max: return maximum(a, need_b());
    case Elementwise::relu: return relu(a);
    case Elementwise::exp: return exp(a);
    case Elementwise::abs: return abs(a);
  }
  throw ArgumentError("unknown elementwise op");
}

Tensor scale(const Tensor& a, double s) {
  if (a.is_complex()) return scale(a, Complex(s, 0.0));
  return unary_real(a, "scale", [s](double x) { return s * x; });
}

Tensor scale(const Tensor& a, Complex s) {
  const Tensor c = a.to_complex();
  auto x = c.cvalues();
  std::vector<Complex> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * x[i];
  return Tensor(a.shape(), std::move(out));
}

Tensor axpy(const Tensor& a, double s, const Tensor& b) {
  return binary(
      a, b, "axpy", [s](double x, double y) { return x + s * y; },
      [s](Complex x, Complex y) { return x + s * y; });
}

double norm(const Tensor& t, NormKind p) {
  double acc = 0.0;
  auto visit = [&](double m) {
    switch (p) {
      case NormKind::l1: acc += m; break;
      case NormKind::l2: acc += m * m; break;
      case NormKind::inf: acc = std::max(acc, m); break;
    }
  };
  if (t.is_complex()) {
    for (const auto& z : t.cvalues()) visit(std::abs(z));
  } else {
    for (double v : t.values()) visit(std::fabs(v));
  }
  return p == NormKind::l2 ? std::sqrt(acc) : acc;
}

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  if (a.is_complex() || b.is_complex()) {
    const Tensor ca = a.to_complex();
    const Tensor cb = b.to_complex();
    auto x = ca.cvalues();
    auto y = cb.cvalues();
    for (std::size_t i = 0; i < x.size(); ++i) acc += (std::conj(x[i]) * y[i]).real();
    return acc;
  }
  auto x = a.values();
  auto y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

double sum(const Tensor& t) {
  double acc = 0.0;
  for (double v : t.values()) acc += v;
  return acc;
}

double mean(const Tensor& t) { return sum(t) / static_cast<double>(t.size()); }

double max_value(const Tensor& t) {
  auto v = t.values();
  return *std::max_element(v.begin(), v.end());
}

double min_value(const Tensor& t) {
  auto v = t.values();
  return *std::min_element(v.begin(), v.end());
}

}  // namespace kol
