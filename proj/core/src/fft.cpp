#include "kol/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <utility>

#include "kol/errors.hpp"

namespace kol {

namespace {

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is. Plans are created once per (length, direction) and kept for the
// life of the process.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t n, bool inverse) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, inverse);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<Complex> scratch(n);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw NumericalError("FFTW failed to create a plan of length " + std::to_string(n));
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<std::size_t, bool>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

Tensor transform(const Tensor& t, std::size_t axis, bool inverse) {
  if (axis >= t.rank()) {
    throw ArgumentError("dft axis " + std::to_string(axis) + " out of range for shape " + shape_string(t.shape()));
  }
  Tensor out = t.to_complex();
  const Shape& shape = out.shape();
  const std::size_t n = shape[axis];
  std::size_t inner = 1;
  for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
  const std::size_t outer = out.size() / (n * inner);

  auto data = out.cvalues();
  std::vector<Complex> line(n);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      Complex* base = data.data() + o * n * inner + i;
      for (std::size_t k = 0; k < n; ++k) line[k] = base[k * inner];
      dft_line(line, inverse);
      for (std::size_t k = 0; k < n; ++k) base[k * inner] = line[k];
    }
  }
  return out;
}

}  // namespace

void dft_line(std::span<Complex> line, bool inverse) {
  const std::size_t n = line.size();
  if (n == 0) throw ArgumentError("dft of an empty line");
  if (n > 1) {
    auto* buf = reinterpret_cast<fftw_complex*>(line.data());
    fftw_execute_dft(plan_cache().get(n, inverse), buf, buf);
  }
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& z : line) z *= s;
}

Tensor dft(const Tensor& t, std::size_t axis) { return transform(t, axis, false); }

Tensor inverse_dft(const Tensor& t, std::size_t axis) { return transform(t, axis, true); }

bool Spectrum::is_conjugate_symmetric(double tol) const {
  const std::size_t n = values.size();
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(values[k] - std::conj(values[(n - k) % n])) > tol) return false;
  }
  return true;
}

void Spectrum::validate(double tol) const {
  if (values.empty()) throw ArgumentError("spectrum is empty");
  if (real_kernel) {
    double scale = 0.0;
    for (const auto& z : values) scale = std::max(scale, std::abs(z));
    if (!is_conjugate_symmetric(tol * std::max(scale, 1.0))) {
      throw ArgumentError("spectrum flagged real_kernel is not conjugate symmetric");
    }
  }
}

Spectrum spectrum_of_kernel(std::span<const double> kernel, std::size_t axis) {
  std::vector<Complex> line(kernel.begin(), kernel.end());
  dft_line(line, false);
  const double s = std::sqrt(static_cast<double>(line.size()));
  for (auto& z : line) z *= s;
  // Exact symmetry; FFTW output for real input is symmetric only to rounding.
  const std::size_t n = line.size();
  line[0] = Complex(line[0].real(), 0.0);
  if (n % 2 == 0) line[n / 2] = Complex(line[n / 2].real(), 0.0);
  for (std::size_t k = 1; 2 * k < n; ++k) line[n - k] = std::conj(line[k]);
  return Spectrum{std::move(line), axis, true};
}

std::vector<Complex> halfcomplex_to_spectrum(std::span<const double> p) {
  const std::size_t n = p.size();
  std::vector<Complex> c(n);
  if (n == 0) return c;
  c[0] = Complex(p[0], 0.0);
  for (std::size_t k = 1; 2 * k < n; ++k) {
    c[k] = Complex(p[k], p[n - k]);
    c[n - k] = std::conj(c[k]);
  }
  if (n % 2 == 0) c[n / 2] = Complex(p[n / 2], 0.0);
  return c;
}

std::vector<double> spectrum_to_halfcomplex(std::span<const Complex> c) {
  const std::size_t n = c.size();
  std::vector<double> p(n);
  if (n == 0) return p;
  p[0] = c[0].real();
  for (std::size_t k = 1; 2 * k < n; ++k) {
    p[k] = c[k].real();
    p[n - k] = c[k].imag();
  }
  if (n % 2 == 0) p[n / 2] = c[n / 2].real();
  return p;
}

std::vector<double> halfcomplex_pullback(std::span<const double> gr, std::span<const double> gi) {
  const std::size_t n = gr.size();
  if (gi.size() != n) throw ArgumentError("halfcomplex_pullback: length mismatch");
  std::vector<double> dp(n, 0.0);
  if (n == 0) return dp;
  dp[0] = gr[0];
  for (std::size_t k = 1; 2 * k < n; ++k) {
    dp[k] = gr[k] + gr[n - k];
    dp[n - k] = gi[k] - gi[n - k];
  }
  if (n % 2 == 0) dp[n / 2] = gr[n / 2];
  return dp;
}

}  // namespace kol
