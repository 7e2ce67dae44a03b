#include <doctest.h>

#include <cmath>

#include "kol/errors.hpp"
#include "kol/fft.hpp"
#include "kol/tensor.hpp"
#include "kol/tensor_ops.hpp"
#include "oracles.hpp"

using namespace kol;

TEST_CASE("tensor construction enforces shape") {
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), ArgumentError);
  CHECK_THROWS_AS(Tensor(Shape{0, 3}), ArgumentError);
  Tensor t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.at(1, 2) == 1.5);
  CHECK_THROWS_AS(t.cvalues(), ArgumentError);
}

TEST_CASE("elementwise basics") {
  const Tensor x = Tensor::vector({-1.0, 0.0, 2.0});
  const Tensor r = relu(x);
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 0.0);
  CHECK(r[2] == 2.0);
  CHECK(relu(r).identical(r));
  CHECK(exp(Tensor::vector({0.0}))[0] == 1.0);
  CHECK_THROWS_AS(add(x, Tensor::vector({1.0, 2.0})), ArgumentError);

  const Tensor a = oracle::random_tensor({7, 5}, 1);
  const Tensor b = oracle::random_tensor({7, 5}, 2);
  const Tensor m = mul(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(m[i] == a[i] * b[i]);
  const Tensor mx = maximum(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(mx[i] == std::max(a[i], b[i]));
}

TEST_CASE("relu is idempotent on random data") {
  const Tensor x = oracle::random_tensor({100}, 9);
  CHECK(relu(relu(x)).identical(relu(x)));
}

TEST_CASE("norms") {
  CHECK(norm(Tensor::vector({3.0, 4.0}), NormKind::l2) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(norm(Tensor::vector({3.0, -4.0}), NormKind::l1) == 7.0);
  CHECK(norm(Tensor::vector({3.0, -4.0}), NormKind::inf) == 4.0);
  const Tensor x = oracle::random_tensor({257}, 3);
  double l1 = 0.0, l2 = 0.0;
  for (double v : x.values()) {
    l1 += std::abs(v);
    l2 += v * v;
  }
  CHECK(std::abs(norm(x, NormKind::l1) - l1) <= 1e-12 * l1);
  CHECK(std::abs(norm(x, NormKind::l2) - std::sqrt(l2)) <= 1e-12 * std::sqrt(l2));
}

TEST_CASE("dft of impulse and constant") {
  const Tensor d = dft(Tensor::vector({1.0, 0.0, 0.0, 0.0}), 0);
  for (Complex c : d.cvalues()) CHECK(std::abs(c - Complex(0.5, 0.0)) < 1e-15);
  const Tensor c = dft(Tensor::vector({1.0, 1.0, 1.0, 1.0}), 0);
  CHECK(std::abs(c.cvalues()[0] - Complex(2.0, 0.0)) < 1e-15);
  for (std::size_t k = 1; k < 4; ++k) CHECK(std::abs(c.cvalues()[k]) < 1e-15);

  const Tensor flat(Shape{4}, std::vector<Complex>(4, Complex(0.5, 0.0)));
  const Tensor imp = inverse_dft(flat, 0);
  CHECK(std::abs(imp.cvalues()[0] - Complex(1.0, 0.0)) < 1e-15);
  for (std::size_t k = 1; k < 4; ++k) CHECK(std::abs(imp.cvalues()[k]) < 1e-15);
}

TEST_CASE("dft matches naive summation for several lengths") {
  for (std::size_t n : {64u, 45u, 97u}) {
    const Tensor x = oracle::random_tensor({n}, static_cast<unsigned>(n));
    std::vector<Complex> xc(x.values().begin(), x.values().end());
    const auto ref = oracle::naive_dft(xc);
    const Tensor got = dft(x, 0);
    for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(got.cvalues()[k] - ref[k]) < 1e-10);
  }
}

TEST_CASE("dft batches over the other axes") {
  const Tensor x = oracle::random_tensor({3, 5, 4}, 11);
  const Tensor y = dft(x, 1);
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t c = 0; c < 4; ++c) {
      std::vector<Complex> line(5);
      for (std::size_t b = 0; b < 5; ++b) line[b] = x[(a * 5 + b) * 4 + c];
      const auto ref = oracle::naive_dft(line);
      for (std::size_t b = 0; b < 5; ++b) CHECK(std::abs(y.cvalues()[(a * 5 + b) * 4 + c] - ref[b]) < 1e-12);
    }
  }
  CHECK_THROWS_AS(dft(x, 3), ArgumentError);
}

TEST_CASE("dft round trip, Parseval and linearity") {
  const Tensor x = oracle::random_tensor({6, 50}, 5);
  const Tensor y = oracle::random_tensor({6, 50}, 6);
  const Tensor back = inverse_dft(dft(x, 1), 1);
  CHECK(norm(sub(back.real_part(), x), NormKind::l2) <= 1e-12 * norm(x, NormKind::l2));
  CHECK(norm(back.imag_part(), NormKind::inf) < 1e-12);
  CHECK(std::abs(norm(dft(x, 1), NormKind::l2) - norm(x, NormKind::l2)) < 1e-10);

  const Tensor lhs = dft(axpy(scale(x, 2.0), -0.7, y), 1);
  const Tensor rhs = axpy(scale(dft(x, 1), 2.0), -0.7, dft(y, 1));
  CHECK(norm(sub(lhs, rhs), NormKind::inf) < 1e-10);
}

TEST_CASE("conjugate-symmetric spectrum gives a real signal") {
  const Tensor x = oracle::random_tensor({33}, 8);
  const Spectrum s = spectrum_of_kernel(x.values());
  CHECK(s.is_conjugate_symmetric());
  const Tensor out = inverse_dft(Tensor(Shape{33}, s.values), 0);
  CHECK(norm(out.imag_part(), NormKind::inf) < 1e-12);

  Spectrum bad = s;
  bad.values[3] += Complex(0.0, 1.0);
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("halfcomplex parameters are a bijection") {
  for (std::size_t n : {8u, 9u}) {
    const Tensor p = oracle::random_tensor({n}, 13);
    const auto spec = halfcomplex_to_spectrum(p.values());
    Spectrum s{spec, 0, true};
    CHECK(s.is_conjugate_symmetric());
    const auto q = spectrum_to_halfcomplex(spec);
    for (std::size_t i = 0; i < n; ++i) CHECK(q[i] == doctest::Approx(p[i]).epsilon(1e-15));
  }
}
