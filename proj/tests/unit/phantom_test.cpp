#include <doctest.h>

#include <cmath>

#include "kol/errors.hpp"
#include "kol/phantom.hpp"
#include "kol/tensor_ops.hpp"

using namespace kol;

namespace {

PhantomSpec tube_spec(double width, std::uint64_t seed) {
  PhantomSpec s;
  s.kind = PhantomKind::tubes;
  s.grid = {64, 64, 1.0};
  s.seed = seed;
  s.tubes.count = 1;
  s.tubes.width_min = width;
  s.tubes.width_max = width;
  s.tubes.noise_sigma = 0.0;
  return s;
}

}  // namespace

TEST_CASE("Shepp-Logan mass matches the analytic ellipse areas") {
  PhantomSpec spec;
  const Phantom p = generate_phantom(spec);
  REQUIRE(p.image.shape() == Shape{256, 256});
  double analytic = 0.0;
  for (const Ellipse& e : p.ellipses) analytic += e.intensity * M_PI * e.a * e.b;
  double mass = 0.0;
  for (std::size_t i = 0; i < p.image.size(); ++i) mass += p.image[i];
  mass *= spec.grid.pixel_area();
  CHECK(mass == doctest::Approx(analytic).epsilon(0.01));
  CHECK(min_value(p.image) >= 0.0);
  CHECK(max_value(p.image) <= 1.0);
  CHECK_FALSE(p.mask);
}

TEST_CASE("the same seed reproduces a phantom bit for bit") {
  for (PhantomKind kind : {PhantomKind::random_ellipses, PhantomKind::tubes}) {
    PhantomSpec spec;
    spec.kind = kind;
    spec.grid = {48, 48, 1.0};
    spec.seed = 42;
    const Phantom a = generate_phantom(spec), b = generate_phantom(spec);
    CHECK(a.image.identical(b.image));
    spec.seed = 43;
    CHECK_FALSE(generate_phantom(spec).image.identical(a.image));
  }
}

TEST_CASE("random ellipse intensities stay in the unit interval") {
  PhantomSpec spec;
  spec.kind = PhantomKind::random_ellipses;
  spec.grid = {40, 40, 1.0};
  spec.ellipses.count = 10;
  for (const Phantom& p : generate_phantoms(spec, 12)) {
    CHECK(min_value(p.image) >= 0.0);
    CHECK(max_value(p.image) <= 1.0);
    CHECK(max_value(p.image) > 0.0);
  }
}

TEST_CASE("generated phantom sets differ per item and repeat per seed") {
  PhantomSpec spec;
  spec.kind = PhantomKind::random_ellipses;
  spec.grid = {24, 24, 1.0};
  const auto a = generate_phantoms(spec, 3), b = generate_phantoms(spec, 3);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(a[i].image.identical(b[i].image));
  CHECK_FALSE(a[0].image.identical(a[1].image));
}

TEST_CASE("tube masks have the requested thickness") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Phantom p = generate_phantom(tube_spec(4.0, seed));
    REQUIRE(p.mask);
    const Tensor& m = *p.mask;
    std::vector<std::pair<int, int>> inside, outside;
    for (int i = 0; i < 64; ++i)
      for (int j = 0; j < 64; ++j) (m.at(i, j) > 0.5 ? inside : outside).emplace_back(i, j);
    REQUIRE(inside.size() > 50);
    double ridge = 0.0;
    for (const auto& [i, j] : inside) {
      double d = 1e9;
      for (const auto& [k, l] : outside) d = std::min(d, std::hypot(double(i - k), double(j - l)));
      ridge = std::max(ridge, d);
    }
    CHECK(2.0 * ridge - 1.0 == doctest::Approx(4.0).epsilon(0.25));
  }
}

TEST_CASE("noise-free tubes are darker than the background") {
  const Phantom p = generate_phantom(tube_spec(5.0, 7));
  double in = 0.0, out = 0.0;
  std::size_t n_in = 0, n_out = 0;
  for (std::size_t i = 0; i < p.image.size(); ++i) {
    if ((*p.mask)[i] > 0.5) {
      in += p.image[i];
      ++n_in;
    } else {
      out += p.image[i];
      ++n_out;
    }
  }
  CHECK(out / n_out - in / n_in > 0.2);
}

TEST_CASE("phantom kinds round-trip through their names") {
  for (PhantomKind k : {PhantomKind::shepp_logan, PhantomKind::random_ellipses, PhantomKind::tubes})
    CHECK(phantom_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(phantom_kind_from_string("cube"), ArgumentError);
}
