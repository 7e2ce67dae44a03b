#include <doctest.h>

#include <cmath>

#include "kol/errors.hpp"
#include "kol/filter.hpp"
#include "kol/projectors.hpp"
#include "kol/tensor_ops.hpp"
#include "kol/weights.hpp"
#include "oracles.hpp"

using namespace kol;

namespace {

const ImageGrid kGrid{64, 64, 1.0};

FanBeamGeometry small_fan(std::size_t n_angles = 60) {
  const double dsi = 120.0, dsd = 220.0;
  return FanBeamGeometry::short_scan(kGrid, dsi, dsd, n_angles,
                                     FanBeamGeometry::covering_detector(kGrid, dsi, dsd, 1.5), 1.5);
}

double adjoint_mismatch(const Tensor& ax, const Tensor& y, const Tensor& x, const Tensor& aty) {
  const double lhs = oracle::plain_dot(ax, y);
  const double rhs = oracle::plain_dot(x, aty);
  return std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs));
}

}  // namespace

TEST_CASE("parallel projection of a disk matches the analytic chord") {
  const double r = 24.0;
  const Tensor disk = oracle::disk_image(64, 1.0, r);
  const auto g = ParallelGeometry::covering(kGrid, 16);
  const Tensor sino = project_parallel(disk, g);
  for (std::size_t a = 0; a < g.n_angles(); ++a) {
    for (std::size_t k = 0; k < g.n_det; ++k) {
      const double s = g.det_coord(k);
      if (std::abs(s) > 0.9 * r) continue;
      const double chord = 2.0 * std::sqrt(r * r - s * s);
      CHECK(std::abs(sino.at(a, k) - chord) <= 0.01 * chord);
    }
  }
}

TEST_CASE("zero in, zero out") {
  const auto pg = ParallelGeometry::covering(kGrid, 8);
  const auto fg = small_fan(8);
  CHECK(norm(project_parallel(Tensor::zeros(kGrid.shape()), pg), NormKind::inf) == 0.0);
  CHECK(norm(backproject_parallel(Tensor::zeros(pg.sinogram_shape()), pg), NormKind::inf) == 0.0);
  CHECK(norm(project_fan(Tensor::zeros(kGrid.shape()), fg), NormKind::inf) == 0.0);
  CHECK(norm(backproject_fan(Tensor::zeros(fg.sinogram_shape()), fg), NormKind::inf) == 0.0);
}

TEST_CASE("centre pixel peaks at the central detector bin") {
  const ImageGrid grid{33, 33, 1.0};
  Tensor img = Tensor::zeros(grid.shape());
  img.at(16, 16) = 1.0;
  const auto g = ParallelGeometry::covering(grid, 12);
  const Tensor sino = project_parallel(img, g);
  for (std::size_t a = 0; a < g.n_angles(); ++a) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < g.n_det; ++k) {
      if (sino.at(a, k) > sino.at(a, best)) best = k;
    }
    CHECK(best == g.n_det / 2);
  }
}

TEST_CASE("one-hot sinogram backprojects to a single ray") {
  const auto g = ParallelGeometry::covering(kGrid, 4);
  Tensor sino = Tensor::zeros(g.sinogram_shape());
  sino.at(0, g.n_det / 2) = 1.0;  // angle 0, central ray
  const Tensor img = backproject_parallel(sino, g);
  // Mass along the ray equals the ray length covered by samples inside the image.
  CHECK(sum(img) > 0.0);
  for (std::size_t i = 0; i < kGrid.ny; ++i) {
    for (std::size_t j = 0; j < kGrid.nx; ++j) {
      if (img.at(i, j) != 0.0) {
        const double x = kGrid.x(j), y = kGrid.y(i);
        // Distance from the line through the origin along direction (cos 0 normal) is |x| or |y|.
        CHECK(std::min(std::abs(x), std::abs(y)) <= 1.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("parallel and fan pairs are adjoint") {
  const auto pg = ParallelGeometry::covering(kGrid, 30);
  const auto fg = small_fan(40);
  for (unsigned seed : {1u, 2u, 3u}) {
    const Tensor x = oracle::random_tensor(kGrid.shape(), seed);
    const Tensor yp = oracle::random_tensor(pg.sinogram_shape(), seed + 10);
    const Tensor yf = oracle::random_tensor(fg.sinogram_shape(), seed + 20);
    CHECK(adjoint_mismatch(project_parallel(x, pg), yp, x, backproject_parallel(yp, pg)) < 1e-10);
    CHECK(adjoint_mismatch(project_fan(x, fg), yf, x, backproject_fan(yf, fg)) < 1e-10);
    CHECK(adjoint_mismatch(fbp_backproject_fan(yf, fg), x, yf, fbp_backproject_fan_adjoint(x, fg)) < 1e-10);
  }
}

TEST_CASE("projectors are linear") {
  const auto fg = small_fan(20);
  const Tensor x = oracle::random_tensor(kGrid.shape(), 4);
  const Tensor y = oracle::random_tensor(kGrid.shape(), 5);
  const Tensor lhs = project_fan(axpy(scale(x, 1.5), -2.0, y), fg);
  const Tensor rhs = axpy(scale(project_fan(x, fg), 1.5), -2.0, project_fan(y, fg));
  CHECK(norm(sub(lhs, rhs), NormKind::inf) <= 1e-10 * norm(rhs, NormKind::inf));
}

TEST_CASE("fan central ray equals the parallel chord through the centre") {
  const double r = 24.0;
  const Tensor disk = oracle::disk_image(64, 1.0, r);
  const auto fg = small_fan(24);
  const Tensor sino = project_fan(disk, fg);
  REQUIRE(fg.n_det % 2 == 1);
  for (std::size_t a = 0; a < fg.n_angles(); ++a) CHECK(std::abs(sino.at(a, fg.n_det / 2) - 2.0 * r) <= 0.02 * r);
}

TEST_CASE("shape mismatches are argument errors") {
  const auto pg = ParallelGeometry::covering(kGrid, 8);
  CHECK_THROWS_AS(project_parallel(Tensor::zeros({10, 10}), pg), ArgumentError);
  CHECK_THROWS_AS(backproject_parallel(Tensor::zeros({3, 3}), pg), ArgumentError);
  auto bad = pg;
  bad.n_det = 5;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("cosine weights") {
  const auto fg = small_fan(10);
  const WeightImage w = cosine_weights(fg);
  CHECK(w.values.at(3, fg.n_det / 2) == 1.0);
  CHECK(w.values.at(3, 0) == doctest::Approx(std::cos(fg.gamma(0))));
}

TEST_CASE("Parker weights lie in [0, 1] and resolve redundancy") {
  const auto fg = small_fan(90);
  const WeightImage w = parker_weights(fg);
  CHECK(min_value(w.values) >= 0.0);
  CHECK(max_value(w.values) <= 1.0);

  const double delta = 0.5 * (fg.scan_range - M_PI);
  const double range = fg.scan_range;
  int checked = 0;
  for (int ib = 0; ib <= 400; ++ib) {
    const double beta = range * ib / 400.0;
    for (int ig = -20; ig <= 20; ++ig) {
      const double gamma = fg.gamma_max() * ig / 20.0;
      const double beta2 = beta + M_PI - 2.0 * gamma;
      if (beta2 < 0.0 || beta2 > range) continue;
      const double total = parker_weight(beta, gamma, delta) + parker_weight(beta2, -gamma, delta);
      CHECK(std::abs(total - 1.0) < 1e-6);
      ++checked;
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("Parker weights need a full short scan") {
  const double dsi = 120.0, dsd = 220.0;
  const auto n_det = FanBeamGeometry::covering_detector(kGrid, dsi, dsd, 1.5);
  const auto g = FanBeamGeometry::with_range(kGrid, dsi, dsd, 30, M_PI, n_det, 1.5);
  CHECK_THROWS_AS(parker_weights(g), ArgumentError);
}

TEST_CASE("ramp filter properties") {
  const FilterKernel k = ramp_filter(41, 0.8);
  // DC equals the spatial kernel sum.
  const auto h = ramlak_kernel(k.spectrum.size(), 0.8);
  double hs = 0.0;
  for (double v : h) hs += v;
  CHECK(std::abs(k.spectrum.values[0].real() - hs) < 1e-12);

  const std::size_t l = k.spectrum.size();
  for (std::size_t f = 1; f <= l / 2; ++f) {
    CHECK(std::abs(k.spectrum.values[f]) >= std::abs(k.spectrum.values[f - 1]) - 1e-9);
  }

  // A constant row on the circular support only sees the DC bin, the
  // truncated tail sum, which shrinks like 1/length.
  for (std::size_t n : {64u, 1u << 18}) {
    const FilterKernel unpadded = ramp_filter(n, 1.0, false);
    const double dc = unpadded.spectrum.values[0].real();
    CHECK(dc > 0.0);
    CHECK(dc < 1.0 / (M_PI * M_PI * (0.5 * static_cast<double>(n) - 1.0)));
    const Tensor flat(Shape{1, n}, 3.0);
    const Tensor out = unpadded.apply(flat);
    CHECK(norm(sub(out, Tensor(Shape{1, n}, 3.0 * dc)), NormKind::inf) < 1e-10);
    if (n > 100000) CHECK(norm(out, NormKind::inf) <= 1e-6 * 3.0);
  }

  const Tensor rows = oracle::random_tensor({4, 41}, 6);
  const Tensor out = k.apply(rows);
  CHECK(!out.is_complex());
  CHECK(out.all_finite());
}
