#include "kol/projectors.hpp"

#include <algorithm>
#include <cmath>

#include "kol/errors.hpp"
#include "kol/ops.hpp"

namespace kol {

namespace {

/// Visits bilinear sample weights along a ray sampled every half pixel. The
/// callback receives (flat pixel index, step * bilinear weight). Projection
/// and its transpose share this walk, which makes them exact adjoints.
template <class Visit>
void walk_ray(const ImageGrid& grid, const Ray& ray, Visit&& visit) {
  const double sp = grid.spacing;
  const double step = 0.5 * sp;
  const double reach = grid.half_diagonal() + sp;
  const auto total = static_cast<long>(std::ceil(2.0 * reach / step));

  // Clip the sample range to the slab where bilinear weights can be nonzero.
  const double hx = 0.5 * static_cast<double>(grid.nx) * sp + sp;
  const double hy = 0.5 * static_cast<double>(grid.ny) * sp + sp;
  double t0 = -reach, t1 = reach;
  auto clip = [&](double c, double d, double h) {
    if (std::fabs(d) < 1e-15) {
      if (std::fabs(c) > h) t1 = t0 - 1.0;
      return;
    }
    double a = (-h - c) / d, b = (h - c) / d;
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  };
  clip(ray.cx, ray.dx, hx);
  clip(ray.cy, ray.dy, hy);
  if (t1 < t0) return;
  const long m0 = std::max(0L, static_cast<long>(std::floor((t0 + reach) / step - 0.5)) - 1);
  const long m1 = std::min(total - 1, static_cast<long>(std::ceil((t1 + reach) / step - 0.5)) + 1);

  const double ox = 0.5 * (static_cast<double>(grid.nx) - 1.0);
  const double oy = 0.5 * (static_cast<double>(grid.ny) - 1.0);
  const auto nx = static_cast<long>(grid.nx);
  const auto ny = static_cast<long>(grid.ny);
  for (long m = m0; m <= m1; ++m) {
    const double t = -reach + (static_cast<double>(m) + 0.5) * step;
    const double fc = (ray.cx + t * ray.dx) / sp + ox;
    const double fr = (ray.cy + t * ray.dy) / sp + oy;
    const double jf = std::floor(fc), if_ = std::floor(fr);
    const auto j0 = static_cast<long>(jf);
    const auto i0 = static_cast<long>(if_);
    if (j0 < -1 || j0 >= nx || i0 < -1 || i0 >= ny) continue;
    const double wx = fc - jf, wy = fr - if_;
    const double w[4] = {(1.0 - wy) * (1.0 - wx), (1.0 - wy) * wx, wy * (1.0 - wx), wy * wx};
    const long ii[4] = {i0, i0, i0 + 1, i0 + 1};
    const long jj[4] = {j0, j0 + 1, j0, j0 + 1};
    for (int q = 0; q < 4; ++q) {
      if (ii[q] < 0 || ii[q] >= ny || jj[q] < 0 || jj[q] >= nx) continue;
      visit(static_cast<std::size_t>(ii[q] * nx + jj[q]), step * w[q]);
    }
  }
}

void check_image(const Tensor& image, const ImageGrid& grid) {
  if (image.shape() != grid.shape()) {
    throw ArgumentError("image shape " + shape_string(image.shape()) + " does not match grid " +
                        shape_string(grid.shape()));
  }
}

void check_sinogram(const Tensor& sino, const Shape& expected) {
  if (sino.shape() != expected) {
    throw ArgumentError("sinogram shape " + shape_string(sino.shape()) + " does not match geometry " +
                        shape_string(expected));
  }
}

template <class RayFn>
Tensor project(const Tensor& image, const ImageGrid& grid, std::size_t n_angles, std::size_t n_det, RayFn ray_of) {
  check_image(image, grid);
  const auto img = image.values();
  std::vector<double> out(n_angles * n_det, 0.0);
  for (std::size_t a = 0; a < n_angles; ++a) {
    for (std::size_t k = 0; k < n_det; ++k) {
      double acc = 0.0;
      walk_ray(grid, ray_of(a, k), [&](std::size_t idx, double w) { acc += w * img[idx]; });
      out[a * n_det + k] = acc;
    }
  }
  return Tensor(Shape{n_angles, n_det}, std::move(out));
}

template <class RayFn>
Tensor backproject(const Tensor& sino, const ImageGrid& grid, std::size_t n_angles, std::size_t n_det, RayFn ray_of) {
  check_sinogram(sino, Shape{n_angles, n_det});
  const auto q = sino.values();
  std::vector<double> out(grid.nx * grid.ny, 0.0);
  for (std::size_t a = 0; a < n_angles; ++a) {
    for (std::size_t k = 0; k < n_det; ++k) {
      const double v = q[a * n_det + k];
      if (v == 0.0) continue;
      walk_ray(grid, ray_of(a, k), [&](std::size_t idx, double w) { out[idx] += w * v; });
    }
  }
  return Tensor(grid.shape(), std::move(out));
}

/// Pixel-driven FBP sampling: for each (pixel, view) the two detector taps
/// and their weights including 1/U^2 and the angular step.
template <class Visit>
void fbp_taps(const FanBeamGeometry& g, Visit&& visit) {
  const ImageGrid& grid = g.grid;
  const double off = 0.5 * (static_cast<double>(g.n_det) - 1.0);
  const auto n_det = static_cast<long>(g.n_det);
  for (std::size_t a = 0; a < g.n_angles(); ++a) {
    const double c = std::cos(g.angles[a]), s = std::sin(g.angles[a]);
    for (std::size_t i = 0; i < grid.ny; ++i) {
      const double y = grid.y(i);
      for (std::size_t j = 0; j < grid.nx; ++j) {
        const double x = grid.x(j);
        const double dist = g.dsi - (x * c + y * s);
        const double u = g.dsd * (-x * s + y * c) / dist;
        const double ratio = dist / g.dsi;
        const double w = g.angle_step / (ratio * ratio);
        const double f = u / g.det_spacing + off;
        const double kf = std::floor(f);
        const auto k0 = static_cast<long>(kf);
        const double t = f - kf;
        const std::size_t pix = i * grid.nx + j;
        if (k0 >= 0 && k0 < n_det) visit(pix, a * g.n_det + static_cast<std::size_t>(k0), w * (1.0 - t));
        if (k0 + 1 >= 0 && k0 + 1 < n_det) visit(pix, a * g.n_det + static_cast<std::size_t>(k0 + 1), w * t);
      }
    }
  }
}

}  // namespace

Tensor project_parallel(const Tensor& image, const ParallelGeometry& g) {
  g.validate();
  return project(image, g.grid, g.n_angles(), g.n_det,
                 [&](std::size_t a, std::size_t k) { return parallel_ray(g.angles[a], g.det_coord(k)); });
}

Tensor backproject_parallel(const Tensor& sinogram, const ParallelGeometry& g) {
  g.validate();
  return backproject(sinogram, g.grid, g.n_angles(), g.n_det,
                     [&](std::size_t a, std::size_t k) { return parallel_ray(g.angles[a], g.det_coord(k)); });
}

Tensor project_fan(const Tensor& image, const FanBeamGeometry& g) {
  g.validate();
  return project(image, g.grid, g.n_angles(), g.n_det,
                 [&](std::size_t a, std::size_t k) { return fan_ray(g, g.angles[a], g.det_coord(k)); });
}

Tensor backproject_fan(const Tensor& sinogram, const FanBeamGeometry& g) {
  g.validate();
  return backproject(sinogram, g.grid, g.n_angles(), g.n_det,
                     [&](std::size_t a, std::size_t k) { return fan_ray(g, g.angles[a], g.det_coord(k)); });
}

Tensor fbp_backproject_fan(const Tensor& sinogram, const FanBeamGeometry& g) {
  g.validate();
  check_sinogram(sinogram, g.sinogram_shape());
  const auto q = sinogram.values();
  std::vector<double> out(g.grid.nx * g.grid.ny, 0.0);
  fbp_taps(g, [&](std::size_t pix, std::size_t bin, double w) { out[pix] += w * q[bin]; });
  return Tensor(g.grid.shape(), std::move(out));
}

Tensor fbp_backproject_fan_adjoint(const Tensor& image, const FanBeamGeometry& g) {
  g.validate();
  check_image(image, g.grid);
  const auto img = image.values();
  std::vector<double> out(g.n_angles() * g.n_det, 0.0);
  fbp_taps(g, [&](std::size_t pix, std::size_t bin, double w) { out[bin] += w * img[pix]; });
  return Tensor(g.sinogram_shape(), std::move(out));
}

OperatorPtr parallel_projector_op(const ParallelGeometry& g) {
  return ops::linear({"project_parallel", g.grid.shape(), g.sinogram_shape(),
                      [g](const Tensor& x) { return project_parallel(x, g); },
                      [g](const Tensor& y) { return backproject_parallel(y, g); }});
}

OperatorPtr parallel_backprojector_op(const ParallelGeometry& g) {
  return ops::linear({"backproject_parallel", g.sinogram_shape(), g.grid.shape(),
                      [g](const Tensor& y) { return backproject_parallel(y, g); },
                      [g](const Tensor& x) { return project_parallel(x, g); }});
}

OperatorPtr fan_projector_op(const FanBeamGeometry& g) {
  return ops::linear({"project_fan", g.grid.shape(), g.sinogram_shape(),
                      [g](const Tensor& x) { return project_fan(x, g); },
                      [g](const Tensor& y) { return backproject_fan(y, g); }});
}

OperatorPtr fan_backprojector_op(const FanBeamGeometry& g) {
  return ops::linear({"backproject_fan", g.sinogram_shape(), g.grid.shape(),
                      [g](const Tensor& y) { return backproject_fan(y, g); },
                      [g](const Tensor& x) { return project_fan(x, g); }});
}

OperatorPtr fbp_backprojector_op(const FanBeamGeometry& g) {
  return ops::linear({"fbp_backproject_fan", g.sinogram_shape(), g.grid.shape(),
                      [g](const Tensor& y) { return fbp_backproject_fan(y, g); },
                      [g](const Tensor& x) { return fbp_backproject_fan_adjoint(x, g); }});
}

}  // namespace kol
