#include "kol/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "kol/errors.hpp"
#include "kol/random.hpp"

namespace kol {

namespace {

bool inside(const Ellipse& e, double x, double y) {
  const double c = std::cos(e.angle), s = std::sin(e.angle);
  const double dx = x - e.cx, dy = y - e.cy;
  const double u = (c * dx + s * dy) / e.a;
  const double v = (-s * dx + c * dy) / e.b;
  return u * u + v * v <= 1.0;
}

double radius_of(const ImageGrid& grid) {
  return 0.5 * static_cast<double>(std::min(grid.nx, grid.ny)) * grid.spacing;
}

struct Polyline {
  std::vector<double> x, y;
  double width = 0.0;
};

Polyline random_tube(const ImageGrid& grid, const TubeOptions& opt, std::mt19937_64& rng) {
  const double r = radius_of(grid);
  Polyline p;
  p.width = uniform(rng, opt.width_min, opt.width_max) * grid.spacing;
  const double theta = uniform(rng, 0.0, M_PI);
  const double offset = uniform(rng, -0.6, 0.6) * r;
  const double amp = uniform(rng, 0.05, 0.25) * r;
  const double freq = uniform(rng, 0.5, 2.0) * M_PI / r;
  const double phase = uniform(rng, 0.0, 2.0 * M_PI);
  const double dx = std::cos(theta), dy = std::sin(theta);
  const double len = 1.5 * r;
  const double step = 0.25 * grid.spacing;
  for (double t = -len; t <= len; t += step) {
    const double n = offset + amp * std::sin(freq * t + phase);
    p.x.push_back(t * dx - n * dy);
    p.y.push_back(t * dy + n * dx);
  }
  return p;
}

double distance_to(const Polyline& p, double x, double y) {
  double best = INFINITY;
  for (std::size_t i = 0; i + 1 < p.x.size(); ++i) {
    const double ax = p.x[i], ay = p.y[i];
    const double bx = p.x[i + 1] - ax, by = p.y[i + 1] - ay;
    const double t = std::clamp(((x - ax) * bx + (y - ay) * by) / (bx * bx + by * by), 0.0, 1.0);
    best = std::min(best, std::hypot(x - ax - t * bx, y - ay - t * by));
  }
  return best;
}

Phantom tube_phantom(const PhantomSpec& spec, std::mt19937_64& rng) {
  const ImageGrid& grid = spec.grid;
  const TubeOptions& opt = spec.tubes;
  if (!(opt.width_min > 0.0) || opt.width_max < opt.width_min) throw ArgumentError("invalid tube width range");
  if (!(opt.contrast > 0.0) || opt.contrast > 1.0) throw ArgumentError("tube contrast must lie in (0, 1]");
  if (opt.noise_sigma < 0.0) throw ArgumentError("tube noise must be non-negative");
  std::vector<Polyline> tubes;
  for (std::size_t i = 0; i < opt.count; ++i) tubes.push_back(random_tube(grid, opt, rng));

  Tensor image(grid.shape(), 1.0);
  Tensor mask(grid.shape(), 0.0);
  for (std::size_t i = 0; i < grid.ny; ++i) {
    for (std::size_t j = 0; j < grid.nx; ++j) {
      double drop = 0.0;
      for (const auto& t : tubes) {
        const double d = distance_to(t, grid.x(j), grid.y(i));
        const double half = 0.5 * t.width;
        if (d <= half) mask.at(i, j) = 1.0;
        // One-pixel linear edge centred on the tube boundary.
        drop = std::max(drop, std::clamp((half - d) / grid.spacing + 0.5, 0.0, 1.0));
      }
      image.at(i, j) = 1.0 - opt.contrast * drop;
    }
  }
  for (double& v : image.values()) v = std::clamp(v + opt.noise_sigma * normal(rng), 0.0, 1.0);
  return {std::move(image), std::move(mask), {}};
}

}  // namespace

PhantomKind phantom_kind_from_string(const std::string& s) {
  if (s == "shepp-logan") return PhantomKind::shepp_logan;
  if (s == "random-ellipses") return PhantomKind::random_ellipses;
  if (s == "tubes") return PhantomKind::tubes;
  throw ArgumentError("unknown phantom kind '" + s + "'");
}

std::string to_string(PhantomKind k) {
  switch (k) {
    case PhantomKind::shepp_logan: return "shepp-logan";
    case PhantomKind::random_ellipses: return "random-ellipses";
    case PhantomKind::tubes: return "tubes";
  }
  return "?";
}

std::vector<Ellipse> shepp_logan_ellipses(const ImageGrid& grid) {
  // intensity, a, b, x0, y0, angle (degrees); y axis pointing up.
  static constexpr double table[10][6] = {
      {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},          {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
      {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},      {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
      {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},         {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
      {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},       {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
      {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},     {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
  };
  const double r = radius_of(grid);
  std::vector<Ellipse> out;
  for (const auto& row : table) {
    // Rows grow downwards in image order, so flip y to keep the usual orientation.
    out.push_back({row[0], row[3] * r, -row[4] * r, row[1] * r, row[2] * r, -row[5] * M_PI / 180.0});
  }
  return out;
}

std::vector<Ellipse> random_ellipses(const ImageGrid& grid, std::size_t count, std::mt19937_64& rng) {
  const double r = radius_of(grid);
  std::vector<Ellipse> out;
  const double body = uniform(rng, 0.45, 0.55);
  out.push_back({body, 0.0, 0.0, uniform(rng, 0.7, 0.9) * r, uniform(rng, 0.7, 0.9) * r, uniform(rng, 0.0, M_PI)});
  if (count == 0) return out;
  const double bound = 0.45 / static_cast<double>(count);
  for (std::size_t i = 0; i < count; ++i) {
    Ellipse e;
    e.intensity = uniform(rng, -1.0, 1.0) * bound;
    if (std::abs(e.intensity) < 0.25 * bound) e.intensity = std::copysign(0.25 * bound, e.intensity);
    e.a = uniform(rng, 0.05, 0.3) * r;
    e.b = uniform(rng, 0.05, 0.3) * r;
    const double rho = uniform(rng, 0.0, 0.45) * r, phi = uniform(rng, 0.0, 2.0 * M_PI);
    e.cx = rho * std::cos(phi);
    e.cy = rho * std::sin(phi);
    e.angle = uniform(rng, 0.0, M_PI);
    out.push_back(e);
  }
  return out;
}

Tensor rasterize(const std::vector<Ellipse>& ellipses, const ImageGrid& grid, std::size_t supersample) {
  grid.validate();
  if (supersample == 0) throw ArgumentError("supersample must be positive");
  Tensor img(grid.shape());
  const double sub = static_cast<double>(supersample);
  for (std::size_t i = 0; i < grid.ny; ++i) {
    for (std::size_t j = 0; j < grid.nx; ++j) {
      double acc = 0.0;
      for (std::size_t a = 0; a < supersample; ++a) {
        const double y = grid.y(i) + ((static_cast<double>(a) + 0.5) / sub - 0.5) * grid.spacing;
        for (std::size_t b = 0; b < supersample; ++b) {
          const double x = grid.x(j) + ((static_cast<double>(b) + 0.5) / sub - 0.5) * grid.spacing;
          for (const auto& e : ellipses) {
            if (inside(e, x, y)) acc += e.intensity;
          }
        }
      }
      img.at(i, j) = acc / (sub * sub);
    }
  }
  return img;
}

double line_integral(const std::vector<Ellipse>& ellipses, const Ray& ray) {
  double total = 0.0;
  for (const auto& e : ellipses) {
    const double c = std::cos(e.angle), s = std::sin(e.angle);
    const double px = ray.cx - e.cx, py = ray.cy - e.cy;
    const double pu = (c * px + s * py) / e.a, pv = (-s * px + c * py) / e.b;
    const double qu = (c * ray.dx + s * ray.dy) / e.a, qv = (-s * ray.dx + c * ray.dy) / e.b;
    const double qa = qu * qu + qv * qv;
    const double qb = pu * qu + pv * qv;
    const double qc = pu * pu + pv * pv - 1.0;
    const double disc = qb * qb - qa * qc;
    if (disc > 0.0) total += e.intensity * 2.0 * std::sqrt(disc) / qa;
  }
  return total;
}

Tensor analytic_sinogram(const std::vector<Ellipse>& ellipses, const ParallelGeometry& g) {
  g.validate();
  Tensor out(g.sinogram_shape());
  for (std::size_t a = 0; a < g.n_angles(); ++a) {
    for (std::size_t k = 0; k < g.n_det; ++k) out.at(a, k) = line_integral(ellipses, parallel_ray(g.angles[a], g.det_coord(k)));
  }
  return out;
}

Tensor analytic_sinogram(const std::vector<Ellipse>& ellipses, const FanBeamGeometry& g) {
  g.validate();
  Tensor out(g.sinogram_shape());
  for (std::size_t a = 0; a < g.n_angles(); ++a) {
    for (std::size_t k = 0; k < g.n_det; ++k) out.at(a, k) = line_integral(ellipses, fan_ray(g, g.angles[a], g.det_coord(k)));
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  // splitmix64 finaliser
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

Tensor clamp_unit(Tensor img) {
  for (double& v : img.values()) v = std::clamp(v, 0.0, 1.0);
  return img;
}

}  // namespace

Phantom generate_phantom(const PhantomSpec& spec) {
  spec.grid.validate();
  std::mt19937_64 rng(spec.seed);
  switch (spec.kind) {
    case PhantomKind::shepp_logan: {
      auto e = shepp_logan_ellipses(spec.grid);
      Tensor img = clamp_unit(rasterize(e, spec.grid, spec.supersample));
      return {std::move(img), std::nullopt, std::move(e)};
    }
    case PhantomKind::random_ellipses: {
      auto e = random_ellipses(spec.grid, spec.ellipses.count, rng);
      Tensor img = clamp_unit(rasterize(e, spec.grid, spec.supersample));
      return {std::move(img), std::nullopt, std::move(e)};
    }
    case PhantomKind::tubes:
      return tube_phantom(spec, rng);
  }
  throw ArgumentError("unknown phantom kind");
}

std::vector<Phantom> generate_phantoms(const PhantomSpec& spec, std::size_t count) {
  std::vector<Phantom> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    PhantomSpec item = spec;
    item.seed = derive_seed(spec.seed, i);
    out.push_back(generate_phantom(item));
  }
  return out;
}

}  // namespace kol
