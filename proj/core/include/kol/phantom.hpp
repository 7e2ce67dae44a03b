#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "kol/geometry.hpp"
#include "kol/random.hpp"
#include "kol/tensor.hpp"

namespace kol {

/// Constant-intensity ellipse in physical coordinates; `angle` in radians.
struct Ellipse {
  double intensity = 0.0;
  double cx = 0.0, cy = 0.0;
  double a = 0.0, b = 0.0;
  double angle = 0.0;
};

enum class PhantomKind { shepp_logan, random_ellipses, tubes };

PhantomKind phantom_kind_from_string(const std::string& s);
std::string to_string(PhantomKind k);

struct EllipseOptions {
  std::size_t count = 6;  ///< inner ellipses inside the outer body
};

/// Dark curvilinear tubes on a bright background.
struct TubeOptions {
  std::size_t count = 3;
  double width_min = 2.0;  ///< pixels
  double width_max = 6.0;
  double contrast = 0.4;
  double noise_sigma = 0.05;
};

struct PhantomSpec {
  PhantomKind kind = PhantomKind::shepp_logan;
  ImageGrid grid{256, 256, 1.0};
  std::uint64_t seed = 0;
  std::size_t supersample = 4;
  EllipseOptions ellipses;
  TubeOptions tubes;
};

struct Phantom {
  Tensor image;
  std::optional<Tensor> mask;     ///< tube masks only
  std::vector<Ellipse> ellipses;  ///< empty for tubes
};

/// Modified (Toft) Shepp-Logan ellipses scaled to the inscribed circle of the grid.
std::vector<Ellipse> shepp_logan_ellipses(const ImageGrid& grid);
/// An outer body plus `count` inner ellipses; intensities stay within [0, 1]
/// wherever ellipses overlap.
std::vector<Ellipse> random_ellipses(const ImageGrid& grid, std::size_t count, std::mt19937_64& rng);

/// Pixel averages of the ellipse sum over `supersample`^2 points per pixel.
Tensor rasterize(const std::vector<Ellipse>& ellipses, const ImageGrid& grid, std::size_t supersample);

/// Exact line integral of the ellipse sum along a ray.
double line_integral(const std::vector<Ellipse>& ellipses, const Ray& ray);
Tensor analytic_sinogram(const std::vector<Ellipse>& ellipses, const ParallelGeometry& g);
Tensor analytic_sinogram(const std::vector<Ellipse>& ellipses, const FanBeamGeometry& g);

Phantom generate_phantom(const PhantomSpec& spec);

/// `count` phantoms with per-item seeds derived from spec.seed.
std::vector<Phantom> generate_phantoms(const PhantomSpec& spec, std::size_t count);

}  // namespace kol
