#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <nlohmann/json.hpp>

#include "kol/tensor.hpp"

namespace kol {

/// Square-pixel image grid centred on the isocentre. Row index runs along y,
/// column index along x.
struct ImageGrid {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double spacing = 1.0;

  double x(std::size_t col) const { return (static_cast<double>(col) - 0.5 * (static_cast<double>(nx) - 1.0)) * spacing; }
  double y(std::size_t row) const { return (static_cast<double>(row) - 0.5 * (static_cast<double>(ny) - 1.0)) * spacing; }
  double half_diagonal() const { return 0.5 * spacing * std::hypot(static_cast<double>(nx), static_cast<double>(ny)); }
  double pixel_area() const { return spacing * spacing; }
  Shape shape() const { return {ny, nx}; }
  void validate() const;
};

/// 2-D parallel-beam acquisition.
struct ParallelGeometry {
  ImageGrid grid;
  std::vector<double> angles;  ///< radians
  std::size_t n_det = 0;
  double det_spacing = 1.0;

  /// `n_angles` views uniform over [0, pi) and a detector just covering the
  /// image diagonal (odd bin count, so the centre ray hits a bin centre).
  static ParallelGeometry covering(const ImageGrid& grid, std::size_t n_angles, double det_spacing = 0.0);

  std::size_t n_angles() const { return angles.size(); }
  double det_coord(std::size_t k) const { return (static_cast<double>(k) - 0.5 * (static_cast<double>(n_det) - 1.0)) * det_spacing; }
  /// Angular quadrature weight pi / n_angles.
  double angle_step() const { return M_PI / static_cast<double>(angles.size()); }
  Shape sinogram_shape() const { return {angles.size(), n_det}; }
  bool covers_image() const;
  /// Throws ArgumentError on an invalid geometry (including a detector that
  /// does not span the image diagonal).
  void validate() const;
};

/// 2-D fan-beam acquisition with an equally spaced flat detector.
///
/// Source at dsi * (cos b, sin b); detector centre at (dsi - dsd) * (cos b,
/// sin b); detector axis e_u = (-sin b, cos b). The ray through detector
/// coordinate u has fan angle gamma = atan(u / dsd).
struct FanBeamGeometry {
  ImageGrid grid;
  double dsi = 0.0;
  double dsd = 0.0;
  std::vector<double> angles;  ///< source angles, radians
  double scan_range = 0.0;     ///< total angular range the views sample
  double angle_step = 0.0;     ///< quadrature weight per view
  std::size_t n_det = 0;
  double det_spacing = 1.0;

  /// Views sampled at bin midpoints of [0, range).
  static FanBeamGeometry with_range(const ImageGrid& grid, double dsi, double dsd, std::size_t n_angles,
                                    double range, std::size_t n_det, double det_spacing);
  /// Short scan over pi + 2 * gamma_max.
  static FanBeamGeometry short_scan(const ImageGrid& grid, double dsi, double dsd, std::size_t n_angles,
                                    std::size_t n_det, double det_spacing);
  /// Detector sized so the fan covers the image circle.
  static std::size_t covering_detector(const ImageGrid& grid, double dsi, double dsd, double det_spacing);

  std::size_t n_angles() const { return angles.size(); }
  double det_coord(std::size_t k) const { return (static_cast<double>(k) - 0.5 * (static_cast<double>(n_det) - 1.0)) * det_spacing; }
  double gamma(std::size_t k) const { return std::atan(det_coord(k) / dsd); }
  double gamma_max() const { return std::atan(det_coord(n_det - 1) / dsd); }
  double short_scan_range() const { return M_PI + 2.0 * gamma_max(); }
  /// Detector spacing scaled to the isocentre.
  double iso_spacing() const { return det_spacing * dsi / dsd; }
  Shape sinogram_shape() const { return {angles.size(), n_det}; }
  bool covers_image() const;

  /// Same geometry with every view whose angle lies in [start, start + width)
  /// removed; scan range and quadrature step are kept.
  FanBeamGeometry without_wedge(double start, double width) const;

  void validate() const;
};

/// A line in the image plane: its point closest to the origin and unit
/// direction.
struct Ray {
  double cx, cy, dx, dy;
};

/// Parallel ray at view angle `theta` and detector offset `s`: normal
/// (cos theta, sin theta), direction (-sin theta, cos theta).
Ray parallel_ray(double theta, double s);
/// Fan ray from the source at angle `beta` to detector coordinate `u`.
Ray fan_ray(const FanBeamGeometry& g, double beta, double u);

nlohmann::json to_json(const ImageGrid& g);
nlohmann::json to_json(const ParallelGeometry& g);
nlohmann::json to_json(const FanBeamGeometry& g);

}  // namespace kol
