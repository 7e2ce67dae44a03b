#include "kol/geometry.hpp"

#include "kol/errors.hpp"

namespace kol {

namespace {

std::size_t odd_at_least(double v) {
  auto n = static_cast<std::size_t>(std::ceil(v));
  if (n % 2 == 0) ++n;
  return n;
}

}  // namespace

void ImageGrid::validate() const {
  if (nx == 0 || ny == 0) throw ArgumentError("image grid must have positive size");
  if (!(spacing > 0.0)) throw ArgumentError("pixel spacing must be positive");
}

ParallelGeometry ParallelGeometry::covering(const ImageGrid& grid, std::size_t n_angles, double det_spacing) {
  grid.validate();
  if (n_angles == 0) throw ArgumentError("parallel geometry needs at least one view");
  ParallelGeometry g;
  g.grid = grid;
  g.det_spacing = det_spacing > 0.0 ? det_spacing : grid.spacing;
  g.n_det = odd_at_least(2.0 * grid.half_diagonal() / g.det_spacing + 1.0);
  g.angles.resize(n_angles);
  for (std::size_t k = 0; k < n_angles; ++k) g.angles[k] = M_PI * static_cast<double>(k) / static_cast<double>(n_angles);
  return g;
}

bool ParallelGeometry::covers_image() const {
  return static_cast<double>(n_det) * det_spacing >= 2.0 * grid.half_diagonal();
}

void ParallelGeometry::validate() const {
  grid.validate();
  if (angles.empty()) throw ArgumentError("parallel geometry needs at least one view");
  if (n_det == 0) throw ArgumentError("parallel geometry needs at least one detector bin");
  if (!(det_spacing > 0.0)) throw ArgumentError("detector spacing must be positive");
  if (!covers_image()) throw ArgumentError("parallel detector does not span the image diagonal");
}

FanBeamGeometry FanBeamGeometry::with_range(const ImageGrid& grid, double dsi, double dsd, std::size_t n_angles,
                                            double range, std::size_t n_det, double det_spacing) {
  FanBeamGeometry g;
  g.grid = grid;
  g.dsi = dsi;
  g.dsd = dsd;
  g.n_det = n_det;
  g.det_spacing = det_spacing;
  g.scan_range = range;
  if (n_angles == 0) throw ArgumentError("fan-beam geometry needs at least one view");
  g.angle_step = range / static_cast<double>(n_angles);
  g.angles.resize(n_angles);
  for (std::size_t k = 0; k < n_angles; ++k) g.angles[k] = (static_cast<double>(k) + 0.5) * g.angle_step;
  g.validate();
  return g;
}

FanBeamGeometry FanBeamGeometry::short_scan(const ImageGrid& grid, double dsi, double dsd, std::size_t n_angles,
                                            std::size_t n_det, double det_spacing) {
  FanBeamGeometry probe;
  probe.dsd = dsd;
  probe.n_det = n_det;
  probe.det_spacing = det_spacing;
  if (n_det == 0 || !(dsd > 0.0)) throw ArgumentError("invalid fan-beam detector");
  return with_range(grid, dsi, dsd, n_angles, probe.short_scan_range(), n_det, det_spacing);
}

std::size_t FanBeamGeometry::covering_detector(const ImageGrid& grid, double dsi, double dsd, double det_spacing) {
  const double r = grid.half_diagonal();
  if (!(dsi > r)) throw ArgumentError("source must lie outside the image circle");
  const double u = dsd * std::tan(std::asin(r / dsi));
  return odd_at_least(2.0 * u / det_spacing + 3.0);
}

bool FanBeamGeometry::covers_image() const {
  const double r = grid.half_diagonal();
  return dsi > r && std::sin(gamma_max()) * dsi >= r;
}

FanBeamGeometry FanBeamGeometry::without_wedge(double start, double width) const {
  FanBeamGeometry g = *this;
  g.angles.clear();
  for (double b : angles) {
    if (!(b >= start && b < start + width)) g.angles.push_back(b);
  }
  if (g.angles.empty()) throw ArgumentError("wedge removes every view");
  return g;
}

void FanBeamGeometry::validate() const {
  grid.validate();
  if (!(dsi > 0.0) || !(dsd > dsi)) throw ArgumentError("fan-beam geometry requires dsd > dsi > 0");
  if (angles.empty()) throw ArgumentError("fan-beam geometry needs at least one view");
  if (n_det == 0) throw ArgumentError("fan-beam geometry needs at least one detector bin");
  if (!(det_spacing > 0.0)) throw ArgumentError("detector spacing must be positive");
  if (!(angle_step > 0.0)) throw ArgumentError("angular step must be positive");
  if (!(dsi > grid.half_diagonal())) throw ArgumentError("source must lie outside the image circle");
}

Ray parallel_ray(double theta, double s) {
  const double c = std::cos(theta), sn = std::sin(theta);
  return {s * c, s * sn, -sn, c};
}

Ray fan_ray(const FanBeamGeometry& g, double beta, double u) {
  const double c = std::cos(beta), s = std::sin(beta);
  const double sx = g.dsi * c, sy = g.dsi * s;
  const double px = (g.dsi - g.dsd) * c - u * s;
  const double py = (g.dsi - g.dsd) * s + u * c;
  double dx = px - sx, dy = py - sy;
  const double len = std::hypot(dx, dy);
  dx /= len;
  dy /= len;
  const double t = sx * dx + sy * dy;
  return {sx - t * dx, sy - t * dy, dx, dy};
}

nlohmann::json to_json(const ImageGrid& g) { return {{"nx", g.nx}, {"ny", g.ny}, {"spacing", g.spacing}}; }

nlohmann::json to_json(const ParallelGeometry& g) {
  return {{"type", "parallel"},
          {"grid", to_json(g.grid)},
          {"n_angles", g.n_angles()},
          {"n_det", g.n_det},
          {"det_spacing", g.det_spacing}};
}

nlohmann::json to_json(const FanBeamGeometry& g) {
  return {{"type", "fan"},       {"grid", to_json(g.grid)},  {"dsi", g.dsi},
          {"dsd", g.dsd},        {"n_angles", g.n_angles()}, {"scan_range", g.scan_range},
          {"n_det", g.n_det},    {"det_spacing", g.det_spacing}, {"gamma_max", g.gamma_max()}};
}

}  // namespace kol
