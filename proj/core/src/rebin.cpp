#include "kol/rebin.hpp"

#include <cmath>

#include "kol/errors.hpp"
#include "kol/fft.hpp"
#include "kol/ops.hpp"
#include "kol/projectors.hpp"
#include "kol/tensor_ops.hpp"

namespace kol {

void RebinConfig::validate() const {
  parallel.validate();
  fan.validate();
  const ImageGrid& a = parallel.grid;
  const ImageGrid& b = fan.grid;
  if (a.nx != b.nx || a.ny != b.ny || a.spacing != b.spacing) {
    throw ArgumentError("rebinning geometries must share the image grid");
  }
}

RebinConfig make_rebin_config(const ImageGrid& grid, std::size_t n_projections, std::size_t n_fan_views, double dsi,
                              double dsd, double fan_det_spacing) {
  RebinConfig cfg;
  cfg.parallel = ParallelGeometry::covering(grid, n_projections);
  cfg.fan = FanBeamGeometry::short_scan(grid, dsi, dsd, n_fan_views,
                                        FanBeamGeometry::covering_detector(grid, dsi, dsd, fan_det_spacing),
                                        fan_det_spacing);
  cfg.validate();
  return cfg;
}

RebinNetwork rebin_network(const RebinConfig& cfg) {
  cfg.validate();
  const ParallelGeometry& pg = cfg.parallel;
  FilterKernel ramp = ramp_filter(pg.n_det, pg.det_spacing, false);
  const double quad = pg.angle_step() * pg.det_spacing / pg.grid.pixel_area();
  for (auto& v : ramp.spectrum.values) v *= quad;

  RebinNetwork net;
  net.config = cfg;
  Graph& g = net.graph;
  const NodeId x = g.input(RebinNetwork::kInput);
  const NodeId c = g.parameter(RebinNetwork::kFilter, ramp.parameters(), cfg.train_c);
  const NodeId w = g.parameter(RebinNetwork::kWeights, Tensor(pg.grid.shape(), 1.0), cfg.train_w);
  const NodeId rows = g.apply(ops::spectral_row_filter(pg.n_det), {x, c}, "filter");
  const NodeId image = g.apply(parallel_backprojector_op(pg), {rows}, "backproject");
  const NodeId weighted = g.apply(ops::mul(), {image, w}, "weight");
  g.apply(fan_projector_op(cfg.fan), {weighted}, "project");
  return net;
}

Tensor RebinNetwork::forward(const Tensor& kspace) const { return graph.evaluate({{kInput, kspace}}); }

std::vector<Complex> RebinNetwork::spectrum() const {
  return halfcomplex_to_spectrum(graph.parameter_value(kFilter).values());
}

Tensor RebinNetwork::weights() const { return graph.parameter_value(kWeights); }

Tensor rebin_forward(const Tensor& kspace, const RebinConfig& cfg, std::span<const Complex> c, const Tensor& w) {
  cfg.validate();
  const ParallelGeometry& pg = cfg.parallel;
  if (!kspace.is_complex() || kspace.shape() != pg.sinogram_shape()) {
    throw ArgumentError("rebin_forward: k-space must be complex " + shape_string(pg.sinogram_shape()));
  }
  if (c.size() != pg.n_det) throw ArgumentError("rebin_forward: spectrum length must equal n_det");
  if (w.shape() != pg.grid.shape()) throw ArgumentError("rebin_forward: W must match the image grid");
  Tensor filtered = kspace;
  auto fv = filtered.cvalues();
  for (std::size_t r = 0; r < pg.n_angles(); ++r) {
    for (std::size_t k = 0; k < pg.n_det; ++k) fv[r * pg.n_det + k] *= c[k];
  }
  const Tensor rows = inverse_dft(filtered, 1).real_part();
  return project_fan(mul(backproject_parallel(rows, pg), w), cfg.fan);
}

Tensor rebin_reference(const Tensor& phantom, const RebinConfig& cfg) {
  cfg.validate();
  return project_fan(phantom, cfg.fan);
}

Tensor make_kspace(const Tensor& phantom, const RebinConfig& cfg) {
  cfg.validate();
  return dft(project_parallel(phantom, cfg.parallel), 1);
}

std::size_t rebin_param_count(const RebinConfig& cfg) {
  return (cfg.train_c ? cfg.parallel.n_det : 0) + (cfg.train_w ? cfg.parallel.grid.nx * cfg.parallel.grid.ny : 0);
}

std::vector<Example> rebin_examples(const std::vector<Tensor>& phantoms, const RebinConfig& cfg) {
  std::vector<Example> out;
  out.reserve(phantoms.size());
  for (const auto& p : phantoms) out.push_back({{{RebinNetwork::kInput, make_kspace(p, cfg)}}, rebin_reference(p, cfg)});
  return out;
}

}  // namespace kol
