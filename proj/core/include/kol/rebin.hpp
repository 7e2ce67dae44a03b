#pragma once

#include <string>
#include <vector>

#include "kol/filter.hpp"
#include "kol/geometry.hpp"
#include "kol/graph.hpp"
#include "kol/optim.hpp"
#include "kol/train.hpp"

namespace kol {

/// Parallel-to-fan rebinning p_fan = A_fan W A_par^T F^H C x, with x the
/// k-space rows of the parallel projections.
struct RebinConfig {
  ParallelGeometry parallel;
  FanBeamGeometry fan;
  bool train_c = true;
  bool train_w = true;

  /// Throws ArgumentError unless both geometries share one image grid.
  void validate() const;
};

/// `n_projections` parallel views and a short-scan fan geometry with
/// `n_fan_views` views, both on `grid`.
RebinConfig make_rebin_config(const ImageGrid& grid, std::size_t n_projections, std::size_t n_fan_views, double dsi,
                              double dsd, double fan_det_spacing);

struct RebinNetwork {
  static constexpr const char* kInput = "kspace";
  static constexpr const char* kFilter = "C";
  static constexpr const char* kWeights = "W";

  Graph graph;
  RebinConfig config;

  Tensor forward(const Tensor& kspace) const;
  /// Spectrum C as complex values (length n_det).
  std::vector<Complex> spectrum() const;
  Tensor weights() const;
};

/// C starts as the Ram-Lak ramp scaled by the parallel backprojection's
/// quadrature (angle step times detector spacing over pixel area); W starts at 1.
RebinNetwork rebin_network(const RebinConfig& cfg);

/// The network's forward pass without a graph.
Tensor rebin_forward(const Tensor& kspace, const RebinConfig& cfg, std::span<const Complex> c, const Tensor& w);

/// Fan projections of the phantom image itself.
Tensor rebin_reference(const Tensor& phantom, const RebinConfig& cfg);
/// Unitary DFT of each parallel projection row (complex, views x n_det).
Tensor make_kspace(const Tensor& phantom, const RebinConfig& cfg);

std::size_t rebin_param_count(const RebinConfig& cfg);

/// Example pairs (k-space, reference fan sinogram) for a set of phantom images.
std::vector<Example> rebin_examples(const std::vector<Tensor>& phantoms, const RebinConfig& cfg);

}  // namespace kol
