#pragma once

#include <optional>
#include <string>

#include "kol/filter.hpp"
#include "kol/geometry.hpp"
#include "kol/graph.hpp"
#include "kol/weights.hpp"

namespace kol {

/// Which of the two factors of the reconstruction network may be trained.
struct FbpTrainable {
  bool weights = true;
  bool filter = true;
};

/// y = relu(B K W x): diagonal weights W, circulant filter K shared by all
/// views, fixed distance-weighted backprojection B.
struct FbpNetwork {
  static constexpr const char* kInput = "projections";
  static constexpr const char* kWeights = "W";
  static constexpr const char* kFilter = "K";

  Graph graph;
  FanBeamGeometry geometry;
  std::size_t filter_length = 0;

  Tensor reconstruct(const Tensor& projections) const;
  WeightImage weights() const;
  FilterKernel filter() const;
};

/// Parker times cosine weights, or cosine alone when `parker` is false.
WeightImage analytic_fbp_weights(const FanBeamGeometry& g, bool parker = true);

/// Builds the network with W initialised to the analytic weights and K to the
/// Ram-Lak filter unless explicit initial values are given.
FbpNetwork fbp_network(const FanBeamGeometry& g, FbpTrainable trainable = {},
                       std::optional<WeightImage> initial_weights = std::nullopt,
                       std::optional<FilterKernel> initial_filter = std::nullopt);

/// The same pipeline evaluated directly, without a graph.
Tensor fbp_reconstruct(const Tensor& projections, const FanBeamGeometry& g, const WeightImage& w,
                       const FilterKernel& k);

/// Relative RMSE ||a - b|| / ||b|| restricted to pixels within `radius` of
/// the image centre (physical units).
double roi_relative_rmse(const Tensor& recon, const Tensor& reference, const ImageGrid& grid, double radius);

}  // namespace kol
