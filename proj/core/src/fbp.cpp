#include "kol/fbp.hpp"

#include <cmath>

#include "kol/errors.hpp"
#include "kol/ops.hpp"
#include "kol/projectors.hpp"
#include "kol/tensor_ops.hpp"

namespace kol {

WeightImage analytic_fbp_weights(const FanBeamGeometry& g, bool parker) {
  WeightImage w = cosine_weights(g);
  if (parker) w = combine(w, parker_weights(g));
  return w;
}

FbpNetwork fbp_network(const FanBeamGeometry& g, FbpTrainable trainable, std::optional<WeightImage> initial_weights,
                       std::optional<FilterKernel> initial_filter) {
  g.validate();
  WeightImage w = initial_weights ? *initial_weights : analytic_fbp_weights(g);
  FilterKernel k = initial_filter ? *initial_filter : ramp_filter(g);
  if (w.values.shape() != g.sinogram_shape()) throw ArgumentError("initial weights do not match the geometry");
  if (k.row_length != g.n_det) throw ArgumentError("initial filter does not match the detector");

  FbpNetwork net;
  net.geometry = g;
  net.filter_length = k.spectrum.size();
  Graph& graph = net.graph;
  const NodeId x = graph.input(FbpNetwork::kInput);
  const NodeId wn = graph.parameter(FbpNetwork::kWeights, w.values, trainable.weights);
  const NodeId kn = graph.parameter(FbpNetwork::kFilter, k.parameters(), trainable.filter);
  const NodeId weighted = graph.apply(ops::mul(), {x, wn}, "weight");
  const NodeId filtered = graph.apply(ops::row_filter(g.n_det, net.filter_length), {weighted, kn}, "filter");
  const NodeId image = graph.apply(fbp_backprojector_op(g), {filtered}, "backproject");
  graph.apply(ops::relu(), {image}, "relu");
  return net;
}

Tensor FbpNetwork::reconstruct(const Tensor& projections) const {
  return graph.evaluate({{kInput, projections}});
}

WeightImage FbpNetwork::weights() const {
  return {graph.parameter_value(kWeights), graph.is_trainable(kWeights)};
}

FilterKernel FbpNetwork::filter() const {
  return FilterKernel::from_parameters(graph.parameter_value(kFilter), geometry.n_det, graph.is_trainable(kFilter));
}

Tensor fbp_reconstruct(const Tensor& projections, const FanBeamGeometry& g, const WeightImage& w,
                       const FilterKernel& k) {
  if (projections.shape() != g.sinogram_shape()) {
    throw ArgumentError("projections " + shape_string(projections.shape()) + " do not match geometry " +
                        shape_string(g.sinogram_shape()));
  }
  // Same arithmetic as the graph: halfcomplex round trip of the spectrum.
  const auto spectrum = halfcomplex_to_spectrum(k.parameters().values());
  const Tensor filtered = ops::apply_row_filter(mul(projections, w.values), spectrum);
  return relu(fbp_backproject_fan(filtered, g));
}

double roi_relative_rmse(const Tensor& recon, const Tensor& reference, const ImageGrid& grid, double radius) {
  if (!recon.same_shape(reference) || recon.shape() != grid.shape()) {
    throw ArgumentError("roi_relative_rmse: shape mismatch");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < grid.ny; ++i) {
    for (std::size_t j = 0; j < grid.nx; ++j) {
      if (std::hypot(grid.x(j), grid.y(i)) > radius) continue;
      const double d = recon.at(i, j) - reference.at(i, j);
      num += d * d;
      den += reference.at(i, j) * reference.at(i, j);
    }
  }
  if (den == 0.0) throw ArgumentError("roi_relative_rmse: reference is zero inside the ROI");
  return std::sqrt(num / den);
}

}  // namespace kol
