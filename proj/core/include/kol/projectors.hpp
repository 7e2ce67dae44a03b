#pragma once

#include "kol/geometry.hpp"
#include "kol/graph.hpp"
#include "kol/tensor.hpp"

namespace kol {

/// Ray-driven line integrals: each ray is sampled at a fixed step of half a
/// pixel with bilinear interpolation. Output shape (n_angles, n_det).
Tensor project_parallel(const Tensor& image, const ParallelGeometry& g);
/// Exact transpose of project_parallel (same samples and weights, scattered).
Tensor backproject_parallel(const Tensor& sinogram, const ParallelGeometry& g);

Tensor project_fan(const Tensor& image, const FanBeamGeometry& g);
/// Exact transpose of project_fan.
Tensor backproject_fan(const Tensor& sinogram, const FanBeamGeometry& g);

/// Pixel-driven fan-beam backprojection as used in filtered backprojection:
/// each pixel reads every view at its detector coordinate (linear
/// interpolation) with the distance weight 1 / U^2 and the view's angular
/// quadrature weight.
Tensor fbp_backproject_fan(const Tensor& sinogram, const FanBeamGeometry& g);
/// Exact transpose of fbp_backproject_fan.
Tensor fbp_backproject_fan_adjoint(const Tensor& image, const FanBeamGeometry& g);

/// Graph operators wrapping the pairs above; backward is the transpose.
OperatorPtr parallel_projector_op(const ParallelGeometry& g);
OperatorPtr parallel_backprojector_op(const ParallelGeometry& g);
OperatorPtr fan_projector_op(const FanBeamGeometry& g);
OperatorPtr fan_backprojector_op(const FanBeamGeometry& g);
OperatorPtr fbp_backprojector_op(const FanBeamGeometry& g);

}  // namespace kol
