#pragma once

#include "kol/tensor.hpp"

namespace kol {

/// Loss value together with dLoss/dPrediction, the seed for backward.
struct LossValue {
  double value = 0.0;
  Tensor grad;
};

/// Mean squared error over all entries.
LossValue loss_mse(const Tensor& pred, const Tensor& target);

/// Soft Dice loss 1 - (2 sum(p m) + eps) / (sum(p) + sum(m) + eps).
LossValue loss_dice(const Tensor& pred, const Tensor& mask, double eps = 1e-6);

}  // namespace kol
