#pragma once

#include "kol/tensor.hpp"

namespace kol {

double rmse(const Tensor& pred, const Tensor& target);
/// Soft Dice coefficient 2 sum(p m) / (sum(p) + sum(m)); 1 when both are empty.
double dice_coefficient(const Tensor& pred, const Tensor& mask);
/// Pixel ROC-AUC of `scores` against binary `labels` (Mann-Whitney, ties
/// counted half). Requires both classes to be present.
double roc_auc(const Tensor& scores, const Tensor& labels);

}  // namespace kol
