#include "kol/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kol/errors.hpp"

namespace kol {

double rmse(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target)) throw ArgumentError("rmse: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - target[i]) * (pred[i] - target[i]);
  return std::sqrt(s / static_cast<double>(pred.size()));
}

double dice_coefficient(const Tensor& pred, const Tensor& mask) {
  if (!pred.same_shape(mask)) throw ArgumentError("dice: shape mismatch");
  double inter = 0.0, total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    inter += pred[i] * mask[i];
    total += pred[i] + mask[i];
  }
  return total == 0.0 ? 1.0 : 2.0 * inter / total;
}

double roc_auc(const Tensor& scores, const Tensor& labels) {
  if (!scores.same_shape(labels)) throw ArgumentError("roc_auc: shape mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + j + 1);  // 1-based average rank
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] > 0.5) {
        pos += 1.0;
        rank_sum += mid_rank;
      }
    }
    i = j;
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0) throw ArgumentError("roc_auc: labels must contain both classes");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

}  // namespace kol
