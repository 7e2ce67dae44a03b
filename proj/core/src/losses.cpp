#include "kol/losses.hpp"

#include "kol/errors.hpp"

namespace kol {

namespace {

void check_pair(const Tensor& a, const Tensor& b, const char* what) {
  if (a.is_complex() || b.is_complex()) throw ArgumentError(std::string(what) + ": real tensors required");
  if (!a.same_shape(b)) {
    throw ArgumentError(std::string(what) + ": shape " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

}  // namespace

LossValue loss_mse(const Tensor& pred, const Tensor& target) {
  check_pair(pred, target, "loss_mse");
  const double n = static_cast<double>(pred.size());
  LossValue out{0.0, Tensor(pred.shape())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    out.value += d * d;
    out.grad[i] = 2.0 * d / n;
  }
  out.value /= n;
  return out;
}

LossValue loss_dice(const Tensor& pred, const Tensor& mask, double eps) {
  check_pair(pred, mask, "loss_dice");
  double inter = 0.0, total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    inter += pred[i] * mask[i];
    total += pred[i] + mask[i];
  }
  const double num = 2.0 * inter + eps, den = total + eps;
  LossValue out{1.0 - num / den, Tensor(pred.shape())};
  for (std::size_t i = 0; i < pred.size(); ++i) out.grad[i] = -(2.0 * mask[i] * den - num) / (den * den);
  return out;
}

}  // namespace kol
