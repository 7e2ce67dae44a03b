#include "kol/optim.hpp"

#include <cmath>

#include "kol/errors.hpp"

namespace kol {

OptimizerKind optimizer_kind_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "sgd-momentum" || s == "momentum") return OptimizerKind::momentum;
  if (s == "adam") return OptimizerKind::adam;
  throw ArgumentError("unknown optimizer '" + s + "'");
}

std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::momentum: return "sgd-momentum";
    case OptimizerKind::adam: return "adam";
  }
  return "?";
}

void OptimizerConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ArgumentError("learning rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ArgumentError("momentum must lie in [0, 1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ArgumentError("adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ArgumentError("adam epsilon must be positive");
  for (const auto& [name, f] : lr_scale) {
    if (!(f >= 0.0) || !std::isfinite(f)) throw ArgumentError("lr_scale for '" + name + "' must be >= 0");
  }
}

double OptimizerConfig::rate_for(const std::string& name) const {
  const auto it = lr_scale.find(name);
  return learning_rate * (it == lr_scale.end() ? 1.0 : it->second);
}

nlohmann::json to_json(const OptimizerConfig& c) {
  nlohmann::json j = {{"kind", to_string(c.kind)}, {"learning_rate", c.learning_rate}, {"momentum", c.momentum},
                      {"beta1", c.beta1},          {"beta2", c.beta2},                 {"epsilon", c.epsilon}};
  if (!c.lr_scale.empty()) j["lr_scale"] = c.lr_scale;
  return j;
}

Optimizer::Optimizer(OptimizerConfig config) : config_(config) { config_.validate(); }

void Optimizer::set_learning_rate(double lr) {
  OptimizerConfig next = config_;
  next.learning_rate = lr;
  next.validate();
  config_ = std::move(next);
}

void Optimizer::reset() {
  steps_ = 0;
  first_.clear();
  second_.clear();
}

void Optimizer::step(Graph& graph, const Gradients& grads) {
  ++steps_;
  for (const auto& name : graph.trainable_names()) {
    const double lr = config_.rate_for(name);
    const auto it = grads.find(name);
    if (it == grads.end()) continue;
    const Tensor& g = it->second;
    Tensor p = graph.parameter_value(name);
    if (!g.same_shape(p)) throw ArgumentError("gradient for '" + name + "' has the wrong shape");
    auto pv = p.values();
    const auto gv = g.values();
    switch (config_.kind) {
      case OptimizerKind::sgd:
        for (std::size_t i = 0; i < pv.size(); ++i) pv[i] -= lr * gv[i];
        break;
      case OptimizerKind::momentum: {
        auto v = first_.try_emplace(name, Tensor::zeros(p.shape())).first->second.values();
        for (std::size_t i = 0; i < pv.size(); ++i) {
          v[i] = config_.momentum * v[i] + gv[i];
          pv[i] -= lr * v[i];
        }
        break;
      }
      case OptimizerKind::adam: {
        auto m = first_.try_emplace(name, Tensor::zeros(p.shape())).first->second.values();
        auto v = second_.try_emplace(name, Tensor::zeros(p.shape())).first->second.values();
        const double t = static_cast<double>(steps_);
        const double c1 = 1.0 - std::pow(config_.beta1, t);
        const double c2 = 1.0 - std::pow(config_.beta2, t);
        for (std::size_t i = 0; i < pv.size(); ++i) {
          m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * gv[i];
          v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * gv[i] * gv[i];
          pv[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
        }
        break;
      }
    }
    graph.set_parameter(name, std::move(p));
  }
}

}  // namespace kol
