#pragma once

#include <cstddef>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "kol/graph.hpp"

namespace kol {

enum class OptimizerKind { sgd, momentum, adam };

OptimizerKind optimizer_kind_from_string(const std::string& s);
std::string to_string(OptimizerKind k);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Per-parameter multipliers on learning_rate; unlisted parameters use 1.
  std::map<std::string, double> lr_scale;

  double rate_for(const std::string& name) const;

  void validate() const;
};

nlohmann::json to_json(const OptimizerConfig& c);

/// First-order optimizer over the trainable parameters of one graph.
/// Auxiliary buffers are created lazily, shaped like their parameters.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);

  /// Applies one update using `grads` (keyed by parameter name). Parameters
  /// without a gradient entry are left untouched.
  void step(Graph& graph, const Gradients& grads);
  std::size_t steps() const { return steps_; }
  const OptimizerConfig& config() const { return config_; }
  /// Changes the base rate between steps (schedules); buffers are kept.
  void set_learning_rate(double lr);
  void reset();

 private:
  OptimizerConfig config_;
  std::size_t steps_ = 0;
  Gradients first_;
  Gradients second_;
};

}  // namespace kol
