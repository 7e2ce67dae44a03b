#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kol/tensor.hpp"

namespace kol {

using NodeId = std::size_t;
using Bindings = std::map<std::string, Tensor>;
using Gradients = std::map<std::string, Tensor>;

/// A node operation with its forward rule and vector-Jacobian products.
///
/// Every operator must provide a gradient (or sub-gradient) for each of its
/// inputs, including fixed operators without parameters, so that trainable
/// nodes upstream of them still receive signal.
class Operator {
 public:
  virtual ~Operator() = default;

  virtual std::string name() const = 0;
  virtual Tensor forward(std::span<const Tensor* const> inputs) const = 0;
  /// One gradient per input, shaped like the input. For complex inputs the
  /// gradient is taken w.r.t. the real inner product Re<a, b>.
  virtual std::vector<Tensor> backward(std::span<const Tensor* const> inputs, const Tensor& output,
                                       const Tensor& grad_output) const = 0;
  /// Like backward, but inputs whose `needed` flag is false may receive an
  /// arbitrary placeholder. Expensive operators override this to skip work.
  virtual std::vector<Tensor> backward_needed(std::span<const Tensor* const> inputs, const Tensor& output,
                                              const Tensor& grad_output, const std::vector<bool>& needed) const {
    (void)needed;
    return backward(inputs, output, grad_output);
  }
  virtual nlohmann::json describe() const { return {{"op", name()}}; }
};

using OperatorPtr = std::shared_ptr<const Operator>;

enum class NodeKind { input, parameter, op };

struct Node {
  NodeId id = 0;
  NodeKind kind = NodeKind::op;
  std::string name;
  OperatorPtr op;
  std::vector<NodeId> inputs;
  bool trainable = false;
};

class Graph;

/// Forward values cached for one evaluation of a graph.
class Tape {
 public:
  const Tensor& value(NodeId id) const;
  const Tensor& output() const { return value(output_); }
  NodeId output_id() const { return output_; }
  /// Nodes in evaluation order.
  const std::vector<NodeId>& order() const { return order_; }

 private:
  friend class Graph;
  const Graph* graph_ = nullptr;
  std::uint64_t structure_ = 0;
  NodeId output_ = 0;
  std::vector<NodeId> order_;
  std::vector<std::optional<Tensor>> values_;
};

struct Backprop {
  Gradients parameters;  ///< keyed by trainable parameter name
  Gradients inputs;      ///< keyed by input name, only when requested
};

/// Directed acyclic graph of input leaves, parameter leaves and operators.
///
/// Nodes can only reference nodes that already exist, so insertion order is a
/// topological order and the graph is acyclic by construction.
class Graph {
 public:
  NodeId input(std::string name);
  NodeId parameter(std::string name, Tensor init, bool trainable = true);
  NodeId apply(OperatorPtr op, std::vector<NodeId> inputs, std::string name = {});

  void set_output(NodeId id);
  NodeId output() const;

  /// Evaluates every ancestor of the output in insertion order.
  Tape forward(const Bindings& bindings) const;
  Tensor evaluate(const Bindings& bindings) const { return forward(bindings).output(); }

  /// Reverse-mode pass seeded with dLoss/dOutput. Returns gradients for every
  /// trainable parameter that the output depends on (zeros otherwise).
  Gradients backward(const Tape& tape, const Tensor& loss_grad) const;
  Backprop backward_all(const Tape& tape, const Tensor& loss_grad, bool with_input_grads) const;

  const Node& node(NodeId id) const;
  const std::vector<Node>& nodes() const { return nodes_; }
  NodeId find(const std::string& name) const;

  const Tensor& parameter_value(const std::string& name) const;
  void set_parameter(const std::string& name, Tensor value);
  void set_trainable(const std::string& name, bool trainable);
  bool is_trainable(const std::string& name) const;
  std::vector<std::string> parameter_names() const;
  std::vector<std::string> trainable_names() const;
  std::size_t trainable_scalar_count() const;
  Gradients parameters() const;

  /// Structure description: node kinds, edges, parameter shapes.
  nlohmann::json to_json() const;

 private:
  NodeId add_node(Node node);

  std::vector<Node> nodes_;
  std::map<std::string, NodeId> by_name_;
  std::map<NodeId, Tensor> params_;
  std::optional<NodeId> output_;
  std::uint64_t structure_ = 0;
};

struct GradcheckOptions {
  double tolerance = 1e-3;
  double relative_step = 1e-5;
  /// Times the step is divided by 10 when the one-sided differences disagree
  /// (a non-differentiable point within the step).
  std::size_t kink_retries = 3;
  /// Entries sampled per parameter; 0 checks every entry.
  std::size_t max_entries = 48;
  std::uint64_t seed = 1234;
  /// Output entries where the mask is 0 do not enter the probe loss.
  std::optional<Tensor> output_mask;
  /// Restricts the check to these parameters; empty means all trainable ones.
  std::vector<std::string> only;
};

struct GradcheckEntry {
  std::string parameter;
  std::size_t checked = 0;
  std::size_t refined = 0;  ///< entries that needed a smaller step
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  double tolerance = 0.0;
  bool pass = false;
  double max_rel_error() const;
  nlohmann::json to_json() const;
};

/// Compares reverse-mode gradients of the probe loss <r, output> (r random,
/// seeded) against central finite differences for every trainable parameter.
GradcheckReport gradcheck(Graph& graph, const Bindings& bindings, const GradcheckOptions& options = {});

}  // namespace kol
