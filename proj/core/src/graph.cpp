#include "kol/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "kol/errors.hpp"
#include "kol/tensor_ops.hpp"

namespace kol {

const Tensor& Tape::value(NodeId id) const {
  if (id >= values_.size() || !values_[id]) {
    throw StateError("tape holds no value for node " + std::to_string(id));
  }
  return *values_[id];
}

NodeId Graph::add_node(Node node) {
  node.id = nodes_.size();
  if (node.name.empty()) node.name = "node" + std::to_string(node.id);
  if (by_name_.contains(node.name)) throw ArgumentError("duplicate node name '" + node.name + "'");
  by_name_.emplace(node.name, node.id);
  nodes_.push_back(std::move(node));
  ++structure_;
  return nodes_.back().id;
}

NodeId Graph::input(std::string name) {
  Node n;
  n.kind = NodeKind::input;
  n.name = std::move(name);
  return add_node(std::move(n));
}

NodeId Graph::parameter(std::string name, Tensor init, bool trainable) {
  Node n;
  n.kind = NodeKind::parameter;
  n.name = std::move(name);
  n.trainable = trainable;
  const NodeId id = add_node(std::move(n));
  params_.emplace(id, std::move(init));
  return id;
}

NodeId Graph::apply(OperatorPtr op, std::vector<NodeId> inputs, std::string name) {
  if (!op) throw ArgumentError("apply: null operator");
  for (NodeId in : inputs) {
    if (in >= nodes_.size()) throw ArgumentError("apply: input node " + std::to_string(in) + " does not exist");
  }
  Node n;
  n.kind = NodeKind::op;
  n.name = name.empty() ? op->name() + "#" + std::to_string(nodes_.size()) : std::move(name);
  n.op = std::move(op);
  n.inputs = std::move(inputs);
  const NodeId id = add_node(std::move(n));
  output_ = id;
  return id;
}

void Graph::set_output(NodeId id) {
  if (id >= nodes_.size()) throw ArgumentError("set_output: node does not exist");
  output_ = id;
}

NodeId Graph::output() const {
  if (!output_) throw StateError("graph has no output node");
  return *output_;
}

const Node& Graph::node(NodeId id) const {
  if (id >= nodes_.size()) throw ArgumentError("node " + std::to_string(id) + " does not exist");
  return nodes_[id];
}

NodeId Graph::find(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw ArgumentError("no node named '" + name + "'");
  return it->second;
}

const Tensor& Graph::parameter_value(const std::string& name) const {
  const NodeId id = find(name);
  auto it = params_.find(id);
  if (it == params_.end()) throw ArgumentError("'" + name + "' is not a parameter");
  return it->second;
}

void Graph::set_parameter(const std::string& name, Tensor value) {
  const NodeId id = find(name);
  auto it = params_.find(id);
  if (it == params_.end()) throw ArgumentError("'" + name + "' is not a parameter");
  if (!it->second.same_shape(value) || it->second.dtype() != value.dtype()) {
    throw ArgumentError("set_parameter '" + name + "': expected shape " + shape_string(it->second.shape()) +
                        ", got " + shape_string(value.shape()));
  }
  it->second = std::move(value);
}

void Graph::set_trainable(const std::string& name, bool trainable) {
  const NodeId id = find(name);
  if (nodes_[id].kind != NodeKind::parameter) throw ArgumentError("'" + name + "' is not a parameter");
  nodes_[id].trainable = trainable;
}

bool Graph::is_trainable(const std::string& name) const { return nodes_[find(name)].trainable; }

std::vector<std::string> Graph::parameter_names() const {
  std::vector<std::string> out;
  for (const auto& n : nodes_) {
    if (n.kind == NodeKind::parameter) out.push_back(n.name);
  }
  return out;
}

std::vector<std::string> Graph::trainable_names() const {
  std::vector<std::string> out;
  for (const auto& n : nodes_) {
    if (n.kind == NodeKind::parameter && n.trainable) out.push_back(n.name);
  }
  return out;
}

std::size_t Graph::trainable_scalar_count() const {
  std::size_t count = 0;
  for (const auto& n : nodes_) {
    if (n.kind == NodeKind::parameter && n.trainable) count += params_.at(n.id).size();
  }
  return count;
}

Gradients Graph::parameters() const {
  Gradients out;
  for (const auto& [id, value] : params_) out.emplace(nodes_[id].name, value);
  return out;
}

Tape Graph::forward(const Bindings& bindings) const {
  const NodeId out = output();
  std::vector<char> needed(nodes_.size(), 0);
  needed[out] = 1;
  for (std::size_t i = out + 1; i-- > 0;) {
    if (!needed[i]) continue;
    for (NodeId in : nodes_[i].inputs) needed[in] = 1;
  }

  Tape tape;
  tape.graph_ = this;
  tape.structure_ = structure_;
  tape.output_ = out;
  tape.values_.resize(nodes_.size());
  for (NodeId i = 0; i <= out; ++i) {
    if (!needed[i]) continue;
    const Node& n = nodes_[i];
    switch (n.kind) {
      case NodeKind::input: {
        auto it = bindings.find(n.name);
        if (it == bindings.end()) throw ArgumentError("input leaf '" + n.name + "' is not bound");
        tape.values_[i] = it->second;
        break;
      }
      case NodeKind::parameter:
        tape.values_[i] = params_.at(i);
        break;
      case NodeKind::op: {
        std::vector<const Tensor*> args;
        args.reserve(n.inputs.size());
        for (NodeId in : n.inputs) args.push_back(&*tape.values_[in]);
        try {
          tape.values_[i] = n.op->forward(args);
        } catch (const ArgumentError& e) {
          throw ArgumentError("node '" + n.name + "' (" + n.op->name() + "): " + e.what());
        }
        break;
      }
    }
    tape.order_.push_back(i);
  }
  return tape;
}

Gradients Graph::backward(const Tape& tape, const Tensor& loss_grad) const {
  return backward_all(tape, loss_grad, false).parameters;
}

Backprop Graph::backward_all(const Tape& tape, const Tensor& loss_grad, bool with_input_grads) const {
  if (tape.graph_ != this || tape.structure_ != structure_) {
    throw StateError("tape was recorded on a different graph or before the graph changed");
  }
  const Tensor& out_value = tape.value(tape.output_);
  if (!loss_grad.same_shape(out_value)) {
    throw ArgumentError("loss gradient shape " + shape_string(loss_grad.shape()) + " does not match output " +
                        shape_string(out_value.shape()));
  }

  // Only propagate into nodes that lead to something we report.
  std::vector<char> wants(nodes_.size(), 0);
  for (NodeId i : tape.order_) {
    const Node& n = nodes_[i];
    if (n.kind == NodeKind::parameter) wants[i] = n.trainable;
    else if (n.kind == NodeKind::input) wants[i] = with_input_grads;
    else {
      for (NodeId in : n.inputs) wants[i] = wants[i] || wants[in];
    }
  }

  std::vector<std::optional<Tensor>> grads(nodes_.size());
  grads[tape.output_] = loss_grad;
  for (auto it = tape.order_.rbegin(); it != tape.order_.rend(); ++it) {
    const NodeId i = *it;
    const Node& n = nodes_[i];
    if (n.kind != NodeKind::op || !grads[i] || !wants[i]) continue;
    std::vector<const Tensor*> args;
    std::vector<bool> needed;
    args.reserve(n.inputs.size());
    for (NodeId in : n.inputs) {
      args.push_back(&tape.value(in));
      needed.push_back(wants[in] != 0);
    }
    std::vector<Tensor> input_grads = n.op->backward_needed(args, tape.value(i), *grads[i], needed);
    if (input_grads.size() != n.inputs.size()) {
      throw StateError("operator '" + n.op->name() + "' returned the wrong number of gradients");
    }
    for (std::size_t k = 0; k < n.inputs.size(); ++k) {
      const NodeId in = n.inputs[k];
      if (!wants[in]) continue;
      if (grads[in]) grads[in] = add(*grads[in], input_grads[k]);
      else grads[in] = std::move(input_grads[k]);
    }
  }

  Backprop result;
  for (const Node& n : nodes_) {
    if (n.kind == NodeKind::parameter && n.trainable) {
      const Tensor& p = params_.at(n.id);
      result.parameters.emplace(n.name, grads[n.id] ? *grads[n.id]
                                                    : (p.is_complex() ? Tensor::complex_zeros(p.shape())
                                                                      : Tensor::zeros(p.shape())));
    } else if (with_input_grads && n.kind == NodeKind::input && grads[n.id]) {
      result.inputs.emplace(n.name, *grads[n.id]);
    }
  }
  return result;
}

nlohmann::json Graph::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const Node& n : nodes_) {
    nlohmann::json j;
    j["id"] = n.id;
    j["name"] = n.name;
    switch (n.kind) {
      case NodeKind::input: j["kind"] = "input-leaf"; break;
      case NodeKind::parameter: {
        const Tensor& p = params_.at(n.id);
        j["kind"] = "parameter-leaf";
        j["trainable"] = n.trainable;
        j["shape"] = p.shape();
        j["dtype"] = p.is_complex() ? "complex" : "real";
        break;
      }
      case NodeKind::op:
        j["kind"] = "known-op";
        j["op"] = n.op->describe();
        j["inputs"] = n.inputs;
        break;
    }
    nodes.push_back(std::move(j));
  }
  nlohmann::json out;
  out["nodes"] = std::move(nodes);
  if (output_) out["output"] = *output_;
  out["trainable_scalars"] = trainable_scalar_count();
  return out;
}

double GradcheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.max_rel_error);
  return m;
}

nlohmann::json GradcheckReport::to_json() const {
  nlohmann::json j;
  j["tolerance"] = tolerance;
  j["pass"] = pass;
  j["max_rel_error"] = max_rel_error();
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : entries) {
    rows.push_back({{"parameter", e.parameter},
                    {"checked", e.checked},
                    {"max_rel_error", e.max_rel_error},
                    {"refined", e.refined},
                    {"worst_index", e.worst_index},
                    {"analytic", e.worst_analytic},
                    {"numeric", e.worst_numeric}});
  }
  j["parameters"] = std::move(rows);
  return j;
}

GradcheckReport gradcheck(Graph& graph, const Bindings& bindings, const GradcheckOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);

  const Tape tape = graph.forward(bindings);
  const Tensor& y = tape.output();
  std::vector<double> probe(y.size());
  for (auto& v : probe) v = uni(rng);
  if (options.output_mask) {
    if (!options.output_mask->same_shape(y)) throw ArgumentError("gradcheck: output mask shape mismatch");
    auto m = options.output_mask->values();
    for (std::size_t i = 0; i < probe.size(); ++i) probe[i] *= m[i];
  }
  Tensor r(y.shape(), probe);
  auto probe_loss = [&](const Tensor& out) { return dot(r, out.real_part()); };

  const Gradients analytic = graph.backward(tape, y.is_complex() ? r.to_complex() : r);
  const double l0 = probe_loss(y);

  GradcheckReport report;
  report.tolerance = options.tolerance;
  std::vector<std::string> names = options.only.empty() ? graph.trainable_names() : options.only;
  for (const auto& name : names) {
    const Tensor original = graph.parameter_value(name);
    if (original.is_complex()) throw ArgumentError("gradcheck supports real parameters only");
    const Tensor& g = analytic.at(name);
    std::vector<std::size_t> idx(original.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (options.max_entries && idx.size() > options.max_entries) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(options.max_entries);
      std::sort(idx.begin(), idx.end());
    }

    std::vector<double> numeric(idx.size());
    std::size_t refined = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const std::size_t i = idx[k];
      const double theta = original[i];
      double h = options.relative_step * std::max(1.0, std::fabs(theta));
      for (std::size_t attempt = 0;; ++attempt) {
        Tensor moved = original;
        moved[i] = theta + h;
        graph.set_parameter(name, moved);
        const double lp = probe_loss(graph.evaluate(bindings));
        moved[i] = theta - h;
        graph.set_parameter(name, moved);
        const double lm = probe_loss(graph.evaluate(bindings));
        numeric[k] = (lp - lm) / (2.0 * h);
        // one-sided quotients that disagree mean a kink inside [theta - h, theta + h]
        const double fwd = (lp - l0) / h, bwd = (l0 - lm) / h;
        const double noise = 1e3 * std::numeric_limits<double>::epsilon() * (1.0 + std::fabs(l0)) / h;
        if (std::fabs(fwd - bwd) <= 0.1 * options.tolerance * std::max(std::fabs(fwd), std::fabs(bwd)) + noise ||
            attempt == options.kink_retries) {
          break;
        }
        if (attempt == 0) ++refined;
        h *= 0.1;
      }
    }
    graph.set_parameter(name, original);

    double scale = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      scale = std::max({scale, std::fabs(numeric[k]), std::fabs(g[idx[k]])});
    }
    // Entries six orders of magnitude below the largest one are compared in
    // absolute terms against that floor.
    const double floor = 1e-6 * scale + 1e-300;
    GradcheckEntry entry;
    entry.parameter = name;
    entry.checked = idx.size();
    entry.refined = refined;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const double a = g[idx[k]];
      const double n = numeric[k];
      const double rel = std::fabs(a - n) / std::max({std::fabs(a), std::fabs(n), floor});
      if (rel > entry.max_rel_error || k == 0) {
        entry.max_rel_error = std::max(entry.max_rel_error, rel);
        entry.worst_index = idx[k];
        entry.worst_analytic = a;
        entry.worst_numeric = n;
      }
    }
    report.entries.push_back(entry);
  }
  report.pass = !report.entries.empty() && report.max_rel_error() <= options.tolerance;
  return report;
}

}  // namespace kol
