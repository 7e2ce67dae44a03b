#include "kol/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "kol/tensor_ops.hpp"

namespace kol {

namespace {

Gradients snapshot(const Graph& graph) {
  Gradients out;
  for (const auto& name : graph.trainable_names()) out.emplace(name, graph.parameter_value(name));
  return out;
}

void restore(Graph& graph, const Gradients& params) {
  for (const auto& [name, value] : params) graph.set_parameter(name, value);
}

bool finite(const Gradients& g) {
  return std::all_of(g.begin(), g.end(), [](const auto& kv) { return kv.second.all_finite(); });
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

double evaluate_loss(const Graph& graph, const std::vector<Example>& data, const LossFn& loss,
                     std::vector<Tensor>* preds) {
  if (data.empty()) return 0.0;
  double total = 0.0;
  if (preds) preds->clear();
  for (const auto& ex : data) {
    Tensor y = graph.evaluate(ex.inputs);
    total += loss(y, ex.target).value;
    if (preds) preds->push_back(std::move(y));
  }
  return total / static_cast<double>(data.size());
}

TrainResult train_loop(Graph& graph, const std::vector<Example>& train, const std::vector<Example>& val,
                       const LossFn& loss, const TrainConfig& config, const MetricsFn& metrics,
                       const std::function<void(const EpochRecord&)>& on_record) {
  if (train.empty()) throw ArgumentError("train_loop: empty training set");
  if (graph.trainable_names().empty()) throw ArgumentError("train_loop: graph has no trainable parameters");
  Optimizer opt(config.optimizer);
  std::mt19937_64 rng(config.seed);
  TrainResult result;
  const auto& eval_set = val.empty() ? train : val;

  auto record = [&](std::size_t epoch, const std::string& split, const std::vector<Example>& data) {
    std::vector<Tensor> preds;
    EpochRecord r{epoch, split, evaluate_loss(graph, data, loss, &preds), {}};
    if (metrics) r.metrics = metrics(preds, data);
    result.history.push_back(r);
    if (on_record) on_record(r);
    return r.loss;
  };
  auto diverged = [&](const std::string& why, const Gradients& checkpoint) {
    restore(graph, checkpoint);
    return TrainingDiverged(why, checkpoint, result.history);
  };

  Gradients checkpoint = snapshot(graph);
  record(0, "train", train);
  result.initial_val_loss = val.empty() ? result.history.back().loss : record(0, "val", val);
  if (!std::isfinite(result.initial_val_loss)) throw diverged("initial loss is not finite", checkpoint);
  result.best_val_loss = result.initial_val_loss;
  result.best_parameters = checkpoint;

  const std::size_t batch = config.batch_size == 0 ? train.size() : std::min(config.batch_size, train.size());
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.shuffle) {
      // Fisher-Yates with an explicit index mapping keeps the order independent of the library.
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    }
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      Gradients acc;
      for (std::size_t b = start; b < end; ++b) {
        const Example& ex = train[order[b]];
        const Tape tape = graph.forward(ex.inputs);
        const LossValue lv = loss(tape.output(), ex.target);
        if (!std::isfinite(lv.value)) {
          throw diverged("loss became non-finite at epoch " + std::to_string(epoch), checkpoint);
        }
        for (auto& [name, g] : graph.backward(tape, lv.grad)) {
          auto it = acc.find(name);
          if (it == acc.end()) acc.emplace(name, std::move(g));
          else it->second = add(it->second, g);
        }
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (auto& kv : acc) kv.second = scale(kv.second, inv);
      if (!finite(acc)) throw diverged("gradient became non-finite at epoch " + std::to_string(epoch), checkpoint);
      opt.step(graph, acc);
    }
    const double train_loss = record(epoch, "train", train);
    const double val_loss = val.empty() ? train_loss : record(epoch, "val", eval_set);
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
      throw diverged("loss became non-finite at epoch " + std::to_string(epoch), checkpoint);
    }
    checkpoint = snapshot(graph);
    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      result.best_epoch = epoch;
      result.best_parameters = checkpoint;
    }
  }
  result.steps = opt.steps();
  if (config.keep_best) restore(graph, result.best_parameters);
  return result;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::set<std::string> names;
  for (const auto& r : history) {
    for (const auto& kv : r.metrics) names.insert(kv.first);
  }
  std::ostringstream os;
  os << "epoch,split,loss";
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  for (const auto& r : history) {
    os << r.epoch << ',' << r.split << ',' << format_double(r.loss);
    for (const auto& n : names) {
      os << ',';
      const auto it = r.metrics.find(n);
      if (it != r.metrics.end()) os << format_double(it->second);
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace kol
