#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kol/errors.hpp"
#include "kol/graph.hpp"
#include "kol/losses.hpp"
#include "kol/optim.hpp"

namespace kol {

struct Example {
  Bindings inputs;
  Tensor target;
};

using LossFn = std::function<LossValue(const Tensor& pred, const Tensor& target)>;
/// Extra per-split metrics computed from all predictions of a split.
using MetricsFn =
    std::function<std::map<std::string, double>(const std::vector<Tensor>& preds, const std::vector<Example>& data)>;

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 0;  ///< 0 means full batch
  bool shuffle = true;
  std::uint64_t seed = 0;
  OptimizerConfig optimizer;
  bool keep_best = true;  ///< restore the parameters with the lowest validation loss
};

struct EpochRecord {
  std::size_t epoch = 0;  ///< 0 is the evaluation before any update
  std::string split;
  double loss = 0.0;
  std::map<std::string, double> metrics;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  Gradients best_parameters;
  std::size_t best_epoch = 0;
  double initial_val_loss = 0.0;
  double best_val_loss = 0.0;
  std::size_t steps = 0;
};

/// Thrown when a loss or gradient becomes non-finite. The graph is reset to
/// `checkpoint`, the last parameters that produced a finite loss.
class TrainingDiverged : public NumericalError {
 public:
  TrainingDiverged(const std::string& what, Gradients checkpoint, std::vector<EpochRecord> history)
      : NumericalError(what), checkpoint(std::move(checkpoint)), history(std::move(history)) {}
  Gradients checkpoint;
  std::vector<EpochRecord> history;
};

/// Mean loss and predictions over a data set without updating anything.
double evaluate_loss(const Graph& graph, const std::vector<Example>& data, const LossFn& loss,
                     std::vector<Tensor>* preds = nullptr);

/// Mini-batch training with gradients averaged over each batch. Records the
/// train and validation loss before training (epoch 0) and after every epoch.
TrainResult train_loop(Graph& graph, const std::vector<Example>& train, const std::vector<Example>& val,
                       const LossFn& loss, const TrainConfig& config, const MetricsFn& metrics = {},
                       const std::function<void(const EpochRecord&)>& on_record = {});

/// Writes the history as CSV with columns epoch, split, loss and the sorted
/// union of metric names.
std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace kol
