#pragma once

#include "taskgraph/model.hpp"
#include "taskgraph/nn/adamw.hpp"
#include "taskgraph/training/loss.hpp"
#include "taskgraph/training/metrics.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace taskgraph {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 128;
  double beta_mse = 1000.0;
  nn::AdamWConfig optimizer;
  std::vector<std::uint64_t> seeds{0};
  int eval_epoch = 0;  // epoch whose parameters are reported; 0 means the last
  int eval_every = 1;  // validation cadence in epochs; 0 disables validation
  bool teacher_forcing = true;
  bool freeze_encoder = false;

  void validate() const;
  [[nodiscard]] int reported_epoch() const { return eval_epoch > 0 ? eval_epoch : epochs; }
};

struct EpochLog {
  int epoch = 0;
  LossBreakdown train;                       // mean over batches
  std::optional<LossBreakdown> validation;   // whole validation set as one batch
  std::optional<MetricsReport> metrics;      // on the validation set
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  nn::ParamStore eval_params;  // snapshot at the reported epoch
  nn::ParamStore best_params;  // lowest validation loss (or last epoch without validation)
  int best_epoch = 0;
  double best_loss = 0.0;
  nn::OptimizerState optimizer;
  bool aborted = false;
  std::string abort_reason;
};

/// Called after each epoch; returning false stops training early.
using EpochCallback = std::function<bool(const EpochLog&, const Model&)>;

/// Loss of one batch; with `grads`, parameter gradients are accumulated too.
/// Samples get their own tape and are summed in batch order.
LossBreakdown batch_loss(const Model& model, const std::vector<const GraphSlice*>& batch,
                         const ClassWeights& weights, double beta_mse, bool teacher_forcing,
                         nn::GradBuffer* grads);

/// Epoch loop with AdamW. Throws nothing on divergence: a non-finite loss
/// stops the run and sets `aborted`.
TrainResult train_model(Model& model, const std::vector<const GraphSlice*>& train,
                        const std::vector<const GraphSlice*>& validation,
                        const ClassWeights& weights, const TrainConfig& cfg,
                        std::uint64_t shuffle_seed, const EpochCallback& on_epoch = {});

/// Freezes every "encoder." parameter, then trains the rest with a fresh
/// optimizer state.
TrainResult finetune(Model& model, const std::vector<const GraphSlice*>& train,
                     const std::vector<const GraphSlice*>& validation,
                     const ClassWeights& weights, const TrainConfig& cfg,
                     std::uint64_t shuffle_seed, const EpochCallback& on_epoch = {});

}  // namespace taskgraph
