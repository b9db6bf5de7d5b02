#pragma once

#include "taskgraph/nn/param_store.hpp"

#include <cstdint>
#include <vector>

namespace taskgraph::nn {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
};

/// Moments for trainable parameters; frozen parameters keep empty slots.
struct OptimizerState {
  AdamWConfig config;
  std::int64_t step = 0;
  std::vector<Mat> first_moment;
  std::vector<Mat> second_moment;

  /// Fresh state sized for the trainable subset of `params`.
  static OptimizerState create(const ParamStore& params, const AdamWConfig& config);
};

/// One decoupled-weight-decay Adam update. Missing gradients count as zero.
void adamw_step(ParamStore& params, const GradBuffer& grads, OptimizerState& state);

}  // namespace taskgraph::nn
