#pragma once

#include "taskgraph/nn/param_store.hpp"

#include <cstdint>
#include <functional>
#include <string>

namespace taskgraph::nn {

/// Evaluates the loss at the store's current values; when `grads` is non-null
/// it also receives the analytic gradient.
using LossWithGrad = std::function<double(const ParamStore& params, GradBuffer* grads)>;

struct GradCheckOptions {
  double step = 1e-5;
  std::size_t samples = 200;
  double rel_tol = 1e-3;
  /// Added to the denominator so that near-zero gradients are compared on an
  /// absolute scale.
  double abs_floor = 1e-6;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::string worst_param;
  Eigen::Index worst_coordinate = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  bool passed = false;
};

/// Central finite differences on a random subsample of trainable scalars.
/// Parameter values are restored before returning.
GradCheckReport grad_check(const LossWithGrad& loss, ParamStore& params,
                           const GradCheckOptions& options);

}  // namespace taskgraph::nn
