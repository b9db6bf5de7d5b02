#pragma once

#include "taskgraph/inference/ensemble.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace taskgraph {

using Predictor = std::function<PredictionBundle(const GraphSlice&)>;

struct RolloutConfig {
  double decay = 0.1;  // ensemble decay m
};

/// Fused prediction for the frame after each model call.
struct RolloutStep {
  int frame = 0;     // frame position the prediction is for (t + 1)
  int frame_id = 0;  // its id when the stream has it, else -1
  FusedStep fused;
  std::optional<std::array<HandLabel, kNumHands>> truth;
};

struct RolloutResult {
  std::vector<RolloutStep> steps;  // stream length - warm-up entries
  std::string warning;             // set when the stream is too short
};

/// Runs the predictor at every frame t >= warm-up, feeds the ensemble and
/// emits the fused pair for t + 1. Relations must be present.
[[nodiscard]] RolloutResult rollout(const Predictor& predictor, const Demonstration& demo,
                                    const SliceConfig& slice, const Vocab& vocab,
                                    const Standardizer& stats, const RolloutConfig& cfg);
[[nodiscard]] RolloutResult rollout(const Model& model, const Demonstration& demo,
                                    const RolloutConfig& cfg);

/// Fraction of steps with ground truth whose fused (action, object) pair
/// matches on both hands separately: {right, left}.
[[nodiscard]] std::array<double, kNumHands> rollout_accuracy(const RolloutResult& result);

}  // namespace taskgraph
