#pragma once

#include "taskgraph/demonstration.hpp"
#include "taskgraph/model.hpp"

#include <array>
#include <map>
#include <optional>
#include <vector>

namespace taskgraph {

/// Class probabilities of one hand for one execution step.
struct HandProbabilities {
  Eigen::VectorXd action;
  Eigen::VectorXd object;
};

/// One model call's view of one execution step.
struct StepPrediction {
  int origin = 0;  // step the prediction was made at
  std::array<HandProbabilities, kNumHands> hands;
  nn::Mat coords;  // [N x 3], meters
};

struct FusedStep {
  int step = 0;
  std::array<HandLabel, kNumHands> pairs{};  // argmax of the fused probabilities
  std::array<HandProbabilities, kNumHands> hands;
  nn::Mat coords;               // [N x 3] weighted mean, meters
  std::vector<double> weights;  // oldest first, sums to 1
};

/// Normalized weights exp(-m i), i = 0 for the oldest of `count` predictions.
/// An infinite decay keeps the oldest prediction only.
[[nodiscard]] std::vector<double> ensemble_weights(int count, double decay);

/// Index of the largest entry; ties go to the lowest index.
[[nodiscard]] int argmax(const Eigen::VectorXd& v);

/// Overlapping horizon predictions keyed by execution step.
class EnsembleBuffer {
 public:
  EnsembleBuffer(int horizon, double decay);

  /// Stores a bundle made at step `origin`; horizon row p covers step
  /// origin + 1 + p. Origins must be strictly increasing.
  void update(int origin, const PredictionBundle& bundle);
  void update(StepPrediction prediction, int step);

  /// Fuses every stored prediction for `step`; nullopt when none exists.
  [[nodiscard]] std::optional<FusedStep> query(int step) const;

  /// Drops entries for steps before `step`.
  void prune(int step);

  [[nodiscard]] int horizon() const { return horizon_; }
  [[nodiscard]] double decay() const { return decay_; }
  [[nodiscard]] std::size_t entries(int step) const;

 private:
  int horizon_;
  double decay_;
  int last_origin_ = -1;
  bool any_ = false;
  std::map<int, std::vector<StepPrediction>> steps_;
};

}  // namespace taskgraph
