#pragma once

#include "taskgraph/dataset/synthetic.hpp"
#include "taskgraph/inference/ensemble.hpp"
#include "taskgraph/inference/selection.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace taskgraph {

using HandSequences = std::array<std::vector<HandLabel>, kNumHands>;

struct SimulationConfig {
  int trials = 10;
  int primitive_frames = 12;  // duration of every executed primitive
  int step_cap = 3000;
  int history_frames = 1;     // static frames before the first step (model warm-up)
  std::uint64_t seed = 0;     // object placements
  RelationThresholds thresholds;
  int relation_step = 10;

  void validate() const;
};

/// What a predictor sees at one step of a trial.
struct SimulationContext {
  int trial = 0;
  int step = 0;
  const Demonstration* scene = nullptr;  // observed frames so far
  const ExecutionState* state = nullptr;
  const HandSequences* reference = nullptr;
  const HandSequences* executed = nullptr;
};

/// Source of per-hand (action, object) proposals; nullopt proposes nothing.
class ScenePredictor {
 public:
  virtual ~ScenePredictor() = default;
  virtual void reset(int /*trial*/) {}
  virtual std::array<std::optional<HandLabel>, kNumHands> predict(const SimulationContext& ctx) = 0;
};

/// Emits the next reference primitive of each hand.
class OraclePredictor : public ScenePredictor {
 public:
  std::array<std::optional<HandLabel>, kNumHands> predict(const SimulationContext& ctx) override;
};

/// Oracle that never proposes one reference primitive of one hand: the entry
/// at `index` of that hand's sequence is skipped. `trial` < 0 drops it in
/// every trial.
class DroppingPredictor : public ScenePredictor {
 public:
  DroppingPredictor(int hand, int index, int trial) : hand_(hand), index_(index), trial_(trial) {}
  std::array<std::optional<HandLabel>, kNumHands> predict(const SimulationContext& ctx) override;

 private:
  int hand_;
  int index_;
  int trial_;
};

/// Network proposals: the fused ensemble pair for the next step.
class ModelPredictor : public ScenePredictor {
 public:
  ModelPredictor(const Model& model, double decay);
  void reset(int trial) override;
  std::array<std::optional<HandLabel>, kNumHands> predict(const SimulationContext& ctx) override;

 private:
  const Model* model_;
  double decay_;
  EnsembleBuffer buffer_;
};

struct TrialResult {
  int trial = 0;
  bool success = false;
  bool hit_cap = false;
  int steps = 0;
  HandSequences reference;
  HandSequences executed;
  std::array<double, kNumHands> sequence_accuracy{};
  SelectionCounters counters;
};

struct SimulationReport {
  std::vector<TrialResult> trials;
  double success_rate = 0.0;
  std::array<double, kNumHands> sequence_accuracy{};  // mean over trials
  std::array<double, kNumHands> intervention_rate{};  // pooled over trials
  SelectionCounters counters;
};

/// Fraction of reference positions reproduced at the same index.
[[nodiscard]] double sequence_accuracy(const std::vector<HandLabel>& reference,
                                       const std::vector<HandLabel>& executed);

/// Runs `cfg.trials` trials. Each trial draws an object placement and its
/// reference sequences from a synthetic take of `task`, then loops
/// predict -> select_action -> kinematic step until both hands finished
/// their reference length, a hand diverged, or the step cap is hit.
[[nodiscard]] SimulationReport simulate_execution(ScenePredictor& predictor,
                                                  const SyntheticTaskSpec& task,
                                                  const Vocab& vocab,
                                                  const PreconditionRules& rules,
                                                  const SimulationConfig& cfg);

}  // namespace taskgraph
