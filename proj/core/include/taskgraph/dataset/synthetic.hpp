#pragma once

#include "taskgraph/demonstration.hpp"
#include "taskgraph/relations.hpp"
#include "taskgraph/vocab.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace taskgraph {

/// A scene object referenced by name from the hand scripts.
struct ObjectRole {
  std::string name;
  std::vector<std::string> classes;  // one class is drawn per take
  Point region_min;                  // placement box on the table (z ignored)
  Point region_max;
  bool optional = false;             // distractor, included at random
};

struct ScriptStep {
  std::string action;
  std::string object;  // role name; empty means `none`
  std::string target;  // role the motion is relative to (pour/stir/insert/wipe)
  int min_frames = 10;
  int max_frames = 20;
  /// Tag of an other-hand step that must be finished before this one starts;
  /// "*" waits for the other hand's whole script.
  std::string after;
  std::string tag;
};

/// A run of steps that stays together. Consecutive sub-tasks sharing a
/// shuffle group (>= 0) are permuted per take.
struct SubTask {
  std::vector<ScriptStep> steps;
  int shuffle_group = -1;
};

struct SyntheticTaskSpec {
  std::string task;  // task label
  std::vector<ObjectRole> roles;
  int min_objects = 2;  // node count incl. both hands
  int max_objects = 2;
  std::array<std::vector<SubTask>, kNumHands> scripts;
  int lead_in_min = 10;
  int lead_in_max = 20;
  int tail_min = 10;
  int tail_max = 20;
  double noise_stddev = 0.001;     // meters
  double workspace_offset = 0.05;  // max per-subject shift in x and y, meters
  double speed_min = 0.8;          // per-subject duration scale range
  double speed_max = 1.2;
  double frame_rate = 30.0;

  void validate(const Vocab& vocab) const;
};

/// Desk-scale stand-ins for the recorded tasks: "cooking", "insert", "wiping".
[[nodiscard]] SyntheticTaskSpec builtin_task_spec(const std::string& task);

struct GeneratorOptions {
  RelationThresholds thresholds;
  int relation_step = 10;
};

/// `subjects` x `takes` demonstrations named s1..sK, deterministic in `seed`.
[[nodiscard]] std::vector<Demonstration> generate_synthetic(const SyntheticTaskSpec& spec,
                                                            const Vocab& vocab, int subjects,
                                                            int takes, std::uint64_t seed,
                                                            const GeneratorOptions& options = {});

/// Per-hand sequence of distinct (action, object) runs, idle runs removed.
[[nodiscard]] std::vector<HandLabel> primitive_sequence(const Demonstration& demo, int hand,
                                                        const Vocab& vocab);

/// Minimum-jerk progress 10s^3 - 15s^4 + 6s^5 for s in [0, 1] (clamped).
[[nodiscard]] double min_jerk(double s);

}  // namespace taskgraph
