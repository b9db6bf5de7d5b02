#pragma once

#include "taskgraph/relations.hpp"
#include "taskgraph/vocab.hpp"

#include <array>
#include <string>
#include <vector>

namespace taskgraph {

enum Hand : int { kRight = 0, kLeft = 1 };
inline constexpr int kNumHands = 2;

/// (action, object label) executed by one hand.
struct HandLabel {
  int action = 0;
  int object = 0;

  friend bool operator==(const HandLabel&, const HandLabel&) = default;
};

struct Frame {
  int frame_id = 0;
  std::vector<Point> positions;        // one per roster entry, meters
  std::vector<RelationBits> relations;  // one per directed edge (may be empty)
  std::array<HandLabel, kNumHands> hands{};
};

/// One recorded take: a fixed roster of objects (hands included) observed
/// over a strictly increasing frame sequence.
struct Demonstration {
  std::string subject;
  int task = 0;
  int take = 0;
  double frame_rate = 30.0;
  std::vector<int> roster;  // object class per node
  std::vector<Frame> frames;

  [[nodiscard]] int num_nodes() const { return static_cast<int>(roster.size()); }
  [[nodiscard]] int num_frames() const { return static_cast<int>(frames.size()); }
};

/// Throws InputError on any broken invariant.
void validate(const Demonstration& demo, const Vocab& vocab);

/// Recomputes every frame's relations; the dynamic bits compare against the
/// frame `step` positions earlier (absent for the first `step` frames).
void recompute_relations(Demonstration& demo, const RelationThresholds& thresholds, int step);

[[nodiscard]] bool relations_present(const Demonstration& demo);

}  // namespace taskgraph
