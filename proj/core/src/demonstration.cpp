#include "taskgraph/demonstration.hpp"

#include "taskgraph/errors.hpp"

#include <algorithm>

namespace taskgraph {

void validate(const Demonstration& demo, const Vocab& vocab) {
  const int n = demo.num_nodes();
  if (n < 2) throw InputError("demonstration needs at least two objects (both hands)");
  if (std::ranges::count(demo.roster, vocab.right_hand_class()) != 1 ||
      std::ranges::count(demo.roster, vocab.left_hand_class()) != 1) {
    throw InputError("roster must contain exactly one right_hand and one left_hand");
  }
  for (int c : demo.roster) {
    if (c < 0 || c >= vocab.num_object_classes()) throw InputError("roster class out of range");
  }
  if (demo.task < 0 || demo.task >= vocab.num_tasks()) throw InputError("task out of range");
  const auto m = static_cast<std::size_t>(num_edges(n));
  for (std::size_t i = 0; i < demo.frames.size(); ++i) {
    const Frame& f = demo.frames[i];
    if (i > 0 && f.frame_id <= demo.frames[i - 1].frame_id) {
      throw InputError("frame ids must be strictly increasing");
    }
    if (f.positions.size() != static_cast<std::size_t>(n)) {
      throw InputError("frame " + std::to_string(f.frame_id) + " has " +
                       std::to_string(f.positions.size()) + " positions, roster has " +
                       std::to_string(n));
    }
    for (const Point& p : f.positions) {
      if (!p.allFinite()) throw InputError("non-finite position in frame " + std::to_string(f.frame_id));
    }
    if (!f.relations.empty() && f.relations.size() != m) {
      throw InputError("frame " + std::to_string(f.frame_id) + " has a wrong relation count");
    }
    for (const HandLabel& h : f.hands) {
      if (h.action < 0 || h.action >= vocab.num_actions() || h.object < 0 ||
          h.object >= vocab.num_object_labels()) {
        throw InputError("hand label out of range in frame " + std::to_string(f.frame_id));
      }
    }
  }
}

void recompute_relations(Demonstration& demo, const RelationThresholds& thresholds, int step) {
  if (step < 1) throw ConfigError("relation step must be >= 1");
  thresholds.validate();
  for (std::size_t i = 0; i < demo.frames.size(); ++i) {
    std::optional<std::span<const Point>> prev;
    if (i >= static_cast<std::size_t>(step)) {
      prev = std::span<const Point>(demo.frames[i - static_cast<std::size_t>(step)].positions);
    }
    demo.frames[i].relations = extract_relations(demo.frames[i].positions, prev, thresholds);
  }
}

bool relations_present(const Demonstration& demo) {
  return std::ranges::all_of(demo.frames, [](const Frame& f) { return !f.relations.empty(); });
}

}  // namespace taskgraph
