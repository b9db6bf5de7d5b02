#pragma once

#include "taskgraph/demonstration.hpp"
#include "taskgraph/vocab.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace taskgraph {

/// Symbolic execution state. Changes only through start_primitive and
/// finish_primitive.
struct ExecutionState {
  std::array<int, kNumHands> holding{};  // object label; `none` when empty
  std::array<bool, kNumHands> busy{};
  std::array<HandLabel, kNumHands> current{};
  std::array<std::optional<HandLabel>, kNumHands> last_completed;
  std::vector<RelationBits> relations;  // latest frame, directed edges

  [[nodiscard]] static ExecutionState initial(const Vocab& vocab);
};

using Precondition = std::function<bool(const ExecutionState&, int hand, const HandLabel&)>;

/// Action label -> predicate. Labels without a rule are always allowed.
class PreconditionRules {
 public:
  explicit PreconditionRules(const Vocab& vocab) : vocab_(&vocab) {}

  /// lift/approach need a free hand; place/pour/stir/hold need the named
  /// object in hand; everything else (retreat included) is allowed.
  [[nodiscard]] static PreconditionRules defaults(const Vocab& vocab);

  /// Throws ConfigError for an unknown action label.
  void set(const std::string& action, Precondition rule);

  /// Throws ConfigError when pair.action is outside the vocabulary.
  [[nodiscard]] bool allows(const ExecutionState& state, int hand, const HandLabel& pair) const;

  [[nodiscard]] const Vocab& vocab() const { return *vocab_; }

 private:
  const Vocab* vocab_;
  std::vector<Precondition> rules_;  // indexed by action, empty = allowed
};

enum class DecisionKind { kTrigger, kDrop, kBlocked };

[[nodiscard]] const char* decision_name(DecisionKind kind);

struct Decision {
  DecisionKind kind = DecisionKind::kDrop;
  HandLabel pair;
};

struct SelectionCounters {
  std::array<int, kNumHands> triggered{};
  std::array<int, kNumHands> blocked{};
  std::array<int, kNumHands> dropped{};

  /// blocked / (blocked + triggered); 0 when the hand never got that far.
  [[nodiscard]] double intervention_rate(int hand) const;
  SelectionCounters& operator+=(const SelectionCounters& other);
};

/// Busy hand: drop. Idle or pad prediction: drop. Failed precondition:
/// blocked, state untouched. Otherwise trigger and start the primitive.
Decision select_action(int hand, const HandLabel& pair, ExecutionState& state,
                       const PreconditionRules& rules, SelectionCounters* counters = nullptr);

void start_primitive(ExecutionState& state, int hand, const HandLabel& pair);

/// Ends the running primitive and applies its effect on what the hand holds:
/// lift takes the object, place and insert release it.
void finish_primitive(ExecutionState& state, int hand, const Vocab& vocab);

}  // namespace taskgraph
