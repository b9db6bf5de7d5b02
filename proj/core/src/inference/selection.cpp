#include "taskgraph/inference/selection.hpp"

#include "taskgraph/errors.hpp"

namespace taskgraph {

ExecutionState ExecutionState::initial(const Vocab& vocab) {
  ExecutionState s;
  s.holding.fill(vocab.none_object());
  s.current.fill(HandLabel{vocab.idle_action(), vocab.none_object()});
  return s;
}

PreconditionRules PreconditionRules::defaults(const Vocab& vocab) {
  PreconditionRules r(vocab);
  const int none = vocab.none_object();
  const Precondition free_hand = [none](const ExecutionState& s, int hand, const HandLabel&) {
    return s.holding[static_cast<std::size_t>(hand)] == none;
  };
  const Precondition holds_named = [none](const ExecutionState& s, int hand, const HandLabel& p) {
    return p.object != none && s.holding[static_cast<std::size_t>(hand)] == p.object;
  };
  for (const char* a : {"lift", "approach"}) r.set(a, free_hand);
  for (const char* a : {"place", "pour", "stir", "hold"}) r.set(a, holds_named);
  return r;
}

void PreconditionRules::set(const std::string& action, Precondition rule) {
  int index = -1;
  try {
    index = vocab_->action(action);
  } catch (const InputError&) {
    throw ConfigError("precondition for unknown action: " + action);
  }
  rules_.resize(static_cast<std::size_t>(vocab_->num_actions()));
  rules_[static_cast<std::size_t>(index)] = std::move(rule);
}

bool PreconditionRules::allows(const ExecutionState& state, int hand, const HandLabel& pair) const {
  if (pair.action < 0 || pair.action >= vocab_->num_actions()) {
    throw ConfigError("action index " + std::to_string(pair.action) + " is not in the vocabulary");
  }
  const auto ai = static_cast<std::size_t>(pair.action);
  if (ai >= rules_.size() || !rules_[ai]) return true;
  return rules_[ai](state, hand, pair);
}

const char* decision_name(DecisionKind kind) {
  switch (kind) {
    case DecisionKind::kTrigger:
      return "trigger";
    case DecisionKind::kDrop:
      return "drop";
    case DecisionKind::kBlocked:
      return "blocked";
  }
  return "?";
}

double SelectionCounters::intervention_rate(int hand) const {
  const auto hi = static_cast<std::size_t>(hand);
  const int total = blocked[hi] + triggered[hi];
  return total == 0 ? 0.0 : static_cast<double>(blocked[hi]) / total;
}

SelectionCounters& SelectionCounters::operator+=(const SelectionCounters& other) {
  for (std::size_t h = 0; h < kNumHands; ++h) {
    triggered[h] += other.triggered[h];
    blocked[h] += other.blocked[h];
    dropped[h] += other.dropped[h];
  }
  return *this;
}

Decision select_action(int hand, const HandLabel& pair, ExecutionState& state,
                       const PreconditionRules& rules, SelectionCounters* counters) {
  const auto hi = static_cast<std::size_t>(hand);
  const Vocab& vocab = rules.vocab();
  Decision d{DecisionKind::kDrop, pair};
  const bool no_primitive = pair.action == vocab.idle_action() || pair.action == vocab.pad_action();
  if (state.busy[hi] || no_primitive) {
    d.kind = DecisionKind::kDrop;
  } else if (!rules.allows(state, hand, pair)) {
    d.kind = DecisionKind::kBlocked;
  } else {
    d.kind = DecisionKind::kTrigger;
    start_primitive(state, hand, pair);
  }
  if (counters != nullptr) {
    switch (d.kind) {
      case DecisionKind::kTrigger:
        ++counters->triggered[hi];
        break;
      case DecisionKind::kBlocked:
        ++counters->blocked[hi];
        break;
      case DecisionKind::kDrop:
        ++counters->dropped[hi];
        break;
    }
  }
  return d;
}

void start_primitive(ExecutionState& state, int hand, const HandLabel& pair) {
  const auto hi = static_cast<std::size_t>(hand);
  if (state.busy[hi]) throw InternalError("primitive started on a busy hand");
  state.busy[hi] = true;
  state.current[hi] = pair;
}

void finish_primitive(ExecutionState& state, int hand, const Vocab& vocab) {
  const auto hi = static_cast<std::size_t>(hand);
  if (!state.busy[hi]) throw InternalError("no primitive is running on this hand");
  const HandLabel done = state.current[hi];
  const std::string& name = vocab.action_name(done.action);
  if (name == "lift") {
    state.holding[hi] = done.object;
  } else if (name == "place" || name == "insert") {
    state.holding[hi] = vocab.none_object();
  }
  state.busy[hi] = false;
  state.last_completed[hi] = done;
  state.current[hi] = HandLabel{vocab.idle_action(), vocab.none_object()};
}

}  // namespace taskgraph
