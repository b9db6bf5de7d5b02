#include "taskgraph/inference/simulation.hpp"

#include "taskgraph/errors.hpp"

#include <algorithm>
#include <limits>

namespace taskgraph {

namespace {

constexpr double kGraspHeight = 0.03;
constexpr double kLiftHeight = 0.09;
constexpr double kWorkHeight = 0.10;

bool is_prefix(const std::vector<HandLabel>& prefix, const std::vector<HandLabel>& of) {
  return prefix.size() <= of.size() && std::equal(prefix.begin(), prefix.end(), of.begin());
}

/// Hands move on min-jerk paths to primitive targets; held objects follow.
class KinematicScene {
 public:
  KinematicScene(const Demonstration& take, const Vocab& vocab, const SimulationConfig& cfg)
      : vocab_(vocab), cfg_(cfg) {
    scene_.subject = take.subject;
    scene_.task = take.task;
    scene_.take = take.take;
    scene_.frame_rate = take.frame_rate;
    scene_.roster = take.roster;
    const auto& first = take.frames.front().positions;
    positions_ = first;
    homes_ = first;
    for (int h = 0; h < kNumHands; ++h) {
      hand_node_[static_cast<std::size_t>(h)] = node_of_class(
          h == kRight ? vocab.right_hand_class() : vocab.left_hand_class());
    }
    attached_.assign(positions_.size(), -1);
    for (int i = 0; i < cfg.history_frames; ++i) {
      emit({HandLabel{vocab.idle_action(), vocab.none_object()},
            HandLabel{vocab.idle_action(), vocab.none_object()}});
    }
  }

  [[nodiscard]] const Demonstration& scene() const { return scene_; }
  [[nodiscard]] const std::vector<RelationBits>& latest_relations() const {
    return scene_.frames.back().relations;
  }

  void start(int hand, const HandLabel& pair) {
    const auto hi = static_cast<std::size_t>(hand);
    Motion& m = motion_[hi];
    const Point here = positions_[static_cast<std::size_t>(hand_node_[hi])];
    m.from = here;
    m.to = here;
    m.elapsed = 0;
    const std::string& action = vocab_.action_name(pair.action);
    const int object = node_of_label(pair.object);
    const auto oi = static_cast<std::size_t>(object < 0 ? 0 : object);
    if (action == "approach" && object >= 0) {
      m.to = positions_[oi] + Point(0, 0, kGraspHeight);
    } else if (action == "lift") {
      m.to = here + Point(0, 0, kLiftHeight);
      if (object >= 0) attached_[oi] = hand_node_[hi];
    } else if (action == "place" && object >= 0) {
      m.to = homes_[oi] + Point(0, 0, kGraspHeight);
    } else if (action == "retreat") {
      m.to = homes_[static_cast<std::size_t>(hand_node_[hi])];
    } else if (action == "pour" || action == "stir" || action == "insert" || action == "wipe") {
      const int work = nearest_free_object(hand, object);
      if (work >= 0) m.to = positions_[static_cast<std::size_t>(work)] + Point(0, 0, kWorkHeight);
    }
  }

  void finish(int hand, const HandLabel& pair) {
    const std::string& action = vocab_.action_name(pair.action);
    const int object = node_of_label(pair.object);
    if (object >= 0 && (action == "place" || action == "insert")) {
      const auto oi = static_cast<std::size_t>(object);
      if (attached_[oi] == hand_node_[static_cast<std::size_t>(hand)]) attached_[oi] = -1;
    }
  }

  /// Moves running hands one frame and records it with the given labels.
  void step(const ExecutionState& state) {
    for (int h = 0; h < kNumHands; ++h) {
      const auto hi = static_cast<std::size_t>(h);
      if (!state.busy[hi]) continue;
      Motion& m = motion_[hi];
      ++m.elapsed;
      const double s = min_jerk(static_cast<double>(m.elapsed) / cfg_.primitive_frames);
      positions_[static_cast<std::size_t>(hand_node_[hi])] = m.from + s * (m.to - m.from);
    }
    for (std::size_t n = 0; n < positions_.size(); ++n) {
      if (attached_[n] >= 0) {
        positions_[n] = positions_[static_cast<std::size_t>(attached_[n])] - Point(0, 0, kGraspHeight);
      }
    }
    emit(state.current);
  }

 private:
  struct Motion {
    Point from = Point::Zero();
    Point to = Point::Zero();
    int elapsed = 0;
  };

  int node_of_class(int cls) const {
    for (std::size_t i = 0; i < scene_.roster.size(); ++i) {
      if (scene_.roster[i] == cls) return static_cast<int>(i);
    }
    return -1;
  }

  int node_of_label(int label) const {
    if (label < 0 || label >= vocab_.num_object_classes()) return -1;
    return node_of_class(label);
  }

  int nearest_free_object(int hand, int held) const {
    const Point here = positions_[static_cast<std::size_t>(hand_node_[static_cast<std::size_t>(hand)])];
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < positions_.size(); ++n) {
      const int node = static_cast<int>(n);
      if (node == hand_node_[0] || node == hand_node_[1] || node == held || attached_[n] >= 0) continue;
      const double d = (positions_[n] - here).head<2>().norm();
      if (d < best_d) {
        best_d = d;
        best = node;
      }
    }
    return best;
  }

  void emit(const std::array<HandLabel, kNumHands>& labels) {
    Frame f;
    f.frame_id = scene_.num_frames();
    f.positions = positions_;
    f.hands = labels;
    const int prev = scene_.num_frames() - cfg_.relation_step;
    if (prev >= 0) {
      const auto& p = scene_.frames[static_cast<std::size_t>(prev)].positions;
      f.relations = extract_relations(positions_, std::span<const Point>(p), cfg_.thresholds);
    } else {
      f.relations = extract_relations(positions_, std::nullopt, cfg_.thresholds);
    }
    scene_.frames.push_back(std::move(f));
  }

  const Vocab& vocab_;
  const SimulationConfig& cfg_;
  Demonstration scene_;
  std::vector<Point> positions_;
  std::vector<Point> homes_;
  std::vector<int> attached_;  // node the object follows, -1 when free
  std::array<int, kNumHands> hand_node_{};
  std::array<Motion, kNumHands> motion_{};
};

}  // namespace

void SimulationConfig::validate() const {
  if (trials < 1 || primitive_frames < 1 || step_cap < 1 || history_frames < 1 ||
      relation_step < 1) {
    throw ConfigError("simulation counts must be >= 1");
  }
  thresholds.validate();
}

std::array<std::optional<HandLabel>, kNumHands> OraclePredictor::predict(
    const SimulationContext& ctx) {
  std::array<std::optional<HandLabel>, kNumHands> out;
  for (std::size_t h = 0; h < kNumHands; ++h) {
    const auto& ref = (*ctx.reference)[h];
    const std::size_t done = (*ctx.executed)[h].size();
    if (done < ref.size()) out[h] = ref[done];
  }
  return out;
}

std::array<std::optional<HandLabel>, kNumHands> DroppingPredictor::predict(
    const SimulationContext& ctx) {
  std::array<std::optional<HandLabel>, kNumHands> out;
  for (int h = 0; h < kNumHands; ++h) {
    const auto hi = static_cast<std::size_t>(h);
    std::vector<HandLabel> ref = (*ctx.reference)[hi];
    if (h == hand_ && (trial_ < 0 || trial_ == ctx.trial) && index_ >= 0 &&
        index_ < static_cast<int>(ref.size())) {
      ref.erase(ref.begin() + index_);
    }
    const std::size_t done = (*ctx.executed)[hi].size();
    if (done < ref.size()) out[hi] = ref[done];
  }
  return out;
}

ModelPredictor::ModelPredictor(const Model& model, double decay)
    : model_(&model), decay_(decay), buffer_(model.config().slice.horizon, decay) {}

void ModelPredictor::reset(int /*trial*/) {
  buffer_ = EnsembleBuffer(model_->config().slice.horizon, decay_);
}

std::array<std::optional<HandLabel>, kNumHands> ModelPredictor::predict(
    const SimulationContext& ctx) {
  std::array<std::optional<HandLabel>, kNumHands> out;
  const Demonstration& scene = *ctx.scene;
  const int t = scene.num_frames() - 1;
  if (t < model_->config().slice.warmup()) return out;
  const GraphSlice slice =
      build_inputs(scene, t, model_->config().slice, model_->vocab(), model_->stats());
  buffer_.update(t, model_->predict(slice));
  buffer_.prune(t + 1);
  const auto fused = buffer_.query(t + 1);
  for (std::size_t h = 0; h < kNumHands; ++h) out[h] = fused->pairs[h];
  return out;
}

double sequence_accuracy(const std::vector<HandLabel>& reference,
                         const std::vector<HandLabel>& executed) {
  if (reference.empty()) return executed.empty() ? 1.0 : 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(reference.size(), executed.size()); ++i) {
    if (reference[i] == executed[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(reference.size());
}

SimulationReport simulate_execution(ScenePredictor& predictor, const SyntheticTaskSpec& task,
                                    const Vocab& vocab, const PreconditionRules& rules,
                                    const SimulationConfig& cfg) {
  cfg.validate();
  GeneratorOptions gen;
  gen.thresholds = cfg.thresholds;
  gen.relation_step = cfg.relation_step;
  const std::vector<Demonstration> takes =
      generate_synthetic(task, vocab, 1, cfg.trials, cfg.seed, gen);

  SimulationReport report;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const Demonstration& take = takes[static_cast<std::size_t>(trial)];
    TrialResult r;
    r.trial = trial;
    for (int h = 0; h < kNumHands; ++h) {
      r.reference[static_cast<std::size_t>(h)] = primitive_sequence(take, h, vocab);
    }
    KinematicScene scene(take, vocab, cfg);
    ExecutionState state = ExecutionState::initial(vocab);
    std::array<int, kNumHands> remaining{};
    predictor.reset(trial);

    bool done = false;
    for (int step = 0; step < cfg.step_cap && !done; ++step) {
      r.steps = step + 1;
      state.relations = scene.latest_relations();
      SimulationContext ctx{trial, step, &scene.scene(), &state, &r.reference, &r.executed};
      const auto proposals = predictor.predict(ctx);
      for (int h = 0; h < kNumHands; ++h) {
        const auto hi = static_cast<std::size_t>(h);
        if (!proposals[hi]) continue;
        const Decision d = select_action(h, *proposals[hi], state, rules, &r.counters);
        if (d.kind == DecisionKind::kTrigger) {
          scene.start(h, d.pair);
          remaining[hi] = cfg.primitive_frames;
        }
      }
      scene.step(state);
      bool all_finished = true;
      bool diverged = false;
      for (int h = 0; h < kNumHands; ++h) {
        const auto hi = static_cast<std::size_t>(h);
        if (state.busy[hi] && --remaining[hi] == 0) {
          const HandLabel pair = state.current[hi];
          finish_primitive(state, h, vocab);
          scene.finish(h, pair);
          r.executed[hi].push_back(pair);
        }
        diverged = diverged || !is_prefix(r.executed[hi], r.reference[hi]);
        all_finished = all_finished && !state.busy[hi] &&
                       r.executed[hi].size() >= r.reference[hi].size();
      }
      done = all_finished || diverged;
    }
    r.hit_cap = !done;
    r.success = r.executed == r.reference;
    for (std::size_t h = 0; h < kNumHands; ++h) {
      r.sequence_accuracy[h] = sequence_accuracy(r.reference[h], r.executed[h]);
      report.sequence_accuracy[h] += r.sequence_accuracy[h] / cfg.trials;
    }
    report.counters += r.counters;
    report.trials.push_back(std::move(r));
  }
  const auto successes = std::count_if(report.trials.begin(), report.trials.end(),
                                       [](const TrialResult& t) { return t.success; });
  report.success_rate = static_cast<double>(successes) / cfg.trials;
  for (int h = 0; h < kNumHands; ++h) {
    report.intervention_rate[static_cast<std::size_t>(h)] = report.counters.intervention_rate(h);
  }
  return report;
}

}  // namespace taskgraph
