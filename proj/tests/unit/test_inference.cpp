#include "helpers.hpp"

#include "taskgraph/dataset/synthetic.hpp"
#include "taskgraph/errors.hpp"
#include "taskgraph/inference/ensemble.hpp"
#include "taskgraph/inference/rollout.hpp"
#include "taskgraph/inference/selection.hpp"
#include "taskgraph/inference/simulation.hpp"
#include "taskgraph/model.hpp"

#include <algorithm>
#include <limits>

namespace taskgraph {
namespace {

using test::vocab;

HandProbabilities probs(std::initializer_list<double> action, std::initializer_list<double> object) {
  HandProbabilities p;
  p.action = Eigen::VectorXd::Map(action.begin(), static_cast<Eigen::Index>(action.size()));
  p.object = Eigen::VectorXd::Map(object.begin(), static_cast<Eigen::Index>(object.size()));
  return p;
}

StepPrediction step_prediction(int origin, std::initializer_list<double> action, double x) {
  StepPrediction s;
  s.origin = origin;
  s.hands[kRight] = probs(action, {0.5, 0.5});
  s.hands[kLeft] = probs(action, {0.5, 0.5});
  s.coords = nn::Mat::Constant(2, 3, x);
  return s;
}

TEST(Ensemble, WeightsDecayOldestFirst) {
  const auto w = ensemble_weights(2, std::log(2.0));
  EXPECT_NEAR(w[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(w[1], 1.0 / 3.0, 1e-15);
  for (double v : ensemble_weights(4, 0.0)) EXPECT_DOUBLE_EQ(v, 0.25);
  const auto inf = ensemble_weights(3, std::numeric_limits<double>::infinity());
  EXPECT_EQ(inf, (std::vector<double>{1.0, 0.0, 0.0}));
  for (int n = 1; n < 8; ++n) {
    const auto x = ensemble_weights(n, 0.37);
    double s = 0.0;
    for (double v : x) s += v;
    EXPECT_NEAR(s, 1.0, 1e-15);
  }
  EXPECT_THROW((void)ensemble_weights(2, -1.0), ConfigError);
}

TEST(Ensemble, SinglePredictionPassesThrough) {
  EnsembleBuffer buf(3, 0.1);
  buf.update(step_prediction(4, {0.2, 0.7, 0.1}, 0.25), 5);
  const auto f = buf.query(5);
  ASSERT_TRUE(f);
  EXPECT_EQ(f->weights, std::vector<double>{1.0});
  EXPECT_EQ(f->pairs[kRight].action, 1);
  EXPECT_EQ(f->coords(1, 2), 0.25);
  EXPECT_FALSE(buf.query(6));
}

TEST(Ensemble, EmptyBufferHasNoPrediction) {
  const EnsembleBuffer buf(3, 0.1);
  EXPECT_FALSE(buf.query(0).has_value());
}

TEST(Ensemble, PlainMeanAtZeroDecay) {
  EnsembleBuffer buf(3, 0.0);
  buf.update(step_prediction(1, {1.0, 0.0}, 0.0), 3);
  buf.update(step_prediction(2, {0.0, 1.0}, 1.0), 3);
  const auto f = buf.query(3);
  ASSERT_TRUE(f);
  EXPECT_DOUBLE_EQ(f->hands[kLeft].action(0), 0.5);
  EXPECT_DOUBLE_EQ(f->coords(0, 0), 0.5);
  EXPECT_EQ(f->pairs[kLeft].action, 0);  // tie goes to the lowest index
}

TEST(Ensemble, FusedProbabilitiesSumToOne) {
  EnsembleBuffer buf(4, 0.3);
  PredictionBundle b;
  for (HandOutput& h : b.hands) {
    h.horizon_action = test::random_mat(4, 6, 1) * 5.0;
    h.horizon_object = test::random_mat(4, 5, 2) * 5.0;
  }
  b.motion = test::random_mat(3 * 4, 3, 3);
  buf.update(0, b);
  buf.update(1, b);
  buf.update(2, b);
  for (int step = 1; step <= 6; ++step) {
    const auto f = buf.query(step);
    ASSERT_TRUE(f);
    for (const HandProbabilities& h : f->hands) {
      EXPECT_NEAR(h.action.sum(), 1.0, 1e-9);
      EXPECT_NEAR(h.object.sum(), 1.0, 1e-9);
    }
  }
  EXPECT_EQ(buf.entries(3), 3u);
  buf.prune(3);
  EXPECT_EQ(buf.entries(2), 0u);
  EXPECT_THROW(buf.update(2, b), InternalError);
}

TEST(Ensemble, BundleRowsMapToLaterSteps) {
  EnsembleBuffer buf(2, 0.1);
  PredictionBundle b;
  for (HandOutput& h : b.hands) {
    h.horizon_action = nn::Mat::Zero(2, 3);
    h.horizon_action(0, 1) = 10.0;
    h.horizon_action(1, 2) = 10.0;
    h.horizon_object = nn::Mat::Zero(2, 3);
  }
  b.motion = nn::Mat::Zero(2 * 2, 3);
  b.motion(1, 0) = 7.0;  // node 0, row p = 1
  buf.update(10, b);
  EXPECT_EQ(buf.query(11)->pairs[kRight].action, 1);
  EXPECT_EQ(buf.query(12)->pairs[kRight].action, 2);
  EXPECT_EQ(buf.query(12)->coords(0, 0), 7.0);
  b.motion = nn::Mat::Zero(5, 3);
  EXPECT_THROW(buf.update(11, b), DimensionError);
}

// Oldest-only fusion follows a flickering late prediction less than the
// decayed average does.
TEST(Ensemble, DecayDampsFlicker) {
  for (double m : {0.1, std::numeric_limits<double>::infinity()}) {
    EnsembleBuffer buf(3, m);
    buf.update(step_prediction(0, {0.45, 0.55}, 0.0), 3);  // place, narrowly
    buf.update(step_prediction(1, {0.9, 0.1}, 0.0), 3);    // stir
    buf.update(step_prediction(2, {0.9, 0.1}, 0.0), 3);
    EXPECT_EQ(buf.query(3)->pairs[kRight].action, std::isinf(m) ? 1 : 0);
  }
}

PredictionBundle constant_bundle(const GraphSlice& s, int horizon, int action) {
  PredictionBundle b;
  for (HandOutput& h : b.hands) {
    h.horizon_action = nn::Mat::Zero(horizon, vocab().num_actions());
    h.horizon_action.col(action).setConstant(3.0);
    h.horizon_object = nn::Mat::Zero(horizon, vocab().num_object_labels());
  }
  b.motion = nn::Mat::Zero(s.num_nodes * horizon, 3);
  return b;
}

TEST(Rollout, LengthIsStreamMinusWarmup) {
  SliceConfig sc;
  sc.history = 3;
  sc.sample_rate = 4;
  sc.horizon = 5;
  sc.n_past = 2;
  const Demonstration d = random_demonstration(vocab(), 3, 50, 2, 4);
  int calls = 0;
  const Predictor p = [&](const GraphSlice& s) {
    ++calls;
    return constant_bundle(s, 5, 1);
  };
  const RolloutResult r = rollout(p, d, sc, vocab(), Standardizer{}, {});
  EXPECT_EQ(r.steps.size(), static_cast<std::size_t>(50 - sc.warmup()));
  EXPECT_EQ(calls, 50 - sc.warmup());
  EXPECT_EQ(r.steps.front().frame, sc.warmup() + 1);
  EXPECT_EQ(r.steps.back().frame_id, -1);
  EXPECT_FALSE(r.steps.back().truth.has_value());
  EXPECT_TRUE(r.warning.empty());
}

TEST(Rollout, ShortStreamWarns) {
  SliceConfig sc;
  sc.history = 3;
  sc.sample_rate = 10;
  const Demonstration d = random_demonstration(vocab(), 3, 15, 2, 4);
  const Predictor p = [](const GraphSlice& s) { return constant_bundle(s, 10, 1); };
  const RolloutResult r = rollout(p, d, sc, vocab(), Standardizer{}, {});
  EXPECT_TRUE(r.steps.empty());
  EXPECT_FALSE(r.warning.empty());
}

TEST(Rollout, FlickeringPredictorDependsOnDecay) {
  SliceConfig sc;
  sc.history = 2;
  sc.sample_rate = 1;
  sc.horizon = 4;
  sc.n_past = 1;
  const Demonstration d = random_demonstration(vocab(), 3, 30, 3, 1);
  const int place = vocab().action("place");
  const int stir = vocab().action("stir");
  // One origin in four guesses place, the rest stir. The oldest-only fusion
  // follows that outlier whenever it is oldest; the near-uniform one never does.
  const Predictor p = [&](const GraphSlice& s) {
    return constant_bundle(s, 4, s.frame_id % 4 == 0 ? place : stir);
  };
  auto sequence = [&](double m) {
    std::vector<int> out;
    for (const RolloutStep& s : rollout(p, d, sc, vocab(), Standardizer{}, {m}).steps) {
      out.push_back(s.fused.pairs[kRight].action);
    }
    return out;
  };
  const auto uniform = sequence(0.1);
  const auto oldest = sequence(std::numeric_limits<double>::infinity());
  EXPECT_EQ(std::count(uniform.begin() + 3, uniform.end(), place), 0);
  EXPECT_GT(std::count(oldest.begin() + 3, oldest.end(), place), 4);
}

TEST(Rollout, AccuracyCountsPerHand) {
  RolloutResult r;
  for (int i = 0; i < 4; ++i) {
    RolloutStep s;
    s.fused.pairs = {HandLabel{1, 1}, HandLabel{2, 2}};
    s.truth = std::array<HandLabel, kNumHands>{HandLabel{1, 1}, HandLabel{i < 1 ? 2 : 0, 2}};
    r.steps.push_back(s);
  }
  r.steps.push_back(RolloutStep{});  // no truth
  const auto acc = rollout_accuracy(r);
  EXPECT_DOUBLE_EQ(acc[kRight], 1.0);
  EXPECT_DOUBLE_EQ(acc[kLeft], 0.25);
}

TEST(Selection, BusyHandDrops) {
  const Vocab& v = vocab();
  const auto rules = PreconditionRules::defaults(v);
  ExecutionState st = ExecutionState::initial(v);
  SelectionCounters c;
  const HandLabel lift{v.action("lift"), v.object_label("cup")};
  EXPECT_EQ(select_action(kRight, lift, st, rules, &c).kind, DecisionKind::kTrigger);
  EXPECT_TRUE(st.busy[kRight]);
  EXPECT_EQ(select_action(kRight, lift, st, rules, &c).kind, DecisionKind::kDrop);
  EXPECT_EQ(c.triggered[kRight], 1);
  EXPECT_EQ(c.dropped[kRight], 1);
  EXPECT_FALSE(st.busy[kLeft]);
}

TEST(Selection, PlaceWithEmptyHandIsBlocked) {
  const Vocab& v = vocab();
  const auto rules = PreconditionRules::defaults(v);
  ExecutionState st = ExecutionState::initial(v);
  SelectionCounters c;
  const HandLabel place{v.action("place"), v.object_label("cup")};
  const Decision d = select_action(kLeft, place, st, rules, &c);
  EXPECT_EQ(d.kind, DecisionKind::kBlocked);
  EXPECT_FALSE(st.busy[kLeft]);
  EXPECT_EQ(c.blocked[kLeft], 1);
  EXPECT_STREQ(decision_name(d.kind), "blocked");
}

TEST(Selection, LiftThenPlaceUpdatesHolding) {
  const Vocab& v = vocab();
  const auto rules = PreconditionRules::defaults(v);
  ExecutionState st = ExecutionState::initial(v);
  const int cup = v.object_label("cup");
  EXPECT_EQ(select_action(kRight, {v.action("lift"), cup}, st, rules).kind, DecisionKind::kTrigger);
  finish_primitive(st, kRight, v);
  EXPECT_EQ(st.holding[kRight], cup);
  EXPECT_EQ(select_action(kRight, {v.action("lift"), cup}, st, rules).kind, DecisionKind::kBlocked);
  EXPECT_EQ(select_action(kRight, {v.action("place"), cup}, st, rules).kind, DecisionKind::kTrigger);
  finish_primitive(st, kRight, v);
  EXPECT_EQ(st.holding[kRight], v.none_object());
  EXPECT_EQ(st.last_completed[kRight]->action, v.action("place"));
}

TEST(Selection, IdleAndPadAreDropped) {
  const Vocab& v = vocab();
  const auto rules = PreconditionRules::defaults(v);
  ExecutionState st = ExecutionState::initial(v);
  EXPECT_EQ(select_action(kRight, {v.idle_action(), v.none_object()}, st, rules).kind,
            DecisionKind::kDrop);
  EXPECT_EQ(select_action(kRight, {v.pad_action(), v.pad_object()}, st, rules).kind,
            DecisionKind::kDrop);
  EXPECT_FALSE(st.busy[kRight]);
}

TEST(Selection, CustomRulesAndErrors) {
  const Vocab& v = vocab();
  auto rules = PreconditionRules::defaults(v);
  rules.set("retreat", [](const ExecutionState&, int hand, const HandLabel&) { return hand == kLeft; });
  ExecutionState st = ExecutionState::initial(v);
  const HandLabel retreat{v.action("retreat"), v.none_object()};
  EXPECT_FALSE(rules.allows(st, kRight, retreat));
  EXPECT_TRUE(rules.allows(st, kLeft, retreat));
  EXPECT_THROW(rules.set("jump", {}), ConfigError);
  EXPECT_THROW((void)rules.allows(st, kLeft, {v.num_actions(), 0}), ConfigError);
}

TEST(Selection, InterventionRateIsPerHand) {
  SelectionCounters c;
  c.blocked = {1, 5};
  c.triggered = {9, 32};
  EXPECT_DOUBLE_EQ(c.intervention_rate(kRight), 0.1);
  EXPECT_DOUBLE_EQ(c.intervention_rate(kLeft), 5.0 / 37.0);
  EXPECT_EQ(SelectionCounters{}.intervention_rate(kLeft), 0.0);
}

TEST(Simulation, SequenceAccuracyIsPositional) {
  const std::vector<HandLabel> ref = {{1, 1}, {2, 2}, {3, 3}, {4, 4}};
  EXPECT_DOUBLE_EQ(sequence_accuracy(ref, ref), 1.0);
  EXPECT_DOUBLE_EQ(sequence_accuracy(ref, {{1, 1}, {3, 3}, {4, 4}}), 0.25);
  EXPECT_DOUBLE_EQ(sequence_accuracy(ref, {}), 0.0);
}

TEST(Simulation, OracleSucceedsOnEveryTrial) {
  const Vocab& v = vocab();
  OraclePredictor oracle;
  SimulationConfig cfg;
  const SimulationReport r = simulate_execution(oracle, builtin_task_spec("cooking"), v,
                                                PreconditionRules::defaults(v), cfg);
  ASSERT_EQ(r.trials.size(), 10u);
  EXPECT_DOUBLE_EQ(r.success_rate, 1.0);
  for (int h = 0; h < kNumHands; ++h) {
    EXPECT_EQ(r.counters.blocked[static_cast<std::size_t>(h)], 0);
    EXPECT_DOUBLE_EQ(r.sequence_accuracy[static_cast<std::size_t>(h)], 1.0);
  }
}

TEST(Simulation, MissingLeftActionFailsItsTrial) {
  const Vocab& v = vocab();
  DroppingPredictor dropper(kLeft, 1, 3);
  const SimulationReport r = simulate_execution(dropper, builtin_task_spec("cooking"), v,
                                                PreconditionRules::defaults(v), {});
  ASSERT_EQ(r.trials.size(), 10u);
  EXPECT_FALSE(r.trials[3].success);
  EXPECT_LT(r.trials[3].sequence_accuracy[kLeft], 1.0);
  EXPECT_DOUBLE_EQ(r.success_rate, 0.9);
}

TEST(Simulation, TrialsFollowConfig) {
  const Vocab& v = vocab();
  OraclePredictor oracle;
  SimulationConfig cfg;
  cfg.trials = 3;
  cfg.seed = 5;
  const auto a = simulate_execution(oracle, builtin_task_spec("insert"), v,
                                    PreconditionRules::defaults(v), cfg);
  const auto b = simulate_execution(oracle, builtin_task_spec("insert"), v,
                                    PreconditionRules::defaults(v), cfg);
  ASSERT_EQ(a.trials.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.trials[i].steps, b.trials[i].steps);
    EXPECT_EQ(a.trials[i].reference, b.trials[i].reference);
  }
  cfg.trials = 0;
  EXPECT_THROW((void)simulate_execution(oracle, builtin_task_spec("insert"), v,
                                        PreconditionRules::defaults(v), cfg),
               ConfigError);
}

TEST(Simulation, ModelPredictorRuns) {
  const Vocab& v = vocab();
  RunConfig cfg = tiny_run_config();
  Model m(cfg.model, v, Standardizer{});
  m.init(1);
  ModelPredictor predictor(m, 0.1);
  SimulationConfig sc;
  sc.trials = 1;
  sc.step_cap = 200;
  sc.relation_step = 1;
  const auto r = simulate_execution(predictor, builtin_task_spec("wiping"), v,
                                    PreconditionRules::defaults(v), sc);
  ASSERT_EQ(r.trials.size(), 1u);
  EXPECT_LE(r.trials[0].steps, 200);
}

}  // namespace
}  // namespace taskgraph
