// Acceptance suite: one PASS/FAIL line per criterion. Tolerances and
// configurations are pinned here, not read from the command line.

#include "taskgraph/config.hpp"
#include "taskgraph/dataset/augment.hpp"
#include "taskgraph/dataset/synthetic.hpp"
#include "taskgraph/inference/ensemble.hpp"
#include "taskgraph/inference/simulation.hpp"
#include "taskgraph/model.hpp"
#include "taskgraph/relations.hpp"
#include "taskgraph/training/diagnostics.hpp"
#include "taskgraph/training/experiment.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace tg = taskgraph;
using tg::nn::Mat;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const tg::Vocab& vocab() {
  static const tg::Vocab v = tg::Vocab::builtin();
  return v;
}

tg::RunConfig config_with(const tg::ConfigMap& overrides) {
  tg::RunConfig cfg;
  tg::apply_config(cfg, overrides);
  cfg.finalize();
  return cfg;
}

bool same_bytes(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

double max_abs(const Mat& a, const Mat& b) { return (a - b).cwiseAbs().maxCoeff(); }

// 1. Finite differences against the tape on the full joint loss.
Outcome gradient_check() {
  constexpr int kNodes = 4;
  constexpr std::size_t kMinCoords = 200;
  constexpr double kTol = 1e-3;
  constexpr double kBudget = 60.0;
  const auto t0 = Clock::now();
  tg::nn::GradCheckOptions o;
  o.samples = 250;
  o.step = 1e-5;
  o.seed = 11;
  const auto r = tg::check_loss_gradients(tg::tiny_run_config(), vocab(), kNodes, o);
  const double s = seconds_since(t0);
  return {r.checked >= kMinCoords && r.max_rel_error <= kTol && s < kBudget,
          fmt("%zu coords, max rel err %.2e (<= %.0e), worst %s, %.1f s", r.checked,
              r.max_rel_error, kTol, r.worst_param.c_str(), s)};
}

// 2. A small mpnn model memorizes five cooking takes.
Outcome overfit_fixture() {
  constexpr double kAcc = 0.95;
  constexpr double kRmse = 0.02;
  constexpr int kMaxEpochs = 500;
  constexpr double kBudget = 600.0;
  const tg::RunConfig cfg = config_with({{"encoder.variant", "mpnn"},
                                         {"encoder.d_mp", "32"},
                                         {"slice.history", "5"},
                                         {"slice.sample_rate", "5"},
                                         {"slice.n_past", "8"},
                                         {"data.stride", "4"},
                                         {"train.batch_size", "16"},
                                         {"train.epochs", std::to_string(kMaxEpochs)},
                                         {"train.eval_every", "0"}});
  tg::GeneratorOptions go;
  go.relation_step = cfg.data.effective_relation_step();
  const auto demos =
      tg::generate_synthetic(tg::builtin_task_spec("cooking"), vocab(), 1, 5, 7, go);
  const auto pre = tg::preprocess(demos, cfg.data);
  const tg::Standardizer stats = tg::Standardizer::fit(pre);
  const tg::SliceSet set = tg::make_slices(pre, cfg.model.slice, vocab(), stats, cfg.data.stride);
  const auto view = set.view();
  tg::Model model(cfg.model, vocab(), stats);
  model.init(1);

  const auto t0 = Clock::now();
  tg::MetricsReport last;
  int reached = 0;
  (void)tg::train_model(model, view, {}, tg::class_weights(view, vocab()), cfg.train, 1,
                        [&](const tg::EpochLog& e, const tg::Model& m) {
                          if (e.epoch % 10 != 0) return true;
                          last = tg::evaluate(m, view);
                          if (last.accuracy[tg::kObjHorizonAction] >= kAcc &&
                              last.accuracy[tg::kObjHorizonObject] >= kAcc &&
                              last.rmse_m <= kRmse) {
                            reached = e.epoch;
                            return false;
                          }
                          return seconds_since(t0) < kBudget;
                        });
  const double s = seconds_since(t0);
  return {reached > 0 && s < kBudget,
          fmt("%zu slices, a_hor %.3f o_hor %.3f rmse %.4f m at epoch %d, %.0f s", view.size(),
              last.accuracy[tg::kObjHorizonAction], last.accuracy[tg::kObjHorizonObject],
              last.rmse_m, reached, s)};
}

// 3. Relabeling nodes permutes motion rows and leaves every logit unchanged.
Outcome permutation_equivariance() {
  constexpr int kTrials = 20;
  constexpr double kTol = 1e-5;
  tg::RunConfig cfg = config_with({{"encoder.d_mp", "16"},
                                   {"slice.history", "4"},
                                   {"slice.sample_rate", "2"},
                                   {"slice.horizon", "3"},
                                   {"slice.n_past", "4"}});
  std::mt19937_64 rng(3);
  double worst = 0.0;
  for (int trial = 0; trial < kTrials; ++trial) {
    const int nodes = 3 + trial % 4;
    const tg::Demonstration d =
        tg::random_demonstration(vocab(), nodes, 40, 100 + static_cast<std::uint64_t>(trial), 2);
    const int t = cfg.model.slice.warmup() + static_cast<int>(rng() % 10);
    const tg::GraphSlice s = tg::build_slice(d, t, cfg.model.slice, vocab(), tg::Standardizer{});
    std::vector<int> perm(static_cast<std::size_t>(nodes));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const tg::GraphSlice p = tg::permute_nodes(s, perm);

    tg::Model model(cfg.model, vocab(), tg::Standardizer{});
    model.init(static_cast<std::uint64_t>(trial));
    const tg::PredictionBundle a = model.predict(s);
    const tg::PredictionBundle b = model.predict(p);
    const int horizon = cfg.model.slice.horizon;
    for (int n = 0; n < nodes; ++n) {
      worst = std::max(worst, max_abs(b.motion.middleRows(n * horizon, horizon),
                                      a.motion.middleRows(perm[static_cast<std::size_t>(n)] * horizon,
                                                          horizon)));
    }
    for (int h = 0; h < tg::kNumHands; ++h) {
      const tg::HandOutput& x = a.hands[static_cast<std::size_t>(h)];
      const tg::HandOutput& y = b.hands[static_cast<std::size_t>(h)];
      for (const auto& [u, v] : {std::pair{&x.next_action, &y.next_action},
                                 {&x.next_object, &y.next_object},
                                 {&x.future_action, &y.future_action},
                                 {&x.future_object, &y.future_object},
                                 {&x.horizon_action, &y.horizon_action},
                                 {&x.horizon_object, &y.horizon_object}}) {
        worst = std::max(worst, max_abs(*u, *v));
      }
    }
  }
  return {worst <= kTol, fmt("%d permutations, max abs deviation %.2e (<= %.0e)", kTrials, worst,
                             kTol)};
}

// 4. Three overlapping chunks fused by hand.
Outcome ensemble_oracle() {
  constexpr double kTol = 1e-12;
  constexpr int kHorizon = 3;
  constexpr int kNodes = 2;
  // probs[origin][row] over three classes; the bundle carries their logs.
  const double probs[3][kHorizon][3] = {
      {{0.7, 0.2, 0.1}, {0.5, 0.3, 0.2}, {0.1, 0.6, 0.3}},
      {{0.2, 0.2, 0.6}, {0.3, 0.3, 0.4}, {0.25, 0.25, 0.5}},
      {{0.05, 0.9, 0.05}, {0.4, 0.4, 0.2}, {1.0 / 3, 1.0 / 3, 1.0 / 3}},
  };
  auto bundle = [&](int origin) {
    tg::PredictionBundle b;
    for (tg::HandOutput& h : b.hands) {
      h.horizon_action.resize(kHorizon, 3);
      for (int r = 0; r < kHorizon; ++r) {
        for (int c = 0; c < 3; ++c) h.horizon_action(r, c) = std::log(probs[origin][r][c]);
      }
      h.horizon_object = h.horizon_action.rowwise().reverse();
    }
    b.motion.resize(kNodes * kHorizon, 3);
    for (int n = 0; n < kNodes; ++n) {
      for (int r = 0; r < kHorizon; ++r) {
        for (int c = 0; c < 3; ++c) b.motion(n * kHorizon + r, c) = origin + 0.1 * r + 0.01 * c + n;
      }
    }
    return b;
  };

  double worst = 0.0;
  bool shapes_ok = true;
  for (double m : {0.0, 0.1, 0.7, 2.0}) {
    tg::EnsembleBuffer buf(kHorizon, m);
    for (int origin = 0; origin < 3; ++origin) buf.update(origin, bundle(origin));
    // Step s is covered by origins max(0, s-3) .. min(2, s-1); the oldest
    // gets weight 1, the next exp(-m), and so on.
    for (int step = 1; step <= 5; ++step) {
      const auto fused = buf.query(step);
      const int first = std::max(0, step - kHorizon);
      const int last = std::min(2, step - 1);
      if (!fused || static_cast<int>(fused->weights.size()) != last - first + 1) {
        shapes_ok = false;
        continue;
      }
      double z = 0.0;
      for (int o = first; o <= last; ++o) z += std::exp(-m * (o - first));
      for (int c = 0; c < 3; ++c) {
        double action = 0.0;
        double object = 0.0;
        for (int o = first; o <= last; ++o) {
          const double w = std::exp(-m * (o - first)) / z;
          action += w * probs[o][step - 1 - o][c];
          object += w * probs[o][step - 1 - o][2 - c];
        }
        for (const tg::HandProbabilities& h : fused->hands) {
          worst = std::max({worst, std::abs(h.action(c) - action), std::abs(h.object(c) - object)});
        }
      }
      for (int n = 0; n < kNodes; ++n) {
        for (int c = 0; c < 3; ++c) {
          double coord = 0.0;
          for (int o = first; o <= last; ++o) {
            coord += std::exp(-m * (o - first)) / z * (o + 0.1 * (step - 1 - o) + 0.01 * c + n);
          }
          worst = std::max(worst, std::abs(fused->coords(n, c) - coord));
        }
      }
      if (m == 0.0) {
        for (double w : fused->weights) {
          worst = std::max(worst, std::abs(w - 1.0 / static_cast<double>(fused->weights.size())));
        }
      }
    }
  }
  return {shapes_ok && worst <= kTol,
          fmt("m in {0, 0.1, 0.7, 2}, max abs deviation %.2e (<= %.0e)", worst, kTol)};
}

// 5. Encoder ablation on a shuffled-order task with many objects.
Outcome ablation_direction(const std::filesystem::path& report_dir) {
  constexpr double kBudget = 3600.0;
  const auto t0 = Clock::now();
  const tg::ConfigMap base = {{"encoder.d_mp", "16"},
                              {"slice.history", "4"},
                              {"slice.sample_rate", "5"},
                              {"slice.n_past", "8"},
                              {"data.stride", "20"},
                              {"data.resample_copies", "0"},
                              {"train.epochs", "40"},
                              {"train.lr", "0.003"},
                              {"train.batch_size", "32"},
                              {"train.eval_every", "0"},
                              {"train.seeds", "0,1"}};
  tg::GeneratorOptions go;
  go.relation_step = config_with(base).data.effective_relation_step();
  const auto demos = tg::generate_synthetic(tg::builtin_task_spec("insert"), vocab(), 4, 10, 2024, go);

  std::vector<std::vector<tg::HandLabel>> orders;
  int min_objects = 1 << 20;
  for (const tg::Demonstration& d : demos) {
    min_objects = std::min(min_objects, d.num_nodes());  // roster objects, hands included
    auto seq = tg::primitive_sequence(d, tg::kRight, vocab());
    if (std::find(orders.begin(), orders.end(), seq) == orders.end()) orders.push_back(std::move(seq));
  }

  std::filesystem::create_directories(report_dir);
  std::ostringstream table;
  table << tg::summary_header() << '\n';
  std::array<tg::MetricsSummary, 3> summary;
  const std::array<const char*, 3> variants = {"mpnn", "none", "dreher"};
  for (std::size_t i = 0; i < variants.size(); ++i) {
    tg::ConfigMap over = base;
    over["encoder.variant"] = variants[i];
    // Runs are independent of the worker count, so use every core.
    tg::ExperimentOptions options;
    options.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    const tg::ExperimentReport r = tg::run_cross_validation(demos, vocab(), config_with(over), options);
    summary[i] = r.summary;
    tg::write_report(report_dir / (std::string("ablation_") + variants[i] + ".json"), variants[i], r);
    table << tg::format_summary_row(variants[i], r.summary) << '\n';
    std::cout << "  " << tg::format_summary_row(variants[i], r.summary) << std::endl;
  }
  {
    std::ofstream out(report_dir / "ablation_summary.txt");
    out << table.str();
  }
  const double s = seconds_since(t0);
  const double o_mpnn = summary[0].mean.accuracy[tg::kObjHorizonObject];
  const double o_none = summary[1].mean.accuracy[tg::kObjHorizonObject];
  const double rmse_mpnn = summary[0].mean.rmse_m;
  const double rmse_dreher = summary[2].mean.rmse_m;
  const bool data_ok = min_objects >= 6 && orders.size() >= 2;
  return {data_ok && o_mpnn >= o_none && rmse_dreher >= rmse_mpnn && s < kBudget,
          fmt("o_hor mpnn %.3f vs none %.3f; rmse dreher %.4f vs mpnn %.4f; %d+ objects, %zu "
              "right-hand orders; %.0f s",
              o_mpnn, o_none, rmse_dreher, rmse_mpnn, min_objects, orders.size(), s)};
}

// 6. Decoder-only finetuning on a shifted workspace.
Outcome finetune_contract() {
  const tg::RunConfig cfg = config_with({{"encoder.d_mp", "16"},
                                         {"slice.history", "4"},
                                         {"slice.sample_rate", "5"},
                                         {"slice.n_past", "8"},
                                         {"data.stride", "10"},
                                         {"data.resample_copies", "0"},
                                         {"train.epochs", "5"},
                                         {"train.batch_size", "32"},
                                         {"train.eval_every", "0"}});
  tg::GeneratorOptions go;
  go.relation_step = cfg.data.effective_relation_step();
  const auto source = tg::generate_synthetic(tg::builtin_task_spec("cooking"), vocab(), 2, 3, 31, go);
  tg::FullTrainOutcome pre = tg::train_on_all(source, vocab(), cfg, 0);

  // Same task, new subjects, workspace moved 12 cm right and 8 cm closer.
  auto shifted = tg::generate_synthetic(tg::builtin_task_spec("cooking"), vocab(), 2, 2, 97, go);
  for (tg::Demonstration& d : shifted) {
    for (tg::Frame& f : d.frames) {
      for (tg::Point& p : f.positions) p += tg::Point(0.12, -0.08, 0.0);
    }
    tg::recompute_relations(d, cfg.data.thresholds, go.relation_step);
  }

  tg::Model& model = pre.model;
  const tg::nn::ParamStore before = model.params();
  const tg::FinetuneOutcome ft = tg::finetune_model(model, shifted, cfg, 1);
  bool encoder_same = true;
  bool decoder_changed = false;
  for (std::size_t i = 0; i < before.size(); ++i) {
    const tg::nn::Param& p = model.params().at(i);
    const bool same = same_bytes(p.value, before.at(i).value);
    if (p.name.rfind("encoder.", 0) == 0) {
      encoder_same = encoder_same && same;
    } else if (!same) {
      decoder_changed = true;
    }
  }
  return {encoder_same && decoder_changed && ft.loss_after < ft.loss_before,
          fmt("encoder identical %s, decoder changed %s, loss %.3f -> %.3f",
              encoder_same ? "yes" : "no", decoder_changed ? "yes" : "no", ft.loss_before,
              ft.loss_after)};
}

// 7. Augmentation and relation invariants.
Outcome augmentation_suite() {
  constexpr double kTol = 1e-9;
  const tg::RelationThresholds th;
  std::vector<std::string> broken;
  tg::GeneratorOptions go;
  const auto takes = tg::generate_synthetic(tg::builtin_task_spec("insert"), vocab(), 1, 3, 5, go);

  for (const tg::Demonstration& d : takes) {
    const tg::Demonstration m = tg::augment_mirror(d, vocab());
    const tg::Demonstration mm = tg::augment_mirror(m, vocab());
    tg::Demonstration recomputed = m;
    tg::recompute_relations(recomputed, th, go.relation_step);
    bool involution = mm.roster == d.roster;
    bool commutes = true;
    for (std::size_t f = 0; f < d.frames.size(); ++f) {
      involution = involution && mm.frames[f].positions == d.frames[f].positions &&
                   mm.frames[f].relations == d.frames[f].relations &&
                   mm.frames[f].hands == d.frames[f].hands;
      commutes = commutes && recomputed.frames[f].relations == m.frames[f].relations;
    }
    if (!involution) broken.push_back("mirror involution");
    if (!commutes) broken.push_back("mirror/relation commutation");
  }

  // Opposite edges of random scenes: spatial bits swap, symmetric bits agree.
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> pos(-0.3, 0.3);
  std::normal_distribution<double> jitter(0.0, 0.02);
  bool table_ok = true;
  for (int scene = 0; scene < 500; ++scene) {
    const int n = 2 + scene % 5;
    std::vector<tg::Point> prev(static_cast<std::size_t>(n));
    std::vector<tg::Point> now(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      prev[static_cast<std::size_t>(i)] = tg::Point(pos(rng), pos(rng), pos(rng));
      now[static_cast<std::size_t>(i)] =
          prev[static_cast<std::size_t>(i)] + tg::Point(jitter(rng), jitter(rng), jitter(rng));
    }
    const auto bits = tg::extract_relations(now, std::span<const tg::Point>(prev), th);
    for (int v = 0; v < n; ++v) {
      for (int w = 0; w < n; ++w) {
        if (v == w) continue;
        const tg::RelationBits a = bits[static_cast<std::size_t>(tg::edge_index(v, w, n))];
        const tg::RelationBits b = bits[static_cast<std::size_t>(tg::edge_index(w, v, n))];
        table_ok = table_ok && b == tg::reverse_bits(a) && tg::reverse_bits(tg::reverse_bits(a)) == a;
      }
    }
  }
  if (!table_ok) broken.push_back("relation reversal table");

  const tg::Standardizer st = tg::Standardizer::fit(takes);
  double worst = 0.0;
  for (const tg::Demonstration& d : takes) {
    for (const tg::Frame& f : d.frames) {
      for (const tg::Point& p : f.positions) worst = std::max(worst, (st.invert(st.apply(p)) - p).cwiseAbs().maxCoeff());
    }
  }
  if (worst > kTol) broken.push_back("standardize round trip");

  std::string detail = fmt("mirror, commutation, reversal table over 500 scenes, round trip %.1e", worst);
  for (const std::string& b : broken) detail += "; broken: " + b;
  return {broken.empty(), detail};
}

// 8. Simulated execution with precondition checks.
Outcome action_selection() {
  const tg::PreconditionRules rules = tg::PreconditionRules::defaults(vocab());
  const tg::SyntheticTaskSpec task = tg::builtin_task_spec("cooking");
  tg::OraclePredictor oracle;
  const tg::SimulationReport good = tg::simulate_execution(oracle, task, vocab(), rules, {});
  int succeeded = 0;
  for (const tg::TrialResult& t : good.trials) succeeded += t.success ? 1 : 0;
  int interventions = 0;
  for (int h = 0; h < tg::kNumHands; ++h) interventions += good.counters.blocked[static_cast<std::size_t>(h)];

  tg::DroppingPredictor dropper(tg::kLeft, 1, 3);
  const tg::SimulationReport bad = tg::simulate_execution(dropper, task, vocab(), rules, {});
  int failed = 0;
  for (const tg::TrialResult& t : bad.trials) failed += t.success ? 0 : 1;
  const bool pass = good.trials.size() == 10 && succeeded == 10 && interventions == 0 &&
                    bad.trials.size() == 10 && failed >= 1 && !bad.trials[3].success;
  return {pass, fmt("oracle %d/%zu with %d interventions; dropped left action: %d failed trial(s)",
                    succeeded, good.trials.size(), interventions, failed)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria, one PASS/FAIL line each"};
  std::vector<int> only;
  std::filesystem::path report_dir = "acceptance_reports";
  app.add_option("--only", only, "Run just these criteria (1-8)")->check(CLI::Range(1, 8));
  app.add_option("--report-dir", report_dir, "Where the ablation reports go");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient check", gradient_check},
      {"overfit fixture", overfit_fixture},
      {"permutation equivariance", permutation_equivariance},
      {"ensemble oracle", ensemble_oracle},
      {"ablation direction", [&] { return ablation_direction(report_dir); }},
      {"finetune contract", finetune_contract},
      {"augmentation and relations", augmentation_suite},
      {"action selection", action_selection},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first,
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
