#include "commands.hpp"

#include "manifest.hpp"

#include "taskgraph/dataset/io.hpp"
#include "taskgraph/dataset/synthetic.hpp"
#include "taskgraph/errors.hpp"
#include "taskgraph/inference/rollout.hpp"
#include "taskgraph/inference/simulation.hpp"
#include "taskgraph/training/checkpoint.hpp"
#include "taskgraph/training/diagnostics.hpp"
#include "taskgraph/training/experiment.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

#ifndef TASKGRAPH_VERSION
#define TASKGRAPH_VERSION "0.0.0"
#endif

namespace taskgraph::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ConfigMap parse_sets(const std::vector<std::string>& sets) {
  ConfigMap out;
  for (const std::string& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
    auto trim = [](std::string v) {
      const auto b = v.find_first_not_of(" \t");
      const auto e = v.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
    };
    out[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
  }
  return out;
}

RunManifest start_manifest(const Common& c, const std::string& command, const RunConfig& cfg) {
  RunManifest m;
  m.tool_version = TASKGRAPH_VERSION;
  m.command = command;
  m.argv = c.argv;
  m.config = to_config_map(cfg);
  m.seeds = cfg.train.seeds;
  return m;
}

void save_manifest(const Common& c, const fs::path& fallback, const RunManifest& m) {
  const fs::path path = c.manifest.empty() ? fallback : fs::path(c.manifest);
  if (path.empty()) return;
  write_manifest(path, m);
}

std::vector<fs::path> dataset_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("dataset directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".jsonl" || e.path().filename() == "manifest.json") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

Dataset load(const fs::path& dir, const RunConfig& cfg) {
  return load_dataset(dir, cfg.data.thresholds, cfg.data.effective_relation_step());
}

void require_same_vocab(const Vocab& a, const Vocab& b) {
  if (!(a == b)) throw InputError("dataset vocabulary differs from the checkpoint vocabulary");
}

/// Checkpoint config with file/--set overrides; architecture keys may not change.
RunConfig checkpoint_config(const Checkpoint& ck, const Common& c) {
  RunConfig cfg = resolve_config(ck.config, c);
  const ConfigMap before = to_config_map(ck.config);
  const ConfigMap after = to_config_map(cfg);
  for (const auto& [key, value] : before) {
    const bool architecture = key.rfind("encoder.", 0) == 0 || key.rfind("decoder.", 0) == 0 ||
                              key.rfind("slice.", 0) == 0;
    if (architecture && after.at(key) != value) {
      throw ConfigError("cannot change " + key + " of a trained checkpoint");
    }
  }
  return cfg;
}

json pair_json(const HandLabel& p, const Vocab& v) {
  return {{"action", v.action_name(p.action)}, {"object", v.object_label_name(p.object)}};
}

void print_summary_table(const std::vector<std::pair<std::string, MetricsSummary>>& rows) {
  std::cout << summary_header() << '\n';
  for (const auto& [label, s] : rows) std::cout << format_summary_row(label, s) << '\n';
}

}  // namespace

RunConfig resolve_config(RunConfig base, const Common& c) {
  if (!c.config.empty()) apply_config(base, load_config_file(c.config));
  apply_config(base, parse_sets(c.sets));
  base.finalize();
  return base;
}

int gen_data(const Common& c, const GenDataArgs& a) {
  const RunConfig cfg = resolve_config(RunConfig{}, c);
  if (a.out.empty()) throw ConfigError("--out is required");
  const Vocab vocab = Vocab::builtin();
  const SyntheticTaskSpec spec = builtin_task_spec(a.task);
  const std::uint64_t seed = c.seed.value_or(0);

  RunManifest m = start_manifest(c, "gen-data", cfg);
  m.seeds = {seed};
  save_manifest(c, fs::path(a.out) / "run_manifest.json", m);

  GeneratorOptions opts;
  opts.thresholds = cfg.data.thresholds;
  opts.relation_step = cfg.data.effective_relation_step();
  const auto demos = generate_synthetic(spec, vocab, a.subjects, a.takes, seed, opts);
  const auto files = save_dataset(a.out, demos, vocab, WriteOptions{a.relations});
  std::cout << "wrote " << files.size() << " takes to " << a.out << '\n';
  return 0;
}

int train(const Common& c, const TrainArgs& a) {
  Common cc = c;
  if (!a.encoder.empty()) cc.sets.push_back("encoder.variant=" + a.encoder);
  if (c.seed) cc.sets.push_back("train.seeds=" + std::to_string(*c.seed));
  const RunConfig cfg = resolve_config(RunConfig{}, cc);
  if (a.data.empty() || a.out.empty()) throw ConfigError("--data and --out are required");
  const fs::path out(a.out);

  RunManifest m = start_manifest(c, "train", cfg);
  m.inputs = hash_files(dataset_files(a.data));
  const Dataset ds = load(a.data, cfg);
  if (a.all) {
    m.checkpoints_out = {(out / "model.ckpt").string()};
  } else {
    for (const Fold& f : split_loso(ds.demos)) {
      for (std::uint64_t s : cfg.train.seeds) {
        const fs::path d = out / ("fold-" + f.test_subject) / ("seed-" + std::to_string(s));
        m.checkpoints_out.push_back((d / "eval.ckpt").string());
        m.checkpoints_out.push_back((d / "best.ckpt").string());
      }
    }
  }
  save_manifest(c, out / "run_manifest.json", m);

  auto log = [&](const std::string& line) {
    if (!a.quiet) std::cerr << line << '\n';
  };
  if (a.all) {
    const std::uint64_t seed = cfg.train.seeds.front();
    auto on_epoch = [&](const EpochLog& e, const Model&) {
      log("epoch " + std::to_string(e.epoch) + " train " + std::to_string(e.train.total));
      return true;
    };
    FullTrainOutcome r = train_on_all(ds.demos, ds.vocab, cfg, seed, on_epoch);
    if (r.result.aborted) {
      std::cerr << "training aborted: " << r.result.abort_reason << '\n';
      return 1;
    }
    save_checkpoint(out / "model.ckpt", cfg, r.model, &r.result.optimizer,
                    {{"seed", std::to_string(seed)}, {"epoch", std::to_string(cfg.train.reported_epoch())}});
    std::cout << "saved " << (out / "model.ckpt").string() << '\n';
    return 0;
  }
  ExperimentOptions opts;
  opts.out_dir = out;
  opts.jobs = c.jobs;
  opts.log = log;
  const ExperimentReport report = run_cross_validation(ds.demos, ds.vocab, cfg, opts);
  const std::string label(to_string(cfg.model.encoder.variant));
  write_report(out / "report.json", label, report);
  print_summary_table({{label, report.summary}});
  for (const RunOutcome& r : report.runs) {
    if (r.aborted) std::cerr << "run " << r.test_subject << "/" << r.seed << " aborted: " << r.abort_reason << '\n';
  }
  return 0;
}

int eval(const Common& c, const EvalArgs& a) {
  if (a.data.empty() || a.runs.empty()) throw ConfigError("--data and at least one --run are required");
  const std::set<std::string> wanted(a.encoders.begin(), a.encoders.end());
  for (const std::string& e : wanted) (void)parse_encoder_variant(e);

  std::vector<fs::path> checkpoints;
  for (const std::string& run : a.runs) {
    if (!fs::is_directory(run)) throw InputError("run directory not found: " + run);
    for (const auto& e : fs::recursive_directory_iterator(run)) {
      if (e.path().filename() == (a.best ? "best.ckpt" : "eval.ckpt")) checkpoints.push_back(e.path());
    }
  }
  std::sort(checkpoints.begin(), checkpoints.end());
  if (checkpoints.empty()) throw InputError("no checkpoints found under the given runs");

  RunManifest m = start_manifest(c, "eval", resolve_config(RunConfig{}, c));
  m.inputs = hash_files(dataset_files(a.data));
  for (const auto& p : checkpoints) m.checkpoints_in.push_back(p.string());
  save_manifest(c,
                a.out.empty() ? fs::path(a.runs.front()) / "eval_manifest.json"
                              : fs::path(a.out + ".manifest.json"),
                m);

  std::map<std::string, ExperimentReport> by_label;
  std::vector<std::string> order;
  std::optional<Dataset> ds;
  for (const fs::path& path : checkpoints) {
    const Checkpoint ck = load_checkpoint(path);
    const RunConfig cfg = checkpoint_config(ck, c);
    const std::string label(to_string(cfg.model.encoder.variant));
    if (!wanted.empty() && !wanted.contains(label)) continue;
    if (!ds) ds = load(a.data, cfg);
    require_same_vocab(ds->vocab, ck.model.vocab());
    const auto subject = ck.meta.find("test_subject");
    if (subject == ck.meta.end()) throw InputError(path.string() + " has no held-out subject");
    std::vector<Demonstration> test;
    for (const Demonstration& d : ds->demos) {
      if (d.subject == subject->second) test.push_back(d);
    }
    if (test.empty()) throw InputError("dataset has no takes of subject " + subject->second);
    const SliceSet slices = make_slices(preprocess(test, cfg.data), cfg.model.slice, ck.model.vocab(),
                                        ck.model.stats(), cfg.data.stride);
    RunOutcome r;
    r.test_subject = subject->second;
    r.seed = std::stoull(ck.meta.count("seed") ? ck.meta.at("seed") : "0");
    r.metrics = evaluate(ck.model, slices.view());
    r.best_metrics = r.metrics;
    if (!by_label.contains(label)) order.push_back(label);
    by_label[label].runs.push_back(std::move(r));
  }
  if (order.empty()) throw InputError("no checkpoint matches the requested encoders");

  std::vector<std::pair<std::string, MetricsSummary>> rows;
  json combined = json::object();
  for (const std::string& label : order) {
    ExperimentReport& rep = by_label[label];
    std::vector<MetricsReport> metrics;
    for (const RunOutcome& r : rep.runs) metrics.push_back(r.metrics);
    rep.summary = summarize(metrics);
    rows.emplace_back(label, rep.summary);
    combined[label] = json::parse(report_json(label, rep));
  }
  print_summary_table(rows);
  if (!a.out.empty()) {
    std::ofstream out(a.out);
    if (!out) throw InputError("cannot write " + a.out);
    out << combined.dump(2) << '\n';
  }
  return 0;
}

int rollout(const Common& c, const RolloutArgs& a) {
  if (a.checkpoint.empty() || a.input.empty()) throw ConfigError("--checkpoint and --input are required");
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const RunConfig cfg = checkpoint_config(ck, c);
  RunManifest m = start_manifest(c, "rollout", cfg);
  m.inputs = hash_files({a.input});
  m.checkpoints_in = {a.checkpoint};
  save_manifest(c, a.out.empty() ? fs::path() : fs::path(a.out + ".manifest.json"), m);

  const Demonstration demo = read_demonstration(fs::path(a.input), ck.model.vocab(),
                                                cfg.data.thresholds, cfg.data.effective_relation_step());
  RolloutConfig rc;
  rc.decay = a.decay.value_or(cfg.ensemble_decay);
  const RolloutResult r = rollout(ck.model, preprocess({demo}, cfg.data).front(), rc);
  if (!r.warning.empty()) std::cerr << "warning: " << r.warning << '\n';

  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw InputError("cannot write " + a.out);
  }
  std::ostream& out = a.out.empty() ? std::cout : file;
  const Vocab& v = ck.model.vocab();
  for (const RolloutStep& s : r.steps) {
    json j = {{"frame", s.frame},
              {"right", pair_json(s.fused.pairs[kRight], v)},
              {"left", pair_json(s.fused.pairs[kLeft], v)},
              {"overlap", s.fused.weights.size()}};
    if (s.frame_id >= 0) j["frame_id"] = s.frame_id;
    if (s.truth) {
      j["truth"] = {{"right", pair_json((*s.truth)[kRight], v)}, {"left", pair_json((*s.truth)[kLeft], v)}};
    }
    out << j.dump() << '\n';
  }
  const auto acc = rollout_accuracy(r);
  std::cerr << "steps " << r.steps.size() << " pair accuracy right " << acc[kRight] << " left "
            << acc[kLeft] << '\n';
  return 0;
}

int finetune(const Common& c, const FinetuneArgs& a) {
  if (a.checkpoint.empty() || a.data.empty() || a.out.empty()) {
    throw ConfigError("--checkpoint, --data and --out are required");
  }
  Checkpoint ck = load_checkpoint(a.checkpoint);
  Common cc = c;
  if (c.seed) cc.sets.push_back("train.seeds=" + std::to_string(*c.seed));
  const RunConfig cfg = checkpoint_config(ck, cc);
  RunManifest m = start_manifest(c, "finetune", cfg);
  m.inputs = hash_files(dataset_files(a.data));
  m.checkpoints_in = {a.checkpoint};
  m.checkpoints_out = {a.out};
  save_manifest(c, a.out + ".manifest.json", m);

  const Dataset ds = load(a.data, cfg);
  require_same_vocab(ds.vocab, ck.model.vocab());
  const FinetuneOutcome r = finetune_model(ck.model, ds.demos, cfg, cfg.train.seeds.front());
  if (r.result.aborted) {
    std::cerr << "finetuning aborted: " << r.result.abort_reason << '\n';
    return 1;
  }
  save_checkpoint(a.out, cfg, ck.model, &r.result.optimizer, {{"finetuned_from", a.checkpoint}});
  std::printf("finetune-set loss before %.6f after %.6f\n", r.loss_before, r.loss_after);
  return 0;
}

int select_action(const Common& c, const SelectArgs& a) {
  if (a.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  if (a.primitive_frames < 1) throw ConfigError("--primitive-frames must be >= 1");
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const RunConfig cfg = checkpoint_config(ck, c);
  RunManifest m = start_manifest(c, "select-action", cfg);
  if (a.input != "-") m.inputs = hash_files({a.input});
  m.checkpoints_in = {a.checkpoint};
  if (!c.manifest.empty()) save_manifest(c, {}, m);

  std::ifstream file;
  if (a.input != "-") {
    file.open(a.input);
    if (!file) throw InputError("cannot open " + a.input);
  }
  std::istream& in = a.input == "-" ? std::cin : file;
  const Model& model = ck.model;
  const Vocab& vocab = model.vocab();
  DemonstrationReader reader(in, vocab);
  Demonstration scene = reader.header();
  scene.frames.clear();

  const SliceConfig& sc = cfg.model.slice;
  const int step = cfg.data.effective_relation_step();
  EnsembleBuffer buffer(sc.horizon, a.decay.value_or(cfg.ensemble_decay));
  const PreconditionRules rules = PreconditionRules::defaults(vocab);
  ExecutionState state = ExecutionState::initial(vocab);
  SelectionCounters counters;
  std::array<int, kNumHands> remaining{};

  while (auto frame = reader.next()) {
    if (static_cast<int>(frame->positions.size()) != scene.num_nodes()) {
      throw InputError("frame " + std::to_string(frame->frame_id) + " has a wrong position count");
    }
    const int t = scene.num_frames();
    if (frame->relations.empty()) {
      if (t >= step) {
        const auto& prev = scene.frames[static_cast<std::size_t>(t - step)].positions;
        frame->relations = extract_relations(frame->positions, std::span<const Point>(prev), cfg.data.thresholds);
      } else {
        frame->relations = extract_relations(frame->positions, std::nullopt, cfg.data.thresholds);
      }
    }
    scene.frames.push_back(std::move(*frame));
    for (int h = 0; h < kNumHands; ++h) {
      const auto hi = static_cast<std::size_t>(h);
      if (state.busy[hi] && --remaining[hi] == 0) finish_primitive(state, h, vocab);
    }
    state.relations = scene.frames.back().relations;

    json rec = {{"frame_id", scene.frames.back().frame_id}};
    if (t < sc.warmup()) {
      rec["status"] = "warmup";
    } else {
      buffer.update(t, model.predict(build_inputs(scene, t, sc, vocab, model.stats())));
      buffer.prune(t + 1);
      const FusedStep fused = *buffer.query(t + 1);
      rec["status"] = "ok";
      for (int h = 0; h < kNumHands; ++h) {
        const auto hi = static_cast<std::size_t>(h);
        const Decision d = select_action(h, fused.pairs[hi], state, rules, &counters);
        if (d.kind == DecisionKind::kTrigger) remaining[hi] = a.primitive_frames;
        json hj = pair_json(d.pair, vocab);
        hj["decision"] = decision_name(d.kind);
        rec[h == kRight ? "right" : "left"] = hj;
      }
    }
    std::cout << rec.dump() << '\n';
  }
  std::cerr << "interventions right " << counters.intervention_rate(kRight) << " left "
            << counters.intervention_rate(kLeft) << " triggered " << counters.triggered[kRight]
            << "/" << counters.triggered[kLeft] << '\n';
  return 0;
}

int grad_check(const Common& c, const GradCheckArgs& a) {
  const RunConfig cfg = resolve_config(tiny_run_config(), c);
  RunManifest m = start_manifest(c, "grad-check", cfg);
  if (!c.manifest.empty()) save_manifest(c, {}, m);
  nn::GradCheckOptions o;
  o.samples = static_cast<std::size_t>(a.samples);
  o.rel_tol = a.tolerance;
  o.step = a.step;
  o.seed = c.seed.value_or(0);
  const auto r = check_loss_gradients(cfg, Vocab::builtin(), a.nodes, o);
  std::printf("checked %zu coordinates, max relative error %.3e (%s[%lld]: analytic %.6e numeric %.6e)\n",
              r.checked, r.max_rel_error, r.worst_param.c_str(),
              static_cast<long long>(r.worst_coordinate), r.worst_analytic, r.worst_numeric);
  std::printf("%s\n", r.passed ? "PASS" : "FAIL");
  return r.passed ? 0 : 1;
}

int simulate(const Common& c, const SimulateArgs& a) {
  std::optional<Checkpoint> ck;
  RunConfig cfg;
  if (a.predictor == "model") {
    if (a.checkpoint.empty()) throw ConfigError("--predictor model needs --checkpoint");
    ck = load_checkpoint(a.checkpoint);
    cfg = checkpoint_config(*ck, c);
  } else if (a.predictor == "oracle" || a.predictor == "drop") {
    cfg = resolve_config(RunConfig{}, c);
  } else {
    throw ConfigError("--predictor must be oracle, drop or model");
  }
  RunManifest m = start_manifest(c, "simulate", cfg);
  if (ck) m.checkpoints_in = {a.checkpoint};
  save_manifest(c, a.out.empty() ? fs::path() : fs::path(a.out + ".manifest.json"), m);

  const Vocab vocab = ck ? ck->model.vocab() : Vocab::builtin();
  SimulationConfig sim;
  sim.trials = a.trials;
  sim.primitive_frames = a.primitive_frames;
  sim.step_cap = a.step_cap;
  sim.seed = c.seed.value_or(0);
  sim.thresholds = cfg.data.thresholds;
  sim.relation_step = cfg.data.effective_relation_step();
  if (ck) sim.history_frames = cfg.model.slice.warmup() + 1;

  std::unique_ptr<ScenePredictor> predictor;
  if (a.predictor == "oracle") {
    predictor = std::make_unique<OraclePredictor>();
  } else if (a.predictor == "drop") {
    predictor = std::make_unique<DroppingPredictor>(kLeft, a.drop_index, a.drop_trial);
  } else {
    predictor = std::make_unique<ModelPredictor>(ck->model, a.decay.value_or(cfg.ensemble_decay));
  }
  const SimulationReport r = simulate_execution(*predictor, builtin_task_spec(a.task), vocab,
                                                PreconditionRules::defaults(vocab), sim);

  std::printf("trial | success | steps | seq_acc_right | seq_acc_left | blocked_right | blocked_left\n");
  json trials = json::array();
  for (const TrialResult& t : r.trials) {
    std::printf("%5d | %7s | %5d | %13.3f | %12.3f | %13d | %12d\n", t.trial, t.success ? "yes" : "no",
                t.steps, t.sequence_accuracy[kRight], t.sequence_accuracy[kLeft],
                t.counters.blocked[kRight], t.counters.blocked[kLeft]);
    trials.push_back({{"trial", t.trial},
                      {"success", t.success},
                      {"hit_cap", t.hit_cap},
                      {"steps", t.steps},
                      {"sequence_accuracy", {{"right", t.sequence_accuracy[kRight]}, {"left", t.sequence_accuracy[kLeft]}}},
                      {"triggered", {{"right", t.counters.triggered[kRight]}, {"left", t.counters.triggered[kLeft]}}},
                      {"blocked", {{"right", t.counters.blocked[kRight]}, {"left", t.counters.blocked[kLeft]}}}});
  }
  std::printf("success rate %.2f, intervention rate right %.4f left %.4f\n", r.success_rate,
              r.intervention_rate[kRight], r.intervention_rate[kLeft]);
  if (!a.out.empty()) {
    std::ofstream out(a.out);
    if (!out) throw InputError("cannot write " + a.out);
    out << json{{"task", a.task},
                {"predictor", a.predictor},
                {"trials", trials},
                {"success_rate", r.success_rate},
                {"sequence_accuracy", {{"right", r.sequence_accuracy[kRight]}, {"left", r.sequence_accuracy[kLeft]}}},
                {"intervention_rate", {{"right", r.intervention_rate[kRight]}, {"left", r.intervention_rate[kLeft]}}}}
               .dump(2)
        << '\n';
  }
  return 0;
}

}  // namespace taskgraph::cli
