#include "taskgraph/training/experiment.hpp"

#include "taskgraph/errors.hpp"
#include "taskgraph/training/checkpoint.hpp"

#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

namespace taskgraph {

using nlohmann::json;

namespace {

json metrics_json(const MetricsReport& r) {
  json j;
  for (int o = 0; o < kNumObjectives; ++o) {
    const auto oi = static_cast<std::size_t>(o);
    const std::string name(kObjectiveNames[oi]);
    j["accuracy"][name] = r.accuracy[oi];
    j["right"][name] = r.hand_accuracy[kRight][oi];
    j["left"][name] = r.hand_accuracy[kLeft][oi];
  }
  j["rmse_m"] = r.rmse_m;
  j["samples"] = r.samples;
  return j;
}

json loss_json(const LossBreakdown& b) {
  json j;
  for (int t = 0; t < kNumCeTerms; ++t) {
    j[std::string(kLossTermNames[static_cast<std::size_t>(t)])] = b.ce[static_cast<std::size_t>(t)];
  }
  j["mse"] = b.mse;
  j["total"] = b.total;
  return j;
}

json epoch_json(const EpochLog& e) {
  json j = {{"epoch", e.epoch}, {"seconds", e.seconds}, {"train", loss_json(e.train)}};
  if (e.validation) j["validation"] = loss_json(*e.validation);
  if (e.metrics) j["metrics"] = metrics_json(*e.metrics);
  return j;
}

std::string fmt(const char* pattern, double a, double b) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, a, b);
  return buf;
}

RunOutcome run_one(const std::vector<Demonstration>& demos, const Vocab& vocab,
                   const RunConfig& cfg, const Fold& fold, std::uint64_t seed,
                   const ExperimentOptions& options) {
  std::vector<Demonstration> train_demos;
  std::vector<Demonstration> test_demos;
  for (std::size_t i : fold.train) train_demos.push_back(demos[i]);
  for (std::size_t i : fold.test) test_demos.push_back(demos[i]);

  DatasetConfig data = cfg.data;
  data.seed = cfg.data.seed ^ (seed * 0x9E3779B97F4A7C15ull);
  const auto augmented = augment_training_set(train_demos, vocab, data);
  const SliceSet train = make_slices(augmented, cfg.model.slice, vocab, fold.stats, data.stride);
  const SliceSet test =
      make_slices(preprocess(test_demos, data), cfg.model.slice, vocab, fold.stats, data.stride);
  const auto train_view = train.view();
  const auto test_view = test.view();
  if (train_view.empty()) throw ConfigError("fold " + fold.test_subject + " has no training slices");

  const ClassWeights weights = class_weights(train_view, vocab);
  Model model(cfg.model, vocab, fold.stats);
  model.init(seed);

  std::filesystem::path dir;
  std::ofstream log;
  if (!options.out_dir.empty()) {
    dir = options.out_dir / ("fold-" + fold.test_subject) / ("seed-" + std::to_string(seed));
    std::filesystem::create_directories(dir);
    log.open(dir / "log.jsonl");
  }
  auto on_epoch = [&](const EpochLog& e, const Model&) {
    if (log.is_open()) log << epoch_json(e).dump() << '\n' << std::flush;
    if (options.log) {
      options.log("fold " + fold.test_subject + " seed " + std::to_string(seed) + " epoch " +
                  std::to_string(e.epoch) + " train " + std::to_string(e.train.total) +
                  (e.validation ? " val " + std::to_string(e.validation->total) : ""));
    }
    return true;
  };
  TrainResult result = train_model(model, train_view, test_view, weights, cfg.train, seed, on_epoch);

  RunOutcome out;
  out.test_subject = fold.test_subject;
  out.seed = seed;
  out.aborted = result.aborted;
  out.abort_reason = result.abort_reason;
  out.epochs_run = static_cast<int>(result.epochs.size());
  out.best_epoch = result.best_epoch;
  if (!result.epochs.empty()) out.final_train_loss = result.epochs.back().train.total;

  const std::map<std::string, std::string> meta = {
      {"test_subject", fold.test_subject}, {"seed", std::to_string(seed)}};
  model.params() = result.eval_params;
  if (!test_view.empty()) out.metrics = evaluate(model, test_view);
  if (!dir.empty()) {
    auto m = meta;
    m["epoch"] = std::to_string(cfg.train.reported_epoch());
    save_checkpoint(dir / "eval.ckpt", cfg, model, &result.optimizer, m);
  }
  model.params() = result.best_params;
  if (!test_view.empty()) out.best_metrics = evaluate(model, test_view);
  if (!dir.empty()) {
    auto m = meta;
    m["epoch"] = std::to_string(result.best_epoch);
    save_checkpoint(dir / "best.ckpt", cfg, model, nullptr, m);
  }
  return out;
}

}  // namespace

std::vector<const GraphSlice*> SliceSet::view() const {
  std::vector<const GraphSlice*> out;
  out.reserve(slices.size());
  for (const GraphSlice& s : slices) out.push_back(&s);
  return out;
}

SliceSet make_slices(const std::vector<Demonstration>& demos, const SliceConfig& cfg,
                     const Vocab& vocab, const Standardizer& stats, int stride) {
  SliceSet set;
  for (const Demonstration& d : demos) {
    auto s = build_all_slices(d, cfg, vocab, stats, stride);
    std::move(s.begin(), s.end(), std::back_inserter(set.slices));
  }
  return set;
}

ExperimentReport run_cross_validation(const std::vector<Demonstration>& demos, const Vocab& vocab,
                                      const RunConfig& cfg, const ExperimentOptions& options) {
  const std::vector<Fold> folds = split_loso(demos);
  struct Job {
    std::size_t fold;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    for (std::uint64_t s : cfg.train.seeds) jobs.push_back({f, s});
  }

  ExperimentReport report;
  report.runs.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        report.runs[j] = run_one(demos, vocab, cfg, folds[jobs[j].fold], jobs[j].seed, options);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(options.jobs, static_cast<int>(jobs.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  std::vector<MetricsReport> ok;
  for (const RunOutcome& r : report.runs) {
    if (!r.aborted) ok.push_back(r.metrics);
  }
  report.summary = summarize(ok);
  return report;
}

FullTrainOutcome train_on_all(const std::vector<Demonstration>& demos, const Vocab& vocab,
                              const RunConfig& cfg, std::uint64_t seed,
                              const EpochCallback& on_epoch) {
  if (demos.empty()) throw ConfigError("no demonstrations to train on");
  const Standardizer stats = Standardizer::fit(demos);
  DatasetConfig data = cfg.data;
  data.seed = cfg.data.seed ^ (seed * 0x9E3779B97F4A7C15ull);
  const SliceSet train = make_slices(augment_training_set(demos, vocab, data), cfg.model.slice,
                                     vocab, stats, data.stride);
  const auto view = train.view();
  if (view.empty()) throw ConfigError("demonstrations are too short for one slice");
  FullTrainOutcome out{Model(cfg.model, vocab, stats), {}};
  out.model.init(seed);
  out.result = train_model(out.model, view, {}, class_weights(view, vocab), cfg.train, seed, on_epoch);
  out.model.params() = out.result.eval_params;
  return out;
}

FinetuneOutcome finetune_model(Model& model, const std::vector<Demonstration>& demos,
                               const RunConfig& cfg, std::uint64_t seed,
                               const EpochCallback& on_epoch) {
  if (demos.empty()) throw ConfigError("no demonstrations to finetune on");
  const Vocab& vocab = model.vocab();
  DatasetConfig data = cfg.data;
  data.seed = cfg.data.seed ^ (seed * 0x9E3779B97F4A7C15ull);
  const SliceSet train = make_slices(augment_training_set(demos, vocab, data), cfg.model.slice,
                                     vocab, model.stats(), data.stride);
  const SliceSet probe =
      make_slices(preprocess(demos, data), cfg.model.slice, vocab, model.stats(), data.stride);
  const auto train_view = train.view();
  const auto probe_view = probe.view();
  if (train_view.empty() || probe_view.empty()) {
    throw ConfigError("finetune demonstrations are too short for one slice");
  }
  const ClassWeights weights = class_weights(train_view, vocab);
  FinetuneOutcome out;
  out.loss_before = batch_loss(model, probe_view, weights, cfg.train.beta_mse, true, nullptr).total;
  out.result = finetune(model, train_view, {}, weights, cfg.train, seed, on_epoch);
  model.params() = out.result.eval_params;
  out.loss_after = batch_loss(model, probe_view, weights, cfg.train.beta_mse, true, nullptr).total;
  return out;
}

std::string summary_header() {
  std::string h = "model        ";
  for (auto name : kObjectiveNames) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "| %-14s ", std::string(name).c_str());
    h += buf;
  }
  h += "| RMSE [m]";
  return h;
}

std::string format_summary_row(const std::string& label, const MetricsSummary& s) {
  char head[32];
  std::snprintf(head, sizeof(head), "%-13s", label.c_str());
  std::string row = head;
  for (std::size_t o = 0; o < kNumObjectives; ++o) {
    row += "| " + fmt("%.3f +- %.3f ", s.mean.accuracy[o], s.stddev.accuracy[o]);
  }
  row += "| " + fmt("%.4f +- %.4f", s.mean.rmse_m, s.stddev.rmse_m);
  return row;
}

std::string report_json(const std::string& label, const ExperimentReport& report) {
  json j;
  j["label"] = label;
  j["objectives"] = std::vector<std::string>(kObjectiveNames.begin(), kObjectiveNames.end());
  json runs = json::array();
  for (const RunOutcome& r : report.runs) {
    runs.push_back({{"test_subject", r.test_subject},
                    {"seed", r.seed},
                    {"metrics", metrics_json(r.metrics)},
                    {"best_metrics", metrics_json(r.best_metrics)},
                    {"best_epoch", r.best_epoch},
                    {"epochs_run", r.epochs_run},
                    {"final_train_loss", r.final_train_loss},
                    {"aborted", r.aborted},
                    {"abort_reason", r.abort_reason}});
  }
  j["runs"] = std::move(runs);
  j["mean"] = metrics_json(report.summary.mean);
  j["std"] = metrics_json(report.summary.stddev);
  j["completed_runs"] = report.summary.runs;
  return j.dump(2);
}

void write_report(const std::filesystem::path& path, const std::string& label,
                  const ExperimentReport& report) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write report " + path.string());
  out << report_json(label, report) << '\n';
}

}  // namespace taskgraph
