#pragma once

#include "taskgraph/config.hpp"
#include "taskgraph/dataset/splits.hpp"
#include "taskgraph/training/metrics.hpp"
#include "taskgraph/training/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace taskgraph {

/// Slices of a demonstration list, owning storage plus a pointer view.
struct SliceSet {
  std::vector<GraphSlice> slices;

  [[nodiscard]] std::vector<const GraphSlice*> view() const;
};

[[nodiscard]] SliceSet make_slices(const std::vector<Demonstration>& demos, const SliceConfig& cfg,
                                   const Vocab& vocab, const Standardizer& stats, int stride);

struct RunOutcome {
  std::string test_subject;
  std::uint64_t seed = 0;
  MetricsReport metrics;       // parameters of the reported epoch, held-out subject
  MetricsReport best_metrics;  // best-validation parameters
  int best_epoch = 0;
  int epochs_run = 0;
  double final_train_loss = 0.0;
  bool aborted = false;
  std::string abort_reason;
};

struct ExperimentOptions {
  std::filesystem::path out_dir;  // empty: no files are written
  int jobs = 1;                   // concurrent (fold, seed) runs
  std::function<void(const std::string&)> log;
};

struct ExperimentReport {
  std::vector<RunOutcome> runs;  // fold-major, then seed
  MetricsSummary summary;        // over non-aborted runs
};

/// Leave-one-subject-out training and evaluation for every (fold, seed).
/// Each run is deterministic in (fold, seed) regardless of `jobs`.
[[nodiscard]] ExperimentReport run_cross_validation(const std::vector<Demonstration>& demos,
                                                    const Vocab& vocab, const RunConfig& cfg,
                                                    const ExperimentOptions& options);

/// One model on every demonstration (no held-out subject), e.g. for
/// rollout or finetuning later. Stats are fit on the raw demonstrations.
struct FullTrainOutcome {
  Model model;  // parameters of the reported epoch
  TrainResult result;
};

[[nodiscard]] FullTrainOutcome train_on_all(const std::vector<Demonstration>& demos,
                                            const Vocab& vocab, const RunConfig& cfg,
                                            std::uint64_t seed, const EpochCallback& on_epoch = {});

struct FinetuneOutcome {
  TrainResult result;
  double loss_before = 0.0;  // joint loss on the (smoothed, unaugmented) finetune set
  double loss_after = 0.0;
};

/// Freezes the encoder and trains the decoder on `demos`, keeping the
/// model's coordinate stats. The model ends with the reported-epoch params.
FinetuneOutcome finetune_model(Model& model, const std::vector<Demonstration>& demos,
                               const RunConfig& cfg, std::uint64_t seed,
                               const EpochCallback& on_epoch = {});

/// Table-shaped human summary: one row per label, six accuracies + RMSE.
[[nodiscard]] std::string format_summary_row(const std::string& label, const MetricsSummary& s);
[[nodiscard]] std::string summary_header();

/// Machine-readable report (JSON) with per-run and aggregated metrics.
[[nodiscard]] std::string report_json(const std::string& label, const ExperimentReport& report);
void write_report(const std::filesystem::path& path, const std::string& label,
                  const ExperimentReport& report);

}  // namespace taskgraph
