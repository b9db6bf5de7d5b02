#pragma once

#include "taskgraph/demonstration.hpp"
#include "taskgraph/graph_slice.hpp"
#include "taskgraph/relations.hpp"
#include "taskgraph/vocab.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace taskgraph {

struct DatasetConfig {
  int smoothing_window = 5;  // odd, frames
  double resample_min = 0.8;
  double resample_max = 1.2;
  int resample_copies = 1;   // resampled variants per training take
  bool mirror = true;
  int stride = 1;            // frames between consecutive slices
  SliceConfig slice;
  int relation_step = 0;     // frames between compared positions; 0 means S
  RelationThresholds thresholds;
  std::uint64_t seed = 0;

  void validate() const;
  [[nodiscard]] int effective_relation_step() const {
    return relation_step > 0 ? relation_step : slice.sample_rate;
  }
  /// Shortest take that still yields a slice: (H-1)*S + P + 1 frames.
  [[nodiscard]] int min_frames() const { return slice.warmup() + slice.horizon + 1; }
};

/// Centered moving average per object and axis; windows are truncated at
/// the ends. Relations are recomputed afterwards.
[[nodiscard]] Demonstration smooth(const Demonstration& demo, int window,
                                   const RelationThresholds& thresholds, int relation_step);

/// Negates x, swaps the hand classes in the roster and the two label
/// streams, and swaps left_of/right_of on every edge.
[[nodiscard]] Demonstration augment_mirror(const Demonstration& demo, const Vocab& vocab);

/// Linear interpolation onto round((F-1)*rate)+1 frames (rate > 1 slows the
/// take down); labels from the nearest source frame; frame ids renumbered.
/// Returns nullopt when the result is shorter than `min_frames`.
[[nodiscard]] std::optional<Demonstration> augment_resample(const Demonstration& demo,
                                                            double rate,
                                                            const RelationThresholds& thresholds,
                                                            int relation_step, int min_frames);

struct AugmentReport {
  int skipped_resamples = 0;
};

/// Training-set pipeline: smoothed originals, plus mirrored and resampled
/// variants as configured. Deterministic in cfg.seed.
[[nodiscard]] std::vector<Demonstration> augment_training_set(
    const std::vector<Demonstration>& demos, const Vocab& vocab, const DatasetConfig& cfg,
    AugmentReport* report = nullptr);

/// Smoothing only (evaluation data).
[[nodiscard]] std::vector<Demonstration> preprocess(const std::vector<Demonstration>& demos,
                                                    const DatasetConfig& cfg);

}  // namespace taskgraph
