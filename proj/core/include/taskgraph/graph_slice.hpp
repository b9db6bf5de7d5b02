#pragma once

#include "taskgraph/demonstration.hpp"
#include "taskgraph/nn/tape.hpp"
#include "taskgraph/standardize.hpp"
#include "taskgraph/vocab.hpp"

#include <array>
#include <vector>

namespace taskgraph {

/// Window geometry of one training sample.
struct SliceConfig {
  int history = 10;      // H: sampled history frames
  int sample_rate = 10;  // S: spacing between sampled frames
  int horizon = 10;      // P: future frames supervised
  int n_past = 20;       // semantic pairs kept per hand

  void validate() const;
  /// Frames before the first index with a full history: (H-1)*S.
  [[nodiscard]] int warmup() const { return (history - 1) * sample_rate; }
};

/// A maximal run of identical (action, object) labels for one hand.
struct SemanticPair {
  int action = 0;
  int object = 0;
  int start_frame = 0;

  friend bool operator==(const SemanticPair&, const SemanticPair&) = default;
};

struct HandSlice {
  HandLabel current;                   // (a_t, o_t)
  std::vector<SemanticPair> history;   // n_past entries, oldest first, left-padded
  HandLabel next;                      // (a_{t+1}, o_{t+1})
  HandLabel future;                    // (a_F, o_F); pad when no successor exists
  std::vector<int> horizon_actions;    // a_{t+1..t+P}
  std::vector<int> horizon_objects;    // o_{t+1..t+P}
};

/// One spatio-temporal graph sample. Node/edge tensors are flattened
/// row-major: node n at history step h is row n*H + h.
struct GraphSlice {
  int num_nodes = 0;
  int history = 0;
  int horizon = 0;
  int task = 0;
  int frame_id = 0;  // frame id of t
  std::vector<int> roster;
  std::vector<int> history_frame_ids;  // [H], oldest first, last == frame_id

  nn::Mat node_features;    // [N*H x d_V] = [one-hot class ; standardized xyz]
  nn::Mat edge_features;    // [M*H x d_E] multi-hot
  nn::Mat global_features;  // [1 x d_U] one-hot task

  std::array<HandSlice, kNumHands> hands;
  nn::Mat target_coords;  // [N*P x 3] standardized, row n*P + p
  bool has_targets = false;

  [[nodiscard]] int num_edges() const { return num_nodes * (num_nodes - 1); }
};

/// Sampled history indices {t-(H-1)S, ..., t-S, t} (frame positions).
[[nodiscard]] std::vector<int> history_indices(int t, const SliceConfig& cfg);

/// Per-hand semantic pairs over frames [0, t], oldest first, not padded.
[[nodiscard]] std::vector<SemanticPair> semantic_pairs(const Demonstration& demo, int hand, int t);

/// Full training sample at frame position t. Requires relations to be
/// present. Throws RangeError when the window does not fit.
[[nodiscard]] GraphSlice build_slice(const Demonstration& demo, int t, const SliceConfig& cfg,
                                     const Vocab& vocab, const Standardizer& stats);

/// Inputs only (no future frames needed); used for online inference.
[[nodiscard]] GraphSlice build_inputs(const Demonstration& demo, int t, const SliceConfig& cfg,
                                      const Vocab& vocab, const Standardizer& stats);

/// Slices at t = warmup, warmup + stride, ... while the horizon fits.
[[nodiscard]] std::vector<GraphSlice> build_all_slices(const Demonstration& demo,
                                                       const SliceConfig& cfg, const Vocab& vocab,
                                                       const Standardizer& stats, int stride);

/// Reorders nodes: node i of the result is node perm[i] of `slice`. Edge rows
/// follow the induced map on ordered pairs.
[[nodiscard]] GraphSlice permute_nodes(const GraphSlice& slice, const std::vector<int>& perm);

}  // namespace taskgraph
