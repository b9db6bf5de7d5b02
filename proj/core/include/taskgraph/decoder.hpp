#pragma once

#include "taskgraph/encoder.hpp"
#include "taskgraph/graph_slice.hpp"
#include "taskgraph/nn/layers.hpp"

#include <array>
#include <random>
#include <vector>

namespace taskgraph {

struct DecoderConfig {
  int d_mp = 64;
  int heads = 4;
  int layers = 2;
  int n_past = 20;
  int horizon = 10;
  /// Frame offset (from t) of the future-pair query token; 0 means P.
  int future_anchor = 0;
  double slope = nn::kDefaultSlope;
  double rope_base = nn::kDefaultRopeBase;
  int ffn_multiplier = 2;

  void validate() const;
  [[nodiscard]] int tokens_per_hand() const { return n_past + 2; }
  [[nodiscard]] int future_offset() const { return future_anchor > 0 ? future_anchor : horizon; }
};

/// Output widths of the classification heads.
struct LabelDims {
  int actions = 0;
  int objects = 0;  // object labels incl. none/pad
};

/// Logits of one hand on the tape.
struct HandPrediction {
  nn::Var next_action;     // [1 x A]
  nn::Var next_object;     // [1 x O]
  nn::Var future_action;   // [1 x A]
  nn::Var future_object;   // [1 x O]
  nn::Var horizon_action;  // [P x A]
  nn::Var horizon_object;  // [P x O]
};

struct Prediction {
  std::array<HandPrediction, kNumHands> hands;
  nn::Var motion;  // [N*P x 3], row n*P + p, standardized coordinates
};

/// Action query tokens Q^A (right-hand block first) and their frame ids.
struct QueryTokens {
  nn::Var tokens;  // [2(n_past+2) x d_MP]
  std::vector<double> positions;
};

void register_decoder_params(nn::ParamStore& store, const DecoderConfig& cfg,
                             const LabelDims& labels, std::mt19937_64& rng);

/// Stage 1: four logits heads per (hand, kind) from current pairs and g_bar.
std::array<std::array<nn::Var, 2>, kNumHands> predict_next_pair(
    nn::Tape& tape, const std::array<HandLabel, kNumHands>& current, nn::Var global_mean,
    const DecoderConfig& cfg, const LabelDims& labels);

/// Stage 2: same structure, fed with a next-pair one-hot per hand.
std::array<std::array<nn::Var, 2>, kNumHands> predict_future_pair(
    nn::Tape& tape, const std::array<HandLabel, kNumHands>& next, nn::Var global_mean,
    const DecoderConfig& cfg, const LabelDims& labels);

/// [history | next | future] per hand, embedded, concatenated, rotated.
QueryTokens build_queries(nn::Tape& tape, const GraphSlice& slice,
                          const std::array<HandLabel, kNumHands>& next,
                          const std::array<HandLabel, kNumHands>& future,
                          const DecoderConfig& cfg, const LabelDims& labels);

/// Pre-RoPE query tokens (for tests of the rotation contract).
nn::Var embed_query_tokens(nn::Tape& tape, const GraphSlice& slice,
                           const std::array<HandLabel, kNumHands>& next,
                           const std::array<HandLabel, kNumHands>& future,
                           const DecoderConfig& cfg, const LabelDims& labels);
std::vector<double> query_positions(const GraphSlice& slice, const DecoderConfig& cfg);

/// Horizon logits per hand: {action [P x A], object [P x O]}.
std::array<std::array<nn::Var, 2>, kNumHands> decode_action_object(
    nn::Tape& tape, const QueryTokens& queries, nn::Var global, const GraphTopology& topo,
    const DecoderConfig& cfg, const LabelDims& labels);

/// Per-object coordinates [N*P x 3].
nn::Var decode_motion(nn::Tape& tape, const QueryTokens& queries, nn::Var node,
                      const GraphTopology& topo, const DecoderConfig& cfg);

/// Argmax with ties resolved to the lowest index.
[[nodiscard]] int argmax(const nn::Mat& row_vector);

/// Full decoder. With teacher forcing, ground-truth next/future pairs feed
/// stage 2 and the query tokens; otherwise stage-1/2 argmaxes do.
Prediction decode(nn::Tape& tape, const GraphSlice& slice, const GraphEmbeddings& embeddings,
                  const GraphTopology& topo, const DecoderConfig& cfg, const LabelDims& labels,
                  bool teacher_forcing);

}  // namespace taskgraph
