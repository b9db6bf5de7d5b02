#pragma once

#include "taskgraph/decoder.hpp"
#include "taskgraph/encoder.hpp"
#include "taskgraph/graph_slice.hpp"
#include "taskgraph/nn/param_store.hpp"
#include "taskgraph/standardize.hpp"
#include "taskgraph/vocab.hpp"

#include <array>
#include <cstdint>

namespace taskgraph {

struct ModelConfig {
  SliceConfig slice;
  EncoderConfig encoder;
  DecoderConfig decoder;

  /// Copies the shared sizes (d_MP, n_past, P) from encoder/slice into the
  /// decoder so callers set them in one place.
  void sync();
  void validate() const;
};

/// Plain-value model output for one slice.
struct HandOutput {
  nn::Mat next_action;     // logits [1 x A]
  nn::Mat next_object;     // [1 x O]
  nn::Mat future_action;   // [1 x A]
  nn::Mat future_object;   // [1 x O]
  nn::Mat horizon_action;  // [P x A]
  nn::Mat horizon_object;  // [P x O]
};

struct PredictionBundle {
  std::array<HandOutput, kNumHands> hands;
  nn::Mat motion;  // [N*P x 3], meters (destandardized), row n*P + p
};

/// Encoder + decoder with their parameters, vocabulary and coordinate stats.
class Model {
 public:
  Model() = default;
  Model(ModelConfig cfg, Vocab vocab, Standardizer stats);

  /// Registers and initializes all parameters from `seed`.
  void init(std::uint64_t seed);

  [[nodiscard]] const ModelConfig& config() const { return cfg_; }
  [[nodiscard]] const Vocab& vocab() const { return vocab_; }
  [[nodiscard]] const Standardizer& stats() const { return stats_; }
  void set_stats(const Standardizer& stats) { stats_ = stats; }
  [[nodiscard]] nn::ParamStore& params() { return params_; }
  [[nodiscard]] const nn::ParamStore& params() const { return params_; }

  [[nodiscard]] FeatureDims feature_dims() const;
  [[nodiscard]] LabelDims label_dims() const;

  /// Differentiable forward pass on `tape` (whose store must be params()).
  Prediction forward(nn::Tape& tape, const GraphSlice& slice, bool teacher_forcing) const;
  GraphEmbeddings encode(nn::Tape& tape, const GraphSlice& slice) const;

  /// Inference: no gradients, argmax-fed stages, motion destandardized.
  [[nodiscard]] PredictionBundle predict(const GraphSlice& slice) const;

 private:
  ModelConfig cfg_;
  Vocab vocab_;
  Standardizer stats_;
  nn::ParamStore params_;
};

/// Row-wise softmax.
[[nodiscard]] nn::Mat softmax_rows(const nn::Mat& logits);

}  // namespace taskgraph
