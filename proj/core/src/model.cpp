#include "taskgraph/model.hpp"

#include "taskgraph/errors.hpp"

#include <random>

namespace taskgraph {

void ModelConfig::sync() {
  decoder.d_mp = encoder.d_mp;
  decoder.n_past = slice.n_past;
  decoder.horizon = slice.horizon;
  decoder.slope = encoder.slope;
  decoder.rope_base = encoder.rope_base;
}

void ModelConfig::validate() const {
  slice.validate();
  encoder.validate();
  decoder.validate();
  if (decoder.d_mp != encoder.d_mp || decoder.n_past != slice.n_past ||
      decoder.horizon != slice.horizon) {
    throw ConfigError("decoder sizes disagree with encoder/slice config");
  }
}

Model::Model(ModelConfig cfg, Vocab vocab, Standardizer stats)
    : cfg_(std::move(cfg)), vocab_(std::move(vocab)), stats_(stats) {
  cfg_.validate();
  stats_.validate();
}

FeatureDims Model::feature_dims() const {
  return {vocab_.node_feature_dim(), vocab_.edge_feature_dim(), vocab_.global_feature_dim()};
}

LabelDims Model::label_dims() const { return {vocab_.num_actions(), vocab_.num_object_labels()}; }

void Model::init(std::uint64_t seed) {
  params_ = nn::ParamStore();
  std::mt19937_64 rng(seed);
  register_encoder_params(params_, cfg_.encoder, feature_dims(), rng);
  register_decoder_params(params_, cfg_.decoder, label_dims(), rng);
}

GraphEmbeddings Model::encode(nn::Tape& tape, const GraphSlice& slice) const {
  return taskgraph::encode(tape, slice, cfg_.encoder);
}

Prediction Model::forward(nn::Tape& tape, const GraphSlice& slice, bool teacher_forcing) const {
  if (tape.params() != &params_) throw InternalError("tape is bound to another parameter store");
  if (slice.history != cfg_.slice.history || slice.horizon != cfg_.slice.horizon) {
    throw DimensionError("slice geometry does not match the model config");
  }
  const GraphTopology topo = GraphTopology::of(slice);
  const GraphEmbeddings emb = taskgraph::encode(tape, slice, topo, cfg_.encoder);
  return decode(tape, slice, emb, topo, cfg_.decoder, label_dims(), teacher_forcing);
}

PredictionBundle Model::predict(const GraphSlice& slice) const {
  nn::Tape tape(&params_);
  tape.set_grad_enabled(false);
  const Prediction p = forward(tape, slice, false);
  PredictionBundle out;
  for (std::size_t h = 0; h < out.hands.size(); ++h) {
    const HandPrediction& hp = p.hands[h];
    out.hands[h] = HandOutput{hp.next_action.value(),   hp.next_object.value(),
                              hp.future_action.value(), hp.future_object.value(),
                              hp.horizon_action.value(), hp.horizon_object.value()};
  }
  out.motion = stats_.destandardize(p.motion.value());
  return out;
}

nn::Mat softmax_rows(const nn::Mat& logits) {
  nn::Mat out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    out.row(r) = (logits.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

}  // namespace taskgraph
