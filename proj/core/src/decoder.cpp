#include "taskgraph/decoder.hpp"

#include "taskgraph/errors.hpp"

namespace taskgraph {

using nn::Var;

namespace {

constexpr std::array<const char*, kNumHands> kHandName = {"right", "left"};

void register_pair_stage(nn::ParamStore& store, const std::string& p, const DecoderConfig& cfg,
                         const LabelDims& labels, std::mt19937_64& rng) {
  const int in = kNumHands * (labels.actions + labels.objects) + cfg.d_mp;
  nn::register_mlp2(store, p + ".trunk", in, cfg.d_mp, cfg.d_mp, rng);
  for (const char* hand : kHandName) {
    nn::register_linear(store, p + "." + hand + "_action", cfg.d_mp, labels.actions, rng);
    nn::register_linear(store, p + "." + hand + "_object", cfg.d_mp, labels.objects, rng);
  }
}

void register_transformer_decoder(nn::ParamStore& store, const std::string& p,
                                  const DecoderConfig& cfg, std::mt19937_64& rng) {
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string lp = p + ".l" + std::to_string(l);
    nn::register_self_attention(store, lp + ".self", cfg.d_mp, rng);
    nn::register_cross_attention(store, lp + ".cross", cfg.d_mp, rng);
    nn::register_feed_forward(store, lp + ".ffn", cfg.d_mp, cfg.d_mp * cfg.ffn_multiplier, rng);
  }
  nn::register_layer_norm(store, p + ".final_norm", cfg.d_mp, rng);
}

Var run_transformer_decoder(nn::Tape& tape, const std::string& p, const QueryTokens& q,
                            Var memory, std::span<const double> memory_positions,
                            const DecoderConfig& cfg) {
  Var x = q.tokens;
  const auto q_all = nn::whole(x.rows());
  const auto m_all = nn::whole(memory.rows());
  const nn::RopeSpec self_rope{q.positions, q.positions, cfg.rope_base};
  const nn::RopeSpec cross_rope{{}, memory_positions, cfg.rope_base};
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string lp = p + ".l" + std::to_string(l);
    x = nn::apply_self_attention(tape, x, lp + ".self", cfg.heads, self_rope, q_all);
    x = nn::apply_cross_attention(tape, x, memory, lp + ".cross", cfg.heads, cross_rope, q_all,
                                  m_all);
    x = nn::apply_feed_forward(tape, x, lp + ".ffn", cfg.slope);
  }
  return nn::apply_layer_norm(tape, x, p + ".final_norm");
}

nn::Mat one_hot_row(int index, int width) {
  nn::Mat m = nn::Mat::Zero(1, width);
  if (index < 0 || index >= width) throw InputError("label index out of range");
  m(0, index) = 1.0;
  return m;
}

nn::Mat pair_features(const std::array<HandLabel, kNumHands>& pairs, const LabelDims& labels) {
  const int width = labels.actions + labels.objects;
  nn::Mat m = nn::Mat::Zero(1, kNumHands * width);
  for (int h = 0; h < kNumHands; ++h) {
    const HandLabel& l = pairs[static_cast<std::size_t>(h)];
    m.middleCols(h * width, labels.actions) = one_hot_row(l.action, labels.actions);
    m.middleCols(h * width + labels.actions, labels.objects) = one_hot_row(l.object, labels.objects);
  }
  return m;
}

std::array<std::array<Var, 2>, kNumHands> pair_stage(nn::Tape& tape, const std::string& p,
                                                     const std::array<HandLabel, kNumHands>& pairs,
                                                     Var global_mean, const DecoderConfig& cfg,
                                                     const LabelDims& labels) {
  Var in = nn::concat_cols({tape.constant(pair_features(pairs, labels)), global_mean});
  Var trunk = nn::leaky_relu(nn::apply_mlp2(tape, in, p + ".trunk", cfg.slope), cfg.slope);
  std::array<std::array<Var, 2>, kNumHands> out;
  for (int h = 0; h < kNumHands; ++h) {
    const std::string hand = kHandName[static_cast<std::size_t>(h)];
    out[static_cast<std::size_t>(h)] = {nn::apply_linear(tape, trunk, p + "." + hand + "_action"),
                                        nn::apply_linear(tape, trunk, p + "." + hand + "_object")};
  }
  return out;
}

}  // namespace

void DecoderConfig::validate() const {
  if (d_mp <= 0 || d_mp % 2 != 0) throw ConfigError("decoder d_mp must be positive and even");
  if (heads < 1 || d_mp % heads != 0) throw ConfigError("decoder d_mp must be divisible by heads");
  if (layers < 1) throw ConfigError("decoder needs at least one layer");
  if (n_past < 0 || horizon < 1) throw ConfigError("decoder needs n_past >= 0 and horizon >= 1");
  if (future_anchor < 0) throw ConfigError("future anchor must be >= 0");
  if (ffn_multiplier < 1) throw ConfigError("ffn multiplier must be >= 1");
}

void register_decoder_params(nn::ParamStore& store, const DecoderConfig& cfg,
                             const LabelDims& labels, std::mt19937_64& rng) {
  cfg.validate();
  const int d = cfg.d_mp;
  nn::register_layer_norm(store, "decoder.global_norm", d, rng);
  register_pair_stage(store, "decoder.next", cfg, labels, rng);
  register_pair_stage(store, "decoder.future", cfg, labels, rng);
  for (const char* hand : kHandName) {
    nn::register_linear(store, std::string("decoder.query.") + hand, labels.actions + labels.objects,
                        d, rng);
  }
  register_transformer_decoder(store, "decoder.action", cfg, rng);
  for (const char* hand : kHandName) {
    nn::register_linear(store, std::string("decoder.action.") + hand + "_action", d,
                        cfg.horizon * labels.actions, rng);
    nn::register_linear(store, std::string("decoder.action.") + hand + "_object", d,
                        cfg.horizon * labels.objects, rng);
  }
  register_transformer_decoder(store, "decoder.motion", cfg, rng);
  nn::register_layer_norm(store, "decoder.motion.node_norm", d, rng);
  nn::register_mlp2(store, "decoder.motion.head", 2 * d, 2 * d, cfg.horizon * 3, rng);
}

std::array<std::array<Var, 2>, kNumHands> predict_next_pair(
    nn::Tape& tape, const std::array<HandLabel, kNumHands>& current, Var global_mean,
    const DecoderConfig& cfg, const LabelDims& labels) {
  return pair_stage(tape, "decoder.next", current, global_mean, cfg, labels);
}

std::array<std::array<Var, 2>, kNumHands> predict_future_pair(
    nn::Tape& tape, const std::array<HandLabel, kNumHands>& next, Var global_mean,
    const DecoderConfig& cfg, const LabelDims& labels) {
  return pair_stage(tape, "decoder.future", next, global_mean, cfg, labels);
}

Var embed_query_tokens(nn::Tape& tape, const GraphSlice& slice,
                       const std::array<HandLabel, kNumHands>& next,
                       const std::array<HandLabel, kNumHands>& future, const DecoderConfig& cfg,
                       const LabelDims& labels) {
  const int per_hand = cfg.tokens_per_hand();
  const int width = labels.actions + labels.objects;
  std::vector<Var> parts;
  for (int h = 0; h < kNumHands; ++h) {
    const auto hi = static_cast<std::size_t>(h);
    const HandSlice& hs = slice.hands[hi];
    if (static_cast<int>(hs.history.size()) != cfg.n_past) {
      throw DimensionError("slice history length != decoder n_past");
    }
    nn::Mat onehots = nn::Mat::Zero(per_hand, width);
    for (int i = 0; i < cfg.n_past; ++i) {
      const SemanticPair& sp = hs.history[static_cast<std::size_t>(i)];
      onehots(i, sp.action) = 1.0;
      onehots(i, labels.actions + sp.object) = 1.0;
    }
    onehots(cfg.n_past, next[hi].action) = 1.0;
    onehots(cfg.n_past, labels.actions + next[hi].object) = 1.0;
    onehots(cfg.n_past + 1, future[hi].action) = 1.0;
    onehots(cfg.n_past + 1, labels.actions + future[hi].object) = 1.0;
    parts.push_back(nn::apply_linear(tape, tape.constant(std::move(onehots)),
                                     std::string("decoder.query.") + kHandName[hi]));
  }
  return nn::concat_rows(parts);
}

std::vector<double> query_positions(const GraphSlice& slice, const DecoderConfig& cfg) {
  std::vector<double> pos;
  for (const HandSlice& hs : slice.hands) {
    for (const SemanticPair& sp : hs.history) pos.push_back(sp.start_frame);
    pos.push_back(slice.frame_id + 1);
    pos.push_back(slice.frame_id + cfg.future_offset());
  }
  return pos;
}

QueryTokens build_queries(nn::Tape& tape, const GraphSlice& slice,
                          const std::array<HandLabel, kNumHands>& next,
                          const std::array<HandLabel, kNumHands>& future,
                          const DecoderConfig& cfg, const LabelDims& labels) {
  QueryTokens q;
  q.positions = query_positions(slice, cfg);
  q.tokens = nn::rope(embed_query_tokens(tape, slice, next, future, cfg, labels), q.positions,
                      cfg.rope_base);
  return q;
}

std::array<std::array<Var, 2>, kNumHands> decode_action_object(
    nn::Tape& tape, const QueryTokens& queries, Var global, const GraphTopology& topo,
    const DecoderConfig& cfg, const LabelDims& labels) {
  Var x = run_transformer_decoder(tape, "decoder.action", queries, global, topo.history_positions,
                                  cfg);
  const int per_hand = static_cast<int>(x.rows()) / kNumHands;
  std::array<std::array<Var, 2>, kNumHands> out;
  for (int h = 0; h < kNumHands; ++h) {
    const std::string hand = kHandName[static_cast<std::size_t>(h)];
    Var pooled = nn::mean_rows(nn::slice_rows(x, h * per_hand, per_hand));
    Var a = nn::apply_linear(tape, pooled, "decoder.action." + hand + "_action");
    Var o = nn::apply_linear(tape, pooled, "decoder.action." + hand + "_object");
    out[static_cast<std::size_t>(h)] = {nn::reshape(a, cfg.horizon, labels.actions),
                                        nn::reshape(o, cfg.horizon, labels.objects)};
  }
  return out;
}

Var decode_motion(nn::Tape& tape, const QueryTokens& queries, Var node, const GraphTopology& topo,
                  const DecoderConfig& cfg) {
  Var x = run_transformer_decoder(tape, "decoder.motion", queries, node, topo.node_positions, cfg);
  const int n = topo.num_nodes;
  Var context = nn::gather_rows(nn::mean_rows(x), std::vector<int>(static_cast<std::size_t>(n), 0));
  Var per_node = nn::apply_layer_norm(
      tape, nn::segment_mean(node, topo.node_of_row, n), "decoder.motion.node_norm");
  Var coords = nn::apply_mlp2(tape, nn::concat_cols({context, per_node}), "decoder.motion.head",
                              cfg.slope);
  return nn::reshape(coords, static_cast<Eigen::Index>(n) * cfg.horizon, 3);
}

int argmax(const nn::Mat& row_vector) {
  int best = 0;
  for (Eigen::Index i = 1; i < row_vector.size(); ++i) {
    if (row_vector.data()[i] > row_vector.data()[best]) best = static_cast<int>(i);
  }
  return best;
}

Prediction decode(nn::Tape& tape, const GraphSlice& slice, const GraphEmbeddings& embeddings,
                  const GraphTopology& topo, const DecoderConfig& cfg, const LabelDims& labels,
                  bool teacher_forcing) {
  if (teacher_forcing && !slice.has_targets) {
    throw ConfigError("teacher forcing requires a slice with targets");
  }
  Var global_mean =
      nn::apply_layer_norm(tape, nn::mean_rows(embeddings.global), "decoder.global_norm");

  std::array<HandLabel, kNumHands> current{};
  for (int h = 0; h < kNumHands; ++h) {
    current[static_cast<std::size_t>(h)] = slice.hands[static_cast<std::size_t>(h)].current;
  }
  const auto next_logits = predict_next_pair(tape, current, global_mean, cfg, labels);

  std::array<HandLabel, kNumHands> next{};
  for (int h = 0; h < kNumHands; ++h) {
    const auto hi = static_cast<std::size_t>(h);
    next[hi] = teacher_forcing ? slice.hands[hi].next
                               : HandLabel{argmax(next_logits[hi][0].value()),
                                           argmax(next_logits[hi][1].value())};
  }
  const auto future_logits = predict_future_pair(tape, next, global_mean, cfg, labels);

  std::array<HandLabel, kNumHands> future{};
  for (int h = 0; h < kNumHands; ++h) {
    const auto hi = static_cast<std::size_t>(h);
    future[hi] = teacher_forcing ? slice.hands[hi].future
                                 : HandLabel{argmax(future_logits[hi][0].value()),
                                             argmax(future_logits[hi][1].value())};
  }

  const QueryTokens queries = build_queries(tape, slice, next, future, cfg, labels);
  const auto horizon = decode_action_object(tape, queries, embeddings.global, topo, cfg, labels);

  Prediction out;
  for (int h = 0; h < kNumHands; ++h) {
    const auto hi = static_cast<std::size_t>(h);
    out.hands[hi] = HandPrediction{next_logits[hi][0],   next_logits[hi][1],
                                   future_logits[hi][0], future_logits[hi][1],
                                   horizon[hi][0],       horizon[hi][1]};
  }
  out.motion = decode_motion(tape, queries, embeddings.node, topo, cfg);
  return out;
}

}  // namespace taskgraph
