#include "taskgraph/encoder.hpp"

#include "taskgraph/errors.hpp"

namespace taskgraph {

using nn::Var;

std::string_view to_string(EncoderVariant v) {
  switch (v) {
    case EncoderVariant::Mpnn:
      return "mpnn";
    case EncoderVariant::Dreher:
      return "dreher";
    case EncoderVariant::Rgcn:
      return "rgcn";
    case EncoderVariant::Transformer:
      return "transformer";
    case EncoderVariant::None:
      return "none";
  }
  return "unknown";
}

EncoderVariant parse_encoder_variant(std::string_view name) {
  for (EncoderVariant v : {EncoderVariant::Mpnn, EncoderVariant::Dreher, EncoderVariant::Rgcn,
                           EncoderVariant::Transformer, EncoderVariant::None}) {
    if (name == to_string(v)) return v;
  }
  throw ConfigError("unknown encoder variant: " + std::string(name));
}

void EncoderConfig::validate() const {
  if (d_mp <= 0 || d_mp % 2 != 0) throw ConfigError("d_mp must be positive and even");
  if (variant == EncoderVariant::Mpnn && iterations < 1) throw ConfigError("K must be >= 1");
  if (variant == EncoderVariant::Dreher && dreher_iterations < 1) {
    throw ConfigError("dreher iterations must be >= 1");
  }
  if (variant == EncoderVariant::Rgcn && rgcn_blocks < 1) throw ConfigError("rgcn blocks must be >= 1");
  if (variant == EncoderVariant::Transformer &&
      (transformer_layers < 1 || transformer_heads < 1 || d_mp % transformer_heads != 0 ||
       (d_mp / transformer_heads) % 2 != 0)) {
    throw ConfigError("transformer encoder needs layers >= 1 and an even per-head width");
  }
  if (temporal_heads < 1 || d_mp % temporal_heads != 0) {
    throw ConfigError("d_mp must be divisible by the temporal attention heads");
  }
  if (ffn_multiplier < 1) throw ConfigError("ffn multiplier must be >= 1");
}

GraphTopology GraphTopology::of(const GraphSlice& slice) {
  GraphTopology t;
  const int n = slice.num_nodes;
  const int hlen = slice.history;
  const int m = slice.num_edges();
  t.num_nodes = n;
  t.history = hlen;
  t.edge_source_rows.resize(static_cast<std::size_t>(m * hlen));
  t.edge_target_rows.resize(t.edge_source_rows.size());
  t.edge_time.resize(t.edge_source_rows.size());
  t.edge_positions.resize(t.edge_source_rows.size());
  for (int e = 0; e < m; ++e) {
    const auto [v, w] = edge_endpoints(e, n);
    for (int h = 0; h < hlen; ++h) {
      const auto r = static_cast<std::size_t>(e * hlen + h);
      t.edge_source_rows[r] = v * hlen + h;
      t.edge_target_rows[r] = w * hlen + h;
      t.edge_time[r] = h;
      t.edge_positions[r] = slice.history_frame_ids[static_cast<std::size_t>(h)];
    }
  }
  for (int v = 0; v < n; ++v) {
    for (int h = 0; h < hlen; ++h) {
      t.node_time.push_back(h);
      t.node_of_row.push_back(v);
      t.node_positions.push_back(slice.history_frame_ids[static_cast<std::size_t>(h)]);
    }
  }
  for (int id : slice.history_frame_ids) t.history_positions.push_back(id);
  return t;
}

namespace {

std::string mp(int k) { return "encoder.mp" + std::to_string(k); }

void register_graph_update(nn::ParamStore& store, const std::string& p, int d,
                           std::mt19937_64& rng) {
  nn::register_linear(store, p + ".edge.w1", 3 * d, d, rng);
  nn::register_linear(store, p + ".edge.w2", d, d, rng);
  nn::register_linear(store, p + ".edge.w3", 2 * d, d, rng);
  nn::register_linear(store, p + ".node.w1", 3 * d, d, rng);
  nn::register_linear(store, p + ".node.w2", d, d, rng);
  nn::register_linear(store, p + ".node.w3", d, d, rng);
  nn::register_linear(store, p + ".global.w1", 3 * d, d, rng);
  nn::register_linear(store, p + ".global.w2", d, d, rng);
}

void register_temporal(nn::ParamStore& store, const std::string& p, int d, int hidden,
                       std::mt19937_64& rng) {
  for (const char* kind : {".node", ".edge"}) {
    nn::register_self_attention(store, p + kind + "_attn", d, rng);
    nn::register_feed_forward(store, p + kind + "_ffn", d, hidden, rng);
  }
}

/// Edge -> node -> global update. `residual` adds to the incoming embeddings,
/// otherwise the update replaces them.
GraphEmbeddings graph_update(nn::Tape& tape, const GraphEmbeddings& in, const GraphTopology& topo,
                             const std::string& p, double slope, bool residual) {
  auto act = [slope](Var x) { return nn::leaky_relu(x, slope); };
  const int node_rows = topo.num_nodes * topo.history;

  Var g_edge = nn::gather_rows(in.global, topo.edge_time);
  Var hv = nn::gather_rows(in.node, topo.edge_source_rows);
  Var hw = nn::gather_rows(in.node, topo.edge_target_rows);
  Var edge_msg = act(nn::apply_linear(
      tape,
      nn::concat_cols({act(nn::apply_linear(tape, in.edge, p + ".edge.w2")),
                       act(nn::apply_linear(tape, nn::concat_cols({hv, hw}), p + ".edge.w3")),
                       g_edge}),
      p + ".edge.w1"));
  Var edge = residual ? nn::add(in.edge, edge_msg) : edge_msg;

  Var incoming = nn::segment_mean(edge, topo.edge_target_rows, node_rows);
  Var g_node = nn::gather_rows(in.global, topo.node_time);
  Var node_msg = act(nn::apply_linear(
      tape,
      nn::concat_cols({act(nn::apply_linear(tape, in.node, p + ".node.w2")),
                       act(nn::apply_linear(tape, incoming, p + ".node.w3")), g_node}),
      p + ".node.w1"));
  Var node = residual ? nn::add(in.node, node_msg) : node_msg;

  Var node_mean = nn::segment_mean(node, topo.node_time, topo.history);
  Var edge_mean = nn::segment_mean(edge, topo.edge_time, topo.history);
  Var global_msg = act(nn::apply_linear(
      tape,
      nn::concat_cols({act(nn::apply_linear(tape, in.global, p + ".global.w2")), node_mean,
                       edge_mean}),
      p + ".global.w1"));
  Var global = residual ? nn::add(in.global, global_msg) : global_msg;

  return GraphEmbeddings{node, edge, global, in.num_nodes, in.history};
}

}  // namespace

void register_encoder_params(nn::ParamStore& store, const EncoderConfig& cfg,
                             const FeatureDims& dims, std::mt19937_64& rng) {
  cfg.validate();
  const int d = cfg.d_mp;
  const int hidden = d * cfg.ffn_multiplier;
  nn::register_linear(store, "encoder.node_in", dims.node, d, rng);
  nn::register_linear(store, "encoder.edge_in", dims.edge, d, rng);
  nn::register_linear(store, "encoder.global_in", dims.global, d, rng);
  switch (cfg.variant) {
    case EncoderVariant::Mpnn:
      for (int k = 0; k < cfg.iterations; ++k) {
        register_graph_update(store, mp(k), d, rng);
        register_temporal(store, mp(k), d, hidden, rng);
      }
      break;
    case EncoderVariant::Dreher:
      register_graph_update(store, "encoder.dreher", d, rng);
      break;
    case EncoderVariant::Rgcn:
      for (int b = 0; b < cfg.rgcn_blocks; ++b) {
        nn::register_layer_norm(store, "encoder.rgcn" + std::to_string(b) + ".norm", d, rng);
        nn::register_linear(store, "encoder.rgcn" + std::to_string(b), 2 * d, d, rng);
      }
      break;
    case EncoderVariant::Transformer:
      for (int l = 0; l < cfg.transformer_layers; ++l) {
        const std::string p = "encoder.tf" + std::to_string(l);
        nn::register_self_attention(store, p + ".attn", d, rng);
        nn::register_feed_forward(store, p + ".ffn", d, hidden, rng);
      }
      break;
    case EncoderVariant::None:
      break;
  }
}

GraphEmbeddings embed_inputs(nn::Tape& tape, const GraphSlice& slice, const GraphTopology& topo,
                             const EncoderConfig& cfg, bool drop_coordinates) {
  nn::Mat node_features = slice.node_features;
  if (drop_coordinates) node_features.rightCols(3).setZero();
  Var node = nn::apply_linear(tape, tape.constant(std::move(node_features)), "encoder.node_in");
  Var edge = nn::apply_linear(tape, tape.constant(slice.edge_features), "encoder.edge_in");
  Var global = nn::apply_linear(tape, tape.constant(slice.global_features), "encoder.global_in");
  global = nn::gather_rows(global, std::vector<int>(static_cast<std::size_t>(slice.history), 0));

  GraphEmbeddings out;
  out.node = nn::rope(node, topo.node_positions, cfg.rope_base);
  out.edge = nn::rope(edge, topo.edge_positions, cfg.rope_base);
  out.global = nn::rope(global, topo.history_positions, cfg.rope_base);
  out.num_nodes = slice.num_nodes;
  out.history = slice.history;
  return out;
}

GraphEmbeddings mpnn_step(nn::Tape& tape, const GraphEmbeddings& in, const GraphTopology& topo,
                          const EncoderConfig& cfg, int iteration) {
  if (iteration < 0 || iteration >= cfg.iterations) throw ConfigError("mpnn iteration out of range");
  return graph_update(tape, in, topo, mp(iteration), cfg.slope, true);
}

GraphEmbeddings temporal_attention_step(nn::Tape& tape, const GraphEmbeddings& in,
                                        const GraphTopology& topo, const EncoderConfig& cfg,
                                        int iteration) {
  const std::string p = mp(iteration);
  const int hlen = topo.history;
  const int n = topo.num_nodes;
  const int m = n * (n - 1);

  GraphEmbeddings out = in;
  const nn::RopeSpec node_rope{topo.node_positions, topo.node_positions, cfg.rope_base};
  out.node = nn::apply_self_attention(tape, in.node, p + ".node_attn", cfg.temporal_heads,
                                      node_rope, nn::blocks(n, hlen));
  out.node = nn::apply_feed_forward(tape, out.node, p + ".node_ffn", cfg.slope);

  const nn::RopeSpec edge_rope{topo.edge_positions, topo.edge_positions, cfg.rope_base};
  out.edge = nn::apply_self_attention(tape, in.edge, p + ".edge_attn", cfg.temporal_heads,
                                      edge_rope, nn::blocks(m, hlen));
  out.edge = nn::apply_feed_forward(tape, out.edge, p + ".edge_ffn", cfg.slope);
  return out;
}

GraphEmbeddings encode(nn::Tape& tape, const GraphSlice& slice, const EncoderConfig& cfg) {
  return encode(tape, slice, GraphTopology::of(slice), cfg);
}

GraphEmbeddings encode(nn::Tape& tape, const GraphSlice& slice, const GraphTopology& topo,
                       const EncoderConfig& cfg) {
  switch (cfg.variant) {
    case EncoderVariant::Mpnn: {
      GraphEmbeddings e = embed_inputs(tape, slice, topo, cfg);
      for (int k = 0; k < cfg.iterations; ++k) {
        e = mpnn_step(tape, e, topo, cfg, k);
        e = temporal_attention_step(tape, e, topo, cfg, k);
      }
      return e;
    }
    case EncoderVariant::Dreher: {
      GraphEmbeddings e = embed_inputs(tape, slice, topo, cfg, /*drop_coordinates=*/true);
      for (int k = 0; k < cfg.dreher_iterations; ++k) {
        e = graph_update(tape, e, topo, "encoder.dreher", cfg.slope, false);
      }
      return e;
    }
    case EncoderVariant::Rgcn: {
      GraphEmbeddings e = embed_inputs(tape, slice, topo, cfg);
      const int node_rows = topo.num_nodes * topo.history;
      for (int b = 0; b < cfg.rgcn_blocks; ++b) {
        const std::string p = "encoder.rgcn" + std::to_string(b);
        Var xn = nn::apply_layer_norm(tape, e.node, p + ".norm");
        Var neighbours = nn::segment_mean(nn::gather_rows(xn, topo.edge_source_rows),
                                          topo.edge_target_rows, node_rows);
        Var upd = nn::apply_linear(tape, nn::concat_cols({xn, neighbours}), p);
        e.node = nn::add(e.node, nn::leaky_relu(upd, cfg.slope));
      }
      return e;
    }
    case EncoderVariant::Transformer: {
      GraphEmbeddings e = embed_inputs(tape, slice, topo, cfg);
      const nn::RopeSpec r{topo.node_positions, topo.node_positions, cfg.rope_base};
      const auto all = nn::whole(e.node.rows());
      for (int l = 0; l < cfg.transformer_layers; ++l) {
        const std::string p = "encoder.tf" + std::to_string(l);
        e.node = nn::apply_self_attention(tape, e.node, p + ".attn", cfg.transformer_heads, r, all);
        e.node = nn::apply_feed_forward(tape, e.node, p + ".ffn", cfg.slope);
      }
      return e;
    }
    case EncoderVariant::None:
      return embed_inputs(tape, slice, topo, cfg);
  }
  throw ConfigError("unknown encoder variant");
}

std::vector<std::string> mpnn_update_params(int iteration) {
  std::vector<std::string> out;
  for (const char* w : {".edge.w1", ".edge.w2", ".edge.w3", ".node.w1", ".node.w2", ".node.w3",
                        ".global.w1", ".global.w2"}) {
    out.push_back(mp(iteration) + w + ".weight");
    out.push_back(mp(iteration) + w + ".bias");
  }
  return out;
}

std::vector<std::string> temporal_output_params(int iteration) {
  std::vector<std::string> out;
  for (const char* kind : {".node", ".edge"}) {
    for (const char* w : {"_attn.value", "_attn.out", "_ffn.fc2"}) {
      out.push_back(mp(iteration) + kind + w + ".weight");
      out.push_back(mp(iteration) + kind + w + ".bias");
    }
  }
  return out;
}

}  // namespace taskgraph
