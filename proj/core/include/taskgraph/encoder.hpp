#pragma once

#include "taskgraph/graph_slice.hpp"
#include "taskgraph/nn/layers.hpp"

#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace taskgraph {

enum class EncoderVariant { Mpnn, Dreher, Rgcn, Transformer, None };

[[nodiscard]] std::string_view to_string(EncoderVariant v);
[[nodiscard]] EncoderVariant parse_encoder_variant(std::string_view name);

struct EncoderConfig {
  EncoderVariant variant = EncoderVariant::Mpnn;
  int d_mp = 64;
  int iterations = 3;      // K, message passing rounds (mpnn)
  int temporal_heads = 2;  // heads of the temporal self-attention
  double slope = nn::kDefaultSlope;
  double rope_base = nn::kDefaultRopeBase;
  int ffn_multiplier = 2;
  int dreher_iterations = 10;
  int rgcn_blocks = 20;
  int transformer_layers = 8;
  int transformer_heads = 16;

  void validate() const;
};

/// Input feature widths.
struct FeatureDims {
  int node = 0;    // d_V
  int edge = 0;    // d_E
  int global = 0;  // d_U
};

/// Encoder output on the tape. Node rows are n*H + h, edge rows e*H + h.
struct GraphEmbeddings {
  nn::Var node;    // [N*H x d_MP]
  nn::Var edge;    // [M*H x d_MP]
  nn::Var global;  // [H x d_MP]
  int num_nodes = 0;
  int history = 0;
};

/// Row bookkeeping shared by all graph updates of one slice.
struct GraphTopology {
  int num_nodes = 0;
  int history = 0;
  std::vector<int> edge_source_rows;  // per edge row: row of h_v
  std::vector<int> edge_target_rows;  // per edge row: row of h_w
  std::vector<int> edge_time;         // per edge row: h
  std::vector<int> node_time;         // per node row: h
  std::vector<int> node_of_row;       // per node row: n
  std::vector<double> node_positions;  // per node row: frame id
  std::vector<double> edge_positions;  // per edge row: frame id
  std::vector<double> history_positions;

  static GraphTopology of(const GraphSlice& slice);
};

void register_encoder_params(nn::ParamStore& store, const EncoderConfig& cfg,
                             const FeatureDims& dims, std::mt19937_64& rng);

/// Separate linear embeddings of node/edge/global features, the global
/// vector tiled over H, RoPE over the temporal axis of all three.
/// `drop_coordinates` zeroes the coordinate columns of the node features.
GraphEmbeddings embed_inputs(nn::Tape& tape, const GraphSlice& slice, const GraphTopology& topo,
                             const EncoderConfig& cfg, bool drop_coordinates = false);

/// One residual edge -> node -> global update with iteration-specific weights.
GraphEmbeddings mpnn_step(nn::Tape& tape, const GraphEmbeddings& in, const GraphTopology& topo,
                          const EncoderConfig& cfg, int iteration);

/// Self-attention over the H steps of every node and every edge.
GraphEmbeddings temporal_attention_step(nn::Tape& tape, const GraphEmbeddings& in,
                                        const GraphTopology& topo, const EncoderConfig& cfg,
                                        int iteration);

GraphEmbeddings encode(nn::Tape& tape, const GraphSlice& slice, const EncoderConfig& cfg);
GraphEmbeddings encode(nn::Tape& tape, const GraphSlice& slice, const GraphTopology& topo,
                       const EncoderConfig& cfg);

/// Parameter names of the mpnn update branches / attention outputs of one
/// iteration (used by tests that zero them).
[[nodiscard]] std::vector<std::string> mpnn_update_params(int iteration);
[[nodiscard]] std::vector<std::string> temporal_output_params(int iteration);

}  // namespace taskgraph
