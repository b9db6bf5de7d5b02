#pragma once

#include "taskgraph/nn/ops.hpp"
#include "taskgraph/nn/param_store.hpp"

#include <random>
#include <span>
#include <string>

namespace taskgraph::nn {

inline constexpr double kDefaultSlope = 0.01;
inline constexpr double kDefaultRopeBase = 10000.0;

// Parameters are registered under "<prefix>.weight" / "<prefix>.bias" etc.

void register_linear(ParamStore& store, const std::string& prefix, int in, int out,
                     std::mt19937_64& rng, bool bias = true);
Var apply_linear(Tape& tape, Var x, const std::string& prefix);

/// Two-layer perceptron: linear -> LeakyReLU -> linear.
void register_mlp2(ParamStore& store, const std::string& prefix, int in, int hidden, int out,
                   std::mt19937_64& rng);
Var apply_mlp2(Tape& tape, Var x, const std::string& prefix, double slope = kDefaultSlope);

void register_layer_norm(ParamStore& store, const std::string& prefix, int dim,
                         std::mt19937_64& rng);
Var apply_layer_norm(Tape& tape, Var x, const std::string& prefix);

/// Rotary offsets for a sublayer; an empty span disables rotation.
struct RopeSpec {
  std::span<const double> query_positions;
  std::span<const double> key_positions;
  double base = kDefaultRopeBase;
};

/// Pre-norm multi-head self-attention: x + W_o Attn(LN(x)).
void register_self_attention(ParamStore& store, const std::string& prefix, int dim,
                             std::mt19937_64& rng);
Var apply_self_attention(Tape& tape, Var x, const std::string& prefix, int heads,
                         const RopeSpec& rope, const std::vector<Segment>& segments);

/// Pre-norm cross-attention to `memory`: x + W_o Attn(LN(x), LN_m(memory)).
void register_cross_attention(ParamStore& store, const std::string& prefix, int dim,
                              std::mt19937_64& rng);
Var apply_cross_attention(Tape& tape, Var x, Var memory, const std::string& prefix, int heads,
                          const RopeSpec& rope, const std::vector<Segment>& q_segments,
                          const std::vector<Segment>& kv_segments);

/// Pre-norm feed-forward: x + fc2(LeakyReLU(fc1(LN(x)))).
void register_feed_forward(ParamStore& store, const std::string& prefix, int dim, int hidden,
                           std::mt19937_64& rng);
Var apply_feed_forward(Tape& tape, Var x, const std::string& prefix, double slope);

/// One segment covering all rows.
[[nodiscard]] std::vector<Segment> whole(Eigen::Index rows);
/// `count` consecutive segments of equal `length`.
[[nodiscard]] std::vector<Segment> blocks(int count, int length);

}  // namespace taskgraph::nn
