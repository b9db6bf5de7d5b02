#include "taskgraph/nn/layers.hpp"

namespace taskgraph::nn {

void register_linear(ParamStore& store, const std::string& prefix, int in, int out,
                     std::mt19937_64& rng, bool bias) {
  store.add(prefix + ".weight", in, out, Init::HeUniform, rng);
  if (bias) store.add(prefix + ".bias", 1, out, Init::Zeros, rng);
}

Var apply_linear(Tape& tape, Var x, const std::string& prefix) {
  const ParamStore* store = tape.params();
  Var bias;
  if (store->contains(prefix + ".bias")) bias = tape.param(prefix + ".bias");
  return linear(x, tape.param(prefix + ".weight"), bias);
}

void register_mlp2(ParamStore& store, const std::string& prefix, int in, int hidden, int out,
                   std::mt19937_64& rng) {
  register_linear(store, prefix + ".fc1", in, hidden, rng);
  register_linear(store, prefix + ".fc2", hidden, out, rng);
}

Var apply_mlp2(Tape& tape, Var x, const std::string& prefix, double slope) {
  Var h = leaky_relu(apply_linear(tape, x, prefix + ".fc1"), slope);
  return apply_linear(tape, h, prefix + ".fc2");
}

void register_layer_norm(ParamStore& store, const std::string& prefix, int dim,
                         std::mt19937_64& rng) {
  store.add(prefix + ".gain", 1, dim, Init::Ones, rng);
  store.add(prefix + ".shift", 1, dim, Init::Zeros, rng);
}

Var apply_layer_norm(Tape& tape, Var x, const std::string& prefix) {
  return layer_norm(x, tape.param(prefix + ".gain"), tape.param(prefix + ".shift"));
}

void register_self_attention(ParamStore& store, const std::string& prefix, int dim,
                             std::mt19937_64& rng) {
  register_layer_norm(store, prefix + ".norm", dim, rng);
  for (const char* p : {".query", ".key", ".value", ".out"}) {
    register_linear(store, prefix + p, dim, dim, rng);
  }
}

Var apply_self_attention(Tape& tape, Var x, const std::string& prefix, int heads,
                         const RopeSpec& rope_spec, const std::vector<Segment>& segments) {
  Var xn = apply_layer_norm(tape, x, prefix + ".norm");
  Var q = apply_linear(tape, xn, prefix + ".query");
  Var k = apply_linear(tape, xn, prefix + ".key");
  Var v = apply_linear(tape, xn, prefix + ".value");
  if (!rope_spec.query_positions.empty()) q = rope(q, rope_spec.query_positions, rope_spec.base);
  if (!rope_spec.key_positions.empty()) k = rope(k, rope_spec.key_positions, rope_spec.base);
  Var a = attention(q, k, v, segments, segments, heads);
  return add(x, apply_linear(tape, a, prefix + ".out"));
}

void register_cross_attention(ParamStore& store, const std::string& prefix, int dim,
                              std::mt19937_64& rng) {
  register_layer_norm(store, prefix + ".norm", dim, rng);
  register_layer_norm(store, prefix + ".memory_norm", dim, rng);
  for (const char* p : {".query", ".key", ".value", ".out"}) {
    register_linear(store, prefix + p, dim, dim, rng);
  }
}

Var apply_cross_attention(Tape& tape, Var x, Var memory, const std::string& prefix, int heads,
                          const RopeSpec& rope_spec, const std::vector<Segment>& q_segments,
                          const std::vector<Segment>& kv_segments) {
  Var xn = apply_layer_norm(tape, x, prefix + ".norm");
  Var mn = apply_layer_norm(tape, memory, prefix + ".memory_norm");
  Var q = apply_linear(tape, xn, prefix + ".query");
  Var k = apply_linear(tape, mn, prefix + ".key");
  Var v = apply_linear(tape, mn, prefix + ".value");
  if (!rope_spec.query_positions.empty()) q = rope(q, rope_spec.query_positions, rope_spec.base);
  if (!rope_spec.key_positions.empty()) k = rope(k, rope_spec.key_positions, rope_spec.base);
  Var a = attention(q, k, v, q_segments, kv_segments, heads);
  return add(x, apply_linear(tape, a, prefix + ".out"));
}

void register_feed_forward(ParamStore& store, const std::string& prefix, int dim, int hidden,
                           std::mt19937_64& rng) {
  register_layer_norm(store, prefix + ".norm", dim, rng);
  register_linear(store, prefix + ".fc1", dim, hidden, rng);
  register_linear(store, prefix + ".fc2", hidden, dim, rng);
}

Var apply_feed_forward(Tape& tape, Var x, const std::string& prefix, double slope) {
  Var xn = apply_layer_norm(tape, x, prefix + ".norm");
  Var h = leaky_relu(apply_linear(tape, xn, prefix + ".fc1"), slope);
  return add(x, apply_linear(tape, h, prefix + ".fc2"));
}

std::vector<Segment> whole(Eigen::Index rows) {
  return {Segment{0, static_cast<int>(rows)}};
}

std::vector<Segment> blocks(int count, int length) {
  std::vector<Segment> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(Segment{i * length, length});
  return out;
}

}  // namespace taskgraph::nn
