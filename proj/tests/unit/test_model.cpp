#include "helpers.hpp"

#include "taskgraph/config.hpp"
#include "taskgraph/errors.hpp"
#include "taskgraph/model.hpp"

namespace taskgraph {
namespace {

using test::max_abs_diff;
using test::vocab;

RunConfig tiny(EncoderVariant variant) {
  RunConfig cfg = tiny_run_config();
  cfg.model.encoder.variant = variant;
  cfg.finalize();
  return cfg;
}

Model make_model(const RunConfig& cfg, std::uint64_t seed = 3) {
  Model m(cfg.model, vocab(), Standardizer{});
  m.init(seed);
  return m;
}

struct Encoded {
  nn::Mat node;
  nn::Mat edge;
  nn::Mat global;
};

Encoded run_encode(const Model& m, const GraphSlice& s) {
  nn::Tape tape(&m.params());
  tape.set_grad_enabled(false);
  const GraphEmbeddings e = m.encode(tape, s);
  return {e.node.value(), e.edge.value(), e.global.value()};
}

Encoded run_embed(const Model& m, const GraphSlice& s, bool drop_coordinates = false) {
  nn::Tape tape(&m.params());
  tape.set_grad_enabled(false);
  const GraphEmbeddings e = embed_inputs(tape, s, GraphTopology::of(s), m.config().encoder,
                                         drop_coordinates);
  return {e.node.value(), e.edge.value(), e.global.value()};
}

void zero_params(Model& m, const std::vector<std::string>& names) {
  for (const std::string& n : names) m.params().at(n).value.setZero();
}

TEST(Encoder, VariantNamesRoundTrip) {
  for (auto v : {EncoderVariant::Mpnn, EncoderVariant::Dreher, EncoderVariant::Rgcn,
                 EncoderVariant::Transformer, EncoderVariant::None}) {
    EXPECT_EQ(parse_encoder_variant(to_string(v)), v);
  }
  EXPECT_THROW((void)parse_encoder_variant("gat"), ConfigError);
}

TEST(Encoder, OutputWidths) {
  RunConfig cfg = tiny(EncoderVariant::Mpnn);
  const GraphSlice s = test::tiny_slice(cfg, 4, 1);
  const Encoded e = run_encode(make_model(cfg), s);
  const int h = cfg.model.slice.history;
  EXPECT_EQ(e.node.rows(), 4 * h);
  EXPECT_EQ(e.edge.rows(), 12 * h);
  EXPECT_EQ(e.global.rows(), h);
  EXPECT_EQ(e.node.cols(), cfg.model.encoder.d_mp);
}

TEST(Encoder, DefaultWidthIs64) {
  RunConfig cfg;
  cfg.finalize();
  EXPECT_EQ(cfg.model.encoder.d_mp, 64);
  EXPECT_EQ(cfg.model.encoder.iterations, 3);
  EXPECT_EQ(cfg.model.encoder.temporal_heads, 2);
  EXPECT_EQ(cfg.model.decoder.d_mp, 64);
}

TEST(Encoder, ZeroFeaturesGiveBiasOnlyEmbeddings) {
  RunConfig cfg = tiny(EncoderVariant::None);
  GraphSlice s = test::tiny_slice(cfg, 3, 2);
  s.node_features.setZero();
  s.edge_features.setZero();
  s.global_features.setZero();
  for (int& f : s.history_frame_ids) f = 0;  // no rotation
  const Model m = make_model(cfg);
  const Encoded e = run_embed(m, s);
  const nn::Mat& node_bias = m.params().at("encoder.node_in.bias").value;
  for (Eigen::Index r = 0; r < e.node.rows(); ++r) {
    EXPECT_LT((e.node.row(r) - node_bias.row(0)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

// Two slices that differ only in their frame ids give embeddings that agree
// once the rotation is undone.
TEST(Encoder, FrameIdsOnlyRotateEmbeddings) {
  RunConfig cfg = tiny(EncoderVariant::None);
  const GraphSlice a = test::tiny_slice(cfg, 3, 4);
  GraphSlice b = a;
  for (int& f : b.history_frame_ids) f += 37;
  const Model m = make_model(cfg);
  Encoded ea = run_embed(m, a);
  Encoded eb = run_embed(m, b);
  const GraphTopology ta = GraphTopology::of(a);
  const GraphTopology tb = GraphTopology::of(b);
  const double base = cfg.model.encoder.rope_base;
  EXPECT_GT(max_abs_diff(ea.node, eb.node), 1e-6);
  nn::rope_inplace(ea.node, ta.node_positions, base, true);
  nn::rope_inplace(eb.node, tb.node_positions, base, true);
  nn::rope_inplace(ea.edge, ta.edge_positions, base, true);
  nn::rope_inplace(eb.edge, tb.edge_positions, base, true);
  EXPECT_LT(max_abs_diff(ea.node, eb.node), 1e-12);
  EXPECT_LT(max_abs_diff(ea.edge, eb.edge), 1e-12);
}

TEST(Encoder, NoneVariantEqualsEmbedding) {
  RunConfig cfg = tiny(EncoderVariant::None);
  const GraphSlice s = test::tiny_slice(cfg, 4, 5);
  const Model m = make_model(cfg);
  const Encoded a = run_encode(m, s);
  const Encoded b = run_embed(m, s);
  EXPECT_EQ(a.node, b.node);
  EXPECT_EQ(a.edge, b.edge);
  EXPECT_EQ(a.global, b.global);
}

TEST(Encoder, MpnnRunsConfiguredIterations) {
  RunConfig cfg;
  cfg.finalize();
  const Model m = make_model(cfg);
  for (int k = 0; k < 3; ++k) {
    for (const std::string& n : mpnn_update_params(k)) EXPECT_TRUE(m.params().contains(n)) << n;
    for (const std::string& n : temporal_output_params(k)) EXPECT_TRUE(m.params().contains(n)) << n;
  }
  EXPECT_FALSE(m.params().contains(mpnn_update_params(3).front()));
}

// With every update branch and attention output zeroed, each iteration is a
// pure residual and encode() returns the input embedding.
TEST(Encoder, ZeroedBranchesReduceToEmbedding) {
  RunConfig cfg = tiny(EncoderVariant::Mpnn);
  const GraphSlice s = test::tiny_slice(cfg, 4, 6);
  Model m = make_model(cfg);
  for (int k = 0; k < cfg.model.encoder.iterations; ++k) {
    zero_params(m, mpnn_update_params(k));
    zero_params(m, temporal_output_params(k));
  }
  const Encoded a = run_encode(m, s);
  const Encoded b = run_embed(m, s);
  EXPECT_LT(max_abs_diff(a.node, b.node), 1e-15);
  EXPECT_LT(max_abs_diff(a.edge, b.edge), 1e-15);
  EXPECT_LT(max_abs_diff(a.global, b.global), 1e-15);
}

TEST(Encoder, SinglePairNodeUpdateUsesItsEdge) {
  RunConfig cfg = tiny(EncoderVariant::Mpnn);
  const GraphSlice s = test::tiny_slice(cfg, 2, 7);
  const Model m = make_model(cfg);
  const GraphTopology topo = GraphTopology::of(s);
  nn::Tape tape(&m.params());
  const GraphEmbeddings in = embed_inputs(tape, s, topo, m.config().encoder);
  const GraphEmbeddings out = mpnn_step(tape, in, topo, m.config().encoder, 0);
  EXPECT_EQ(out.node.rows(), in.node.rows());
  EXPECT_EQ(out.edge.rows(), 2 * cfg.model.slice.history);
  EXPECT_TRUE(out.node.value().allFinite());
}

TEST(Encoder, DreherIgnoresCoordinates) {
  RunConfig cfg = tiny(EncoderVariant::Dreher);
  const GraphSlice a = test::tiny_slice(cfg, 4, 8);
  GraphSlice b = a;
  const int dv = vocab().node_feature_dim();
  b.node_features.rightCols(3) = test::random_mat(b.node_features.rows(), 3, 99);
  const Model m = make_model(cfg);
  const Encoded ea = run_encode(m, a);
  const Encoded eb = run_encode(m, b);
  EXPECT_EQ(ea.node, eb.node);
  EXPECT_EQ(ea.global, eb.global);
  EXPECT_EQ(dv - 3, vocab().num_object_classes());
  // The mpnn variant does see them.
  RunConfig mc = tiny(EncoderVariant::Mpnn);
  const Model mm = make_model(mc);
  EXPECT_GT(max_abs_diff(run_encode(mm, a).node, run_encode(mm, b).node), 1e-9);
}

TEST(Encoder, DeterministicForFixedSeed) {
  for (auto v : {EncoderVariant::Mpnn, EncoderVariant::Rgcn, EncoderVariant::Transformer}) {
    RunConfig cfg = tiny(v);
    const GraphSlice s = test::tiny_slice(cfg, 3, 9);
    const Encoded a = run_encode(make_model(cfg, 5), s);
    const Encoded b = run_encode(make_model(cfg, 5), s);
    EXPECT_EQ(a.node, b.node);
    EXPECT_EQ(a.edge, b.edge);
  }
}

void expect_equivariant(EncoderVariant variant, double tol) {
  RunConfig cfg = tiny(variant);
  const Model m = make_model(cfg);
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const GraphSlice s = test::tiny_slice(cfg, 4, 20 + static_cast<std::uint64_t>(trial));
    std::vector<int> perm = {0, 1, 2, 3};
    std::shuffle(perm.begin(), perm.end(), rng);
    const GraphSlice p = permute_nodes(s, perm);
    const Encoded a = run_encode(m, s);
    const Encoded b = run_encode(m, p);
    const int h = cfg.model.slice.history;
    for (int i = 0; i < 4; ++i) {
      EXPECT_LT(max_abs_diff(b.node.middleRows(i * h, h), a.node.middleRows(perm[i] * h, h)), tol);
    }
    for (int v = 0; v < 4; ++v) {
      for (int w = 0; w < 4; ++w) {
        if (v == w) continue;
        EXPECT_LT(max_abs_diff(b.edge.middleRows(edge_index(v, w, 4) * h, h),
                               a.edge.middleRows(edge_index(perm[v], perm[w], 4) * h, h)),
                  tol);
      }
    }
    EXPECT_LT(max_abs_diff(a.global, b.global), tol);
  }
}

TEST(Encoder, MpnnIsPermutationEquivariant) { expect_equivariant(EncoderVariant::Mpnn, 1e-10); }
TEST(Encoder, DreherIsPermutationEquivariant) { expect_equivariant(EncoderVariant::Dreher, 1e-10); }
TEST(Encoder, RgcnIsPermutationEquivariant) { expect_equivariant(EncoderVariant::Rgcn, 1e-10); }

TEST(Decoder, HeadShapes) {
  RunConfig cfg = tiny(EncoderVariant::Mpnn);
  const GraphSlice s = test::tiny_slice(cfg, 4, 10);
  const Model m = make_model(cfg);
  const PredictionBundle b = m.predict(s);
  const int a = vocab().num_actions();
  const int o = vocab().num_object_labels();
  const int p = cfg.model.slice.horizon;
  for (const HandOutput& h : b.hands) {
    EXPECT_EQ(h.next_action.cols(), a);
    EXPECT_EQ(h.next_object.cols(), o);
    EXPECT_EQ(h.future_action.cols(), a);
    EXPECT_EQ(h.future_object.cols(), o);
    EXPECT_EQ(h.horizon_action.rows(), p);
    EXPECT_EQ(h.horizon_action.cols(), a);
    EXPECT_EQ(h.horizon_object.rows(), p);
    EXPECT_EQ(h.horizon_object.cols(), o);
  }
  EXPECT_EQ(b.motion.rows(), 4 * p);
  EXPECT_EQ(b.motion.cols(), 3);
}

TEST(Decoder, DefaultGeometryHas44QueryTokens) {
  RunConfig cfg;
  cfg.model.encoder.d_mp = 8;
  cfg.finalize();
  EXPECT_EQ(cfg.model.decoder.n_past, 20);
  EXPECT_EQ(cfg.model.decoder.horizon, 10);
  EXPECT_EQ(2 * cfg.model.decoder.tokens_per_hand(), 44);
  const Demonstration d = random_demonstration(vocab(), 3, 120, 3, 10);
  const GraphSlice s = build_slice(d, 100, cfg.model.slice, vocab(), Standardizer{});
  const Model m = make_model(cfg);
  nn::Tape tape(&m.params());
  std::array<HandLabel, kNumHands> next{s.hands[0].next, s.hands[1].next};
  std::array<HandLabel, kNumHands> fut{s.hands[0].future, s.hands[1].future};
  const QueryTokens q = build_queries(tape, s, next, fut, m.config().decoder, m.label_dims());
  EXPECT_EQ(q.tokens.rows(), 44);
  EXPECT_EQ(q.positions.size(), 44u);
  // next at t+1, future at t+P
  EXPECT_EQ(q.positions[20], 101.0);
  EXPECT_EQ(q.positions[21], 110.0);
  EXPECT_EQ(m.predict(s).hands[0].horizon_action.rows(), 10);
}

TEST(Decoder, EmptyHistoryIsAllPadTokens) {
  RunConfig cfg = tiny(EncoderVariant::Mpnn);
  GraphSlice s = test::tiny_slice(cfg, 3, 11);
  const SemanticPair pad{vocab().pad_action(), vocab().pad_object(), 0};
  for (HandSlice& h : s.hands) std::fill(h.history.begin(), h.history.end(), pad);
  const Model m = make_model(cfg);
  nn::Tape tape(&m.params());
  std::array<HandLabel, kNumHands> next{s.hands[0].next, s.hands[1].next};
  const nn::Mat raw =
      embed_query_tokens(tape, s, next, next, m.config().decoder, m.label_dims()).value();
  const int per = cfg.model.decoder.tokens_per_hand();
  for (int h = 0; h < 2; ++h) {
    for (int i = 1; i < cfg.model.decoder.n_past; ++i) {
      EXPECT_EQ(raw.row(h * per + i), raw.row(h * per));
    }
  }
}

TEST(Decoder, ShiftedHistoryChangesOnlyRotation) {
  RunConfig cfg = tiny(EncoderVariant::Mpnn);
  const GraphSlice a = test::tiny_slice(cfg, 3, 12);
  GraphSlice b = a;
  for (HandSlice& h : b.hands) {
    for (SemanticPair& p : h.history) p.start_frame += 5;
  }
  const Model m = make_model(cfg);
  nn::Tape tape(&m.params());
  std::array<HandLabel, kNumHands> next{a.hands[0].next, a.hands[1].next};
  const auto& dc = m.config().decoder;
  EXPECT_EQ(embed_query_tokens(tape, a, next, next, dc, m.label_dims()).value(),
            embed_query_tokens(tape, b, next, next, dc, m.label_dims()).value());
  const auto pa = query_positions(a, dc);
  const auto pb = query_positions(b, dc);
  EXPECT_EQ(pb[0], pa[0] + 5);
  EXPECT_GT(max_abs_diff(build_queries(tape, a, next, next, dc, m.label_dims()).tokens.value(),
                         build_queries(tape, b, next, next, dc, m.label_dims()).tokens.value()),
            1e-9);
}

// With both hands' heads identical, swapping the two query blocks swaps
// the per-hand horizon logits.
TEST(Decoder, SwappingHandBlocksSwapsOutputs) {
  RunConfig cfg = tiny(EncoderVariant::Mpnn);
  const GraphSlice s = test::tiny_slice(cfg, 3, 13);
  Model m = make_model(cfg);
  for (const char* kind : {"_action", "_object"}) {
    for (const char* part : {".weight", ".bias"}) {
      m.params().at(std::string("decoder.action.left") + kind + part).value =
          m.params().at(std::string("decoder.action.right") + kind + part).value;
    }
  }
  nn::Tape tape(&m.params());
  const GraphEmbeddings e = m.encode(tape, s);
  const GraphTopology topo = GraphTopology::of(s);
  std::array<HandLabel, kNumHands> next{s.hands[0].next, s.hands[1].next};
  const auto& dc = m.config().decoder;
  const QueryTokens q = build_queries(tape, s, next, next, dc, m.label_dims());
  const int per = dc.tokens_per_hand();
  QueryTokens swapped;
  swapped.tokens = nn::concat_rows({nn::slice_rows(q.tokens, per, per), nn::slice_rows(q.tokens, 0, per)});
  swapped.positions.assign(q.positions.begin() + per, q.positions.end());
  swapped.positions.insert(swapped.positions.end(), q.positions.begin(), q.positions.begin() + per);
  const auto a = decode_action_object(tape, q, e.global, topo, dc, m.label_dims());
  const auto b = decode_action_object(tape, swapped, e.global, topo, dc, m.label_dims());
  for (int k = 0; k < 2; ++k) {
    EXPECT_LT(max_abs_diff(a[0][k].value(), b[1][k].value()), 1e-12);
    EXPECT_LT(max_abs_diff(a[1][k].value(), b[0][k].value()), 1e-12);
  }
}

TEST(Decoder, ZeroCrossAttentionIgnoresGlobal) {
  RunConfig cfg = tiny(EncoderVariant::Mpnn);
  const GraphSlice s = test::tiny_slice(cfg, 3, 14);
  Model m = make_model(cfg);
  for (const nn::Param& p : m.params().params()) {
    if (p.name.rfind("decoder.action.", 0) == 0 && p.name.find("cross") != std::string::npos &&
        p.name.find(".out.") != std::string::npos) {
      m.params().at(p.name).value.setZero();
    }
  }
  nn::Tape tape(&m.params());
  const GraphTopology topo = GraphTopology::of(s);
  std::array<HandLabel, kNumHands> next{s.hands[0].next, s.hands[1].next};
  const auto& dc = m.config().decoder;
  const QueryTokens q = build_queries(tape, s, next, next, dc, m.label_dims());
  const nn::Var g1 = tape.constant(test::random_mat(cfg.model.slice.history, dc.d_mp, 1));
  const nn::Var g2 = tape.constant(test::random_mat(cfg.model.slice.history, dc.d_mp, 2));
  const auto a = decode_action_object(tape, q, g1, topo, dc, m.label_dims());
  const auto b = decode_action_object(tape, q, g2, topo, dc, m.label_dims());
  EXPECT_EQ(a[0][0].value(), b[0][0].value());
  EXPECT_EQ(a[1][1].value(), b[1][1].value());
}

TEST(Decoder, TeacherForcingSwitchesStageTwoInput) {
  RunConfig cfg = tiny(EncoderVariant::Mpnn);
  GraphSlice s = test::tiny_slice(cfg, 3, 15);
  const Model m = make_model(cfg);
  auto future_logits = [&](const GraphSlice& x, bool tf) {
    nn::Tape tape(&m.params());
    return m.forward(tape, x, tf).hands[0].future_action.value();
  };
  const nn::Mat tf = future_logits(s, true);
  // Changing the ground-truth next pair moves teacher-forced outputs only.
  GraphSlice t = s;
  t.hands[0].next.action = (s.hands[0].next.action + 1) % vocab().num_actions();
  EXPECT_GT(max_abs_diff(future_logits(t, true), tf), 1e-12);
  EXPECT_EQ(future_logits(t, false), future_logits(s, false));
  s.has_targets = false;
  EXPECT_THROW((void)future_logits(s, true), ConfigError);
}

TEST(Model, ForwardIsBitIdentical) {
  RunConfig cfg = tiny(EncoderVariant::Mpnn);
  const GraphSlice s = test::tiny_slice(cfg, 4, 16);
  const Model m = make_model(cfg);
  const PredictionBundle a = m.predict(s);
  const PredictionBundle b = m.predict(s);
  EXPECT_EQ(a.motion, b.motion);
  EXPECT_EQ(a.hands[1].horizon_object, b.hands[1].horizon_object);
}

TEST(Model, MotionIsDestandardized) {
  RunConfig cfg = tiny(EncoderVariant::Mpnn);
  const GraphSlice s = test::tiny_slice(cfg, 3, 17);
  Model m = make_model(cfg);
  const nn::Mat base = m.predict(s).motion;
  Standardizer st;
  st.mean = {1.0, 2.0, 3.0};
  st.stddev = {2.0, 2.0, 2.0};
  m.set_stats(st);
  EXPECT_LT(max_abs_diff(m.predict(s).motion, st.destandardize(base)), 1e-12);
}

TEST(Model, SoftmaxRowsSumToOne) {
  const nn::Mat p = softmax_rows(test::random_mat(4, 7, 3) * 50.0);
  for (Eigen::Index r = 0; r < 4; ++r) EXPECT_NEAR(p.row(r).sum(), 1.0, 1e-12);
}

}  // namespace
}  // namespace taskgraph
