#include "helpers.hpp"

#include "taskgraph/errors.hpp"
#include "taskgraph/relations.hpp"
#include "taskgraph/standardize.hpp"

#include <set>

namespace taskgraph {
namespace {

using test::vocab;

std::vector<RelationBits> relations_of(const std::vector<Point>& now,
                                       const std::vector<Point>* prev = nullptr) {
  std::optional<std::span<const Point>> p;
  if (prev != nullptr) p = std::span<const Point>(*prev);
  return extract_relations(now, p, RelationThresholds{});
}

TEST(Relations, EdgeIndexRoundTrip) {
  for (int n = 2; n <= 6; ++n) {
    std::set<int> seen;
    for (int v = 0; v < n; ++v) {
      for (int w = 0; w < n; ++w) {
        if (v == w) continue;
        const int e = edge_index(v, w, n);
        EXPECT_EQ(edge_endpoints(e, n), std::make_pair(v, w));
        seen.insert(e);
      }
    }
    EXPECT_EQ(static_cast<int>(seen.size()), num_edges(n));
    EXPECT_EQ(*seen.rbegin(), num_edges(n) - 1);
  }
  EXPECT_THROW((void)edge_index(1, 1, 3), DimensionError);
}

TEST(Relations, RightOfAlongPositiveX) {
  const auto r = relations_of({Point(0, 0, 0), Point(0.1, 0, 0)});
  const RelationBits vw = r[static_cast<std::size_t>(edge_index(0, 1, 2))];
  const RelationBits wv = r[static_cast<std::size_t>(edge_index(1, 0, 2))];
  EXPECT_TRUE(has(vw, Relation::RightOf));
  EXPECT_FALSE(has(vw, Relation::LeftOf));
  EXPECT_TRUE(has(wv, Relation::LeftOf));
  EXPECT_FALSE(has(wv, Relation::RightOf));
  EXPECT_FALSE(has(vw, Relation::Contact));
  EXPECT_FALSE(has(wv, Relation::Contact));
}

TEST(Relations, CoincidentStaticPair) {
  const std::vector<Point> p = {Point(0.1, 0.2, 0.3), Point(0.1, 0.2, 0.3)};
  const auto r = relations_of(p, &p);
  for (RelationBits b : r) {
    EXPECT_EQ(b, bit(Relation::Contact) | bit(Relation::StableDistance));
  }
}

TEST(Relations, ShrinkingDistanceIsGettingClose) {
  const std::vector<Point> prev = {Point(0, 0, 0), Point(0.26, 0, 0)};
  const std::vector<Point> now = {Point(0, 0, 0), Point(0.20, 0, 0)};
  for (RelationBits b : relations_of(now, &prev)) {
    EXPECT_TRUE(has(b, Relation::GettingClose));
    EXPECT_FALSE(has(b, Relation::MovingApart));
    EXPECT_FALSE(has(b, Relation::StableDistance));
  }
  for (RelationBits b : relations_of(prev, &now)) EXPECT_TRUE(has(b, Relation::MovingApart));
}

TEST(Relations, MovingTogetherNeedsParallelMotion) {
  const std::vector<Point> prev = {Point(0, 0, 0), Point(0.2, 0, 0)};
  const std::vector<Point> now = {Point(0, 0.05, 0), Point(0.2, 0.05, 0)};
  for (RelationBits b : relations_of(now, &prev)) EXPECT_TRUE(has(b, Relation::MovingTogether));
  const std::vector<Point> apart = {Point(0, -0.05, 0), Point(0.2, 0.05, 0)};
  for (RelationBits b : relations_of(apart, &prev)) EXPECT_FALSE(has(b, Relation::MovingTogether));
}

// Antisymmetric pairs swap under edge reversal, the rest are symmetric, and
// exactly one distance-change bit is set.
TEST(Relations, ReversalTableOnRandomScenes) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  const RelationBits distance =
      bit(Relation::GettingClose) | bit(Relation::MovingApart) | bit(Relation::StableDistance);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 5;
    std::vector<Point> prev;
    std::vector<Point> now;
    for (int i = 0; i < n; ++i) {
      prev.emplace_back(u(rng), u(rng), u(rng));
      now.push_back(prev.back() + Point(u(rng), u(rng), u(rng)) * 0.1);
    }
    const auto r = relations_of(now, &prev);
    for (int v = 0; v < n; ++v) {
      for (int w = v + 1; w < n; ++w) {
        const RelationBits a = r[static_cast<std::size_t>(edge_index(v, w, n))];
        const RelationBits b = r[static_cast<std::size_t>(edge_index(w, v, n))];
        EXPECT_EQ(reverse_bits(a), b);
        EXPECT_EQ(has(a, Relation::LeftOf), has(b, Relation::RightOf));
        EXPECT_EQ(has(a, Relation::Above), has(b, Relation::Below));
        EXPECT_EQ(has(a, Relation::InFrontOf), has(b, Relation::Behind));
        for (Relation s : {Relation::Contact, Relation::GettingClose, Relation::MovingApart,
                           Relation::StableDistance, Relation::MovingTogether}) {
          EXPECT_EQ(has(a, s), has(b, s));
        }
        EXPECT_EQ(std::popcount(static_cast<unsigned>(a & distance)), 1);
      }
    }
  }
}

TEST(Relations, MirrorBitsIsInvolution) {
  for (unsigned b = 0; b < (1u << kNumRelations); ++b) {
    const auto bits = static_cast<RelationBits>(b);
    EXPECT_EQ(mirror_bits(mirror_bits(bits)), bits);
    EXPECT_EQ(reverse_bits(reverse_bits(bits)), bits);
  }
}

TEST(Relations, RejectsMismatchedPrevious) {
  const std::vector<Point> now = {Point(0, 0, 0), Point(1, 0, 0)};
  const std::vector<Point> prev = {Point(0, 0, 0)};
  EXPECT_THROW((void)relations_of(now, &prev), InputError);
}

TEST(Slice, HistoryIndicesFollowSampleRate) {
  SliceConfig cfg;
  cfg.history = 10;
  cfg.sample_rate = 10;
  const auto idx = history_indices(200, cfg);
  ASSERT_EQ(idx.size(), 10u);
  for (int h = 0; h < 10; ++h) EXPECT_EQ(idx[static_cast<std::size_t>(h)], 110 + 10 * h);
}

TEST(Slice, ShapesForFourNodes) {
  const Demonstration d = random_demonstration(vocab(), 4, 60, 3, 1);
  SliceConfig cfg;
  cfg.history = 4;
  cfg.sample_rate = 3;
  cfg.horizon = 5;
  cfg.n_past = 6;
  const GraphSlice s = build_slice(d, 20, cfg, vocab(), Standardizer{});
  EXPECT_EQ(s.num_edges(), 12);
  EXPECT_EQ(s.node_features.rows(), 4 * 4);
  EXPECT_EQ(s.node_features.cols(), vocab().node_feature_dim());
  EXPECT_EQ(s.edge_features.rows(), 12 * 4);
  EXPECT_EQ(s.edge_features.cols(), vocab().edge_feature_dim());
  EXPECT_EQ(s.global_features.cols(), vocab().global_feature_dim());
  EXPECT_EQ(s.target_coords.rows(), 4 * 5);
  EXPECT_EQ(s.history_frame_ids, (std::vector<int>{11, 14, 17, 20}));
  for (const HandSlice& h : s.hands) {
    EXPECT_EQ(h.history.size(), 6u);
    EXPECT_EQ(h.horizon_actions.size(), 5u);
  }
}

TEST(Slice, ConstantActionHasPaddedFuture) {
  const Vocab& v = vocab();
  const HandLabel stir{v.action("stir"), v.object_label("whisk")};
  const HandLabel hold{v.action("hold"), v.object_label("bowl")};
  const Demonstration d = test::linear_demo(40, stir, hold);
  SliceConfig cfg;
  cfg.history = 3;
  cfg.sample_rate = 2;
  cfg.horizon = 4;
  cfg.n_past = 3;
  const GraphSlice s = build_slice(d, 10, cfg, v, Standardizer{});
  EXPECT_EQ(s.hands[kRight].next, stir);
  EXPECT_EQ(s.hands[kLeft].next, hold);
  for (const HandSlice& h : s.hands) {
    EXPECT_EQ(h.future.action, v.pad_action());
    EXPECT_EQ(h.future.object, v.pad_object());
    // One real pair, left-padded with pad pairs at frame 0.
    EXPECT_EQ(h.history.back().start_frame, 0);
    EXPECT_EQ(h.history.front().action, v.pad_action());
  }
}

TEST(Slice, WindowOutOfRangeThrows) {
  const Demonstration d = random_demonstration(vocab(), 3, 20, 1, 1);
  SliceConfig cfg;
  cfg.history = 3;
  cfg.sample_rate = 2;
  cfg.horizon = 4;
  cfg.n_past = 2;
  EXPECT_THROW((void)build_slice(d, 3, cfg, vocab(), Standardizer{}), RangeError);
  EXPECT_THROW((void)build_slice(d, 16, cfg, vocab(), Standardizer{}), RangeError);
  EXPECT_NO_THROW((void)build_slice(d, 15, cfg, vocab(), Standardizer{}));
}

TEST(Slice, PermuteNodesMovesEdgesWithEndpoints) {
  const Demonstration d = random_demonstration(vocab(), 4, 30, 9, 1);
  SliceConfig cfg;
  cfg.history = 2;
  cfg.sample_rate = 2;
  cfg.horizon = 2;
  cfg.n_past = 2;
  const GraphSlice s = build_slice(d, 10, cfg, vocab(), Standardizer{});
  const std::vector<int> perm = {2, 0, 3, 1};
  const GraphSlice p = permute_nodes(s, perm);
  for (int v = 0; v < 4; ++v) {
    for (int w = 0; w < 4; ++w) {
      if (v == w) continue;
      EXPECT_EQ(p.edge_features.middleRows(edge_index(v, w, 4) * 2, 2),
                s.edge_features.middleRows(edge_index(perm[v], perm[w], 4) * 2, 2));
    }
    EXPECT_EQ(p.node_features.middleRows(v * 2, 2), s.node_features.middleRows(perm[v] * 2, 2));
  }
}

TEST(Standardize, IdentityParameters) {
  const Standardizer s;
  const Point p(0.3, -0.7, 1.1);
  EXPECT_EQ(s.apply(p), p);
}

TEST(Standardize, HandComputedValue) {
  Standardizer s;
  s.mean = {0.1, 0.1, 0.1};
  s.stddev = {0.2, 0.2, 0.2};
  EXPECT_NEAR(s.apply(Point(0.5, 0.5, 0.5)).x(), 2.0, 1e-12);
}

TEST(Standardize, RoundTrip) {
  Standardizer s;
  s.mean = {0.3, -0.2, 0.05};
  s.stddev = {0.07, 0.4, 1.3};
  const nn::Mat x = test::random_mat(50, 3, 5);
  EXPECT_LT(test::max_abs_diff(s.destandardize(s.standardize(x)), x), 1e-9);
}

TEST(Standardize, FitMatchesPooledMoments) {
  const Demonstration d = random_demonstration(vocab(), 3, 40, 2, 1);
  const Standardizer s = Standardizer::fit(std::span<const Demonstration>(&d, 1));
  for (int a = 0; a < 3; ++a) {
    double sum = 0.0;
    double sq = 0.0;
    int n = 0;
    for (const Frame& f : d.frames) {
      for (const Point& p : f.positions) {
        sum += p[a];
        sq += p[a] * p[a];
        ++n;
      }
    }
    const double mean = sum / n;
    EXPECT_NEAR(s.mean[static_cast<std::size_t>(a)], mean, 1e-12);
    EXPECT_NEAR(s.stddev[static_cast<std::size_t>(a)], std::sqrt(sq / n - mean * mean), 1e-9);
  }
}

}  // namespace
}  // namespace taskgraph
