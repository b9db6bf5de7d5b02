#include "taskgraph/graph_slice.hpp"

#include "taskgraph/errors.hpp"

#include <string>

namespace taskgraph {

void SliceConfig::validate() const {
  if (history < 1 || sample_rate < 1 || horizon < 1 || n_past < 0) {
    throw ConfigError("slice config requires H >= 1, S >= 1, P >= 1, n_past >= 0");
  }
}

std::vector<int> history_indices(int t, const SliceConfig& cfg) {
  std::vector<int> out(static_cast<std::size_t>(cfg.history));
  for (int h = 0; h < cfg.history; ++h) {
    out[static_cast<std::size_t>(h)] = t - (cfg.history - 1 - h) * cfg.sample_rate;
  }
  return out;
}

std::vector<SemanticPair> semantic_pairs(const Demonstration& demo, int hand, int t) {
  std::vector<SemanticPair> out;
  for (int i = 0; i <= t && i < demo.num_frames(); ++i) {
    const Frame& f = demo.frames[static_cast<std::size_t>(i)];
    const HandLabel& l = f.hands[static_cast<std::size_t>(hand)];
    if (out.empty() || out.back().action != l.action || out.back().object != l.object) {
      out.push_back(SemanticPair{l.action, l.object, f.frame_id});
    }
  }
  return out;
}

namespace {

GraphSlice build_common(const Demonstration& demo, int t, const SliceConfig& cfg,
                        const Vocab& vocab, const Standardizer& stats) {
  cfg.validate();
  if (t - cfg.warmup() < 0 || t >= demo.num_frames()) {
    throw RangeError("slice at frame index " + std::to_string(t) + " has no full history");
  }
  if (!relations_present(demo)) throw InputError("build_slice requires frame relations");

  const int n = demo.num_nodes();
  const int m = num_edges(n);
  const int hlen = cfg.history;
  const int classes = vocab.num_object_classes();

  GraphSlice s;
  s.num_nodes = n;
  s.history = hlen;
  s.horizon = cfg.horizon;
  s.task = demo.task;
  s.roster = demo.roster;
  s.frame_id = demo.frames[static_cast<std::size_t>(t)].frame_id;

  const std::vector<int> idx = history_indices(t, cfg);
  s.node_features = nn::Mat::Zero(n * hlen, vocab.node_feature_dim());
  s.edge_features = nn::Mat::Zero(m * hlen, vocab.edge_feature_dim());
  s.global_features = nn::Mat::Zero(1, vocab.global_feature_dim());
  s.global_features(0, demo.task) = 1.0;

  for (int h = 0; h < hlen; ++h) {
    const Frame& f = demo.frames[static_cast<std::size_t>(idx[static_cast<std::size_t>(h)])];
    s.history_frame_ids.push_back(f.frame_id);
    for (int node = 0; node < n; ++node) {
      const int row = node * hlen + h;
      s.node_features(row, demo.roster[static_cast<std::size_t>(node)]) = 1.0;
      const Point p = stats.apply(f.positions[static_cast<std::size_t>(node)]);
      for (int a = 0; a < 3; ++a) s.node_features(row, classes + a) = p[a];
    }
    for (int e = 0; e < m; ++e) {
      const RelationBits bits = f.relations[static_cast<std::size_t>(e)];
      for (int r = 0; r < vocab.num_relations(); ++r) {
        if ((bits >> r) & 1u) s.edge_features(e * hlen + h, r) = 1.0;
      }
    }
  }

  const SemanticPair pad{vocab.pad_action(), vocab.pad_object(), 0};
  for (int hand = 0; hand < kNumHands; ++hand) {
    HandSlice& hs = s.hands[static_cast<std::size_t>(hand)];
    hs.current = demo.frames[static_cast<std::size_t>(t)].hands[static_cast<std::size_t>(hand)];
    std::vector<SemanticPair> pairs = semantic_pairs(demo, hand, t);
    const auto keep = std::min<std::size_t>(pairs.size(), static_cast<std::size_t>(cfg.n_past));
    hs.history.assign(static_cast<std::size_t>(cfg.n_past) - keep, pad);
    hs.history.insert(hs.history.end(), pairs.end() - static_cast<std::ptrdiff_t>(keep), pairs.end());
  }
  return s;
}

}  // namespace

GraphSlice build_inputs(const Demonstration& demo, int t, const SliceConfig& cfg,
                        const Vocab& vocab, const Standardizer& stats) {
  return build_common(demo, t, cfg, vocab, stats);
}

GraphSlice build_slice(const Demonstration& demo, int t, const SliceConfig& cfg,
                       const Vocab& vocab, const Standardizer& stats) {
  cfg.validate();
  if (t + cfg.horizon >= demo.num_frames()) {
    throw RangeError("slice at frame index " + std::to_string(t) + " has no full horizon");
  }
  GraphSlice s = build_common(demo, t, cfg, vocab, stats);
  const int n = demo.num_nodes();
  const int p_len = cfg.horizon;
  s.has_targets = true;
  s.target_coords.resize(n * p_len, 3);
  for (int p = 0; p < p_len; ++p) {
    const Frame& f = demo.frames[static_cast<std::size_t>(t + 1 + p)];
    for (int node = 0; node < n; ++node) {
      s.target_coords.row(node * p_len + p) =
          stats.apply(f.positions[static_cast<std::size_t>(node)]).transpose();
    }
  }
  for (int hand = 0; hand < kNumHands; ++hand) {
    const auto hi = static_cast<std::size_t>(hand);
    HandSlice& hs = s.hands[hi];
    const HandLabel next = demo.frames[static_cast<std::size_t>(t + 1)].hands[hi];
    hs.next = next;
    hs.future = HandLabel{vocab.pad_action(), vocab.pad_object()};
    for (int i = t + 2; i < demo.num_frames(); ++i) {
      const HandLabel l = demo.frames[static_cast<std::size_t>(i)].hands[hi];
      if (!(l == next)) {
        hs.future = l;
        break;
      }
    }
    for (int p = 0; p < p_len; ++p) {
      const HandLabel l = demo.frames[static_cast<std::size_t>(t + 1 + p)].hands[hi];
      hs.horizon_actions.push_back(l.action);
      hs.horizon_objects.push_back(l.object);
    }
  }
  return s;
}

std::vector<GraphSlice> build_all_slices(const Demonstration& demo, const SliceConfig& cfg,
                                         const Vocab& vocab, const Standardizer& stats,
                                         int stride) {
  if (stride < 1) throw ConfigError("slice stride must be >= 1");
  std::vector<GraphSlice> out;
  for (int t = cfg.warmup(); t + cfg.horizon < demo.num_frames(); t += stride) {
    out.push_back(build_slice(demo, t, cfg, vocab, stats));
  }
  return out;
}

GraphSlice permute_nodes(const GraphSlice& slice, const std::vector<int>& perm) {
  const int n = slice.num_nodes;
  if (static_cast<int>(perm.size()) != n) throw DimensionError("permutation size != nodes");
  const int hlen = slice.history;
  GraphSlice out = slice;
  for (int i = 0; i < n; ++i) {
    const int src = perm[static_cast<std::size_t>(i)];
    out.roster[static_cast<std::size_t>(i)] = slice.roster[static_cast<std::size_t>(src)];
    out.node_features.middleRows(i * hlen, hlen) = slice.node_features.middleRows(src * hlen, hlen);
    if (slice.has_targets) {
      out.target_coords.middleRows(i * slice.horizon, slice.horizon) =
          slice.target_coords.middleRows(src * slice.horizon, slice.horizon);
    }
  }
  for (int v = 0; v < n; ++v) {
    for (int w = 0; w < n; ++w) {
      if (v == w) continue;
      const int dst = edge_index(v, w, n);
      const int src = edge_index(perm[static_cast<std::size_t>(v)], perm[static_cast<std::size_t>(w)], n);
      out.edge_features.middleRows(dst * hlen, hlen) = slice.edge_features.middleRows(src * hlen, hlen);
    }
  }
  return out;
}

}  // namespace taskgraph
