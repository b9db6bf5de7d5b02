#include "taskgraph/dataset/augment.hpp"

#include "taskgraph/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace taskgraph {

void DatasetConfig::validate() const {
  slice.validate();
  thresholds.validate();
  if (smoothing_window < 1 || smoothing_window % 2 == 0) {
    throw ConfigError("smoothing window must be odd and >= 1");
  }
  if (resample_min < 0.5 || resample_max > 2.0 || resample_min > resample_max) {
    throw ConfigError("resample range must lie within [0.5, 2.0]");
  }
  if (resample_copies < 0) throw ConfigError("resample copies must be >= 0");
  if (stride < 1) throw ConfigError("slice stride must be >= 1");
  if (relation_step < 0) throw ConfigError("relation step must be >= 0");
}

Demonstration smooth(const Demonstration& demo, int window, const RelationThresholds& thresholds,
                     int relation_step) {
  if (window < 1 || window % 2 == 0) throw ConfigError("smoothing window must be odd and >= 1");
  Demonstration out = demo;
  const int half = window / 2;
  const int frames = demo.num_frames();
  for (int i = 0; i < frames; ++i) {
    const int lo = std::max(0, i - half);
    const int hi = std::min(frames - 1, i + half);
    for (int n = 0; n < demo.num_nodes(); ++n) {
      Point sum = Point::Zero();
      for (int j = lo; j <= hi; ++j) sum += demo.frames[static_cast<std::size_t>(j)].positions[static_cast<std::size_t>(n)];
      out.frames[static_cast<std::size_t>(i)].positions[static_cast<std::size_t>(n)] =
          sum / static_cast<double>(hi - lo + 1);
    }
  }
  recompute_relations(out, thresholds, relation_step);
  return out;
}

Demonstration augment_mirror(const Demonstration& demo, const Vocab& vocab) {
  Demonstration out = demo;
  for (int& c : out.roster) c = vocab.mirrored_class(c);
  for (Frame& f : out.frames) {
    for (Point& p : f.positions) p.x() = -p.x();
    for (RelationBits& b : f.relations) b = mirror_bits(b);
    std::swap(f.hands[kRight], f.hands[kLeft]);
    for (HandLabel& h : f.hands) h.object = vocab.mirrored_object_label(h.object);
  }
  return out;
}

std::optional<Demonstration> augment_resample(const Demonstration& demo, double rate,
                                              const RelationThresholds& thresholds,
                                              int relation_step, int min_frames) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("resample rate must be positive");
  const int frames = demo.num_frames();
  if (frames == 0) return std::nullopt;
  const int length = static_cast<int>(std::lround((frames - 1) * rate)) + 1;
  if (length < min_frames) return std::nullopt;

  Demonstration out = demo;
  out.frames.assign(static_cast<std::size_t>(length), Frame{});
  for (int i = 0; i < length; ++i) {
    const double u = std::min(static_cast<double>(frames - 1), i / rate);
    const int a = static_cast<int>(std::floor(u));
    const int b = std::min(frames - 1, a + 1);
    const double w = u - a;
    const Frame& fa = demo.frames[static_cast<std::size_t>(a)];
    const Frame& fb = demo.frames[static_cast<std::size_t>(b)];
    Frame& f = out.frames[static_cast<std::size_t>(i)];
    f.frame_id = i;
    f.positions.resize(fa.positions.size());
    for (std::size_t n = 0; n < fa.positions.size(); ++n) {
      f.positions[n] = w == 0.0 ? fa.positions[n] : (1.0 - w) * fa.positions[n] + w * fb.positions[n];
    }
    const int nearest = std::min(frames - 1, static_cast<int>(std::lround(u)));
    f.hands = demo.frames[static_cast<std::size_t>(nearest)].hands;
  }
  recompute_relations(out, thresholds, relation_step);
  return out;
}

std::vector<Demonstration> preprocess(const std::vector<Demonstration>& demos,
                                      const DatasetConfig& cfg) {
  cfg.validate();
  std::vector<Demonstration> out;
  out.reserve(demos.size());
  for (const Demonstration& d : demos) {
    out.push_back(smooth(d, cfg.smoothing_window, cfg.thresholds, cfg.effective_relation_step()));
  }
  return out;
}

std::vector<Demonstration> augment_training_set(const std::vector<Demonstration>& demos,
                                                const Vocab& vocab, const DatasetConfig& cfg,
                                                AugmentReport* report) {
  std::vector<Demonstration> base = preprocess(demos, cfg);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> rate(cfg.resample_min, cfg.resample_max);
  const int step = cfg.effective_relation_step();

  std::vector<Demonstration> out;
  for (const Demonstration& d : base) {
    out.push_back(d);
    if (cfg.mirror) out.push_back(augment_mirror(d, vocab));
    for (int c = 0; c < cfg.resample_copies; ++c) {
      const double r = cfg.resample_min == cfg.resample_max ? cfg.resample_min : rate(rng);
      auto res = augment_resample(d, r, cfg.thresholds, step, cfg.min_frames());
      if (!res) {
        if (report != nullptr) ++report->skipped_resamples;
        continue;
      }
      out.push_back(*res);
      if (cfg.mirror) out.push_back(augment_mirror(*res, vocab));
    }
  }
  return out;
}

}  // namespace taskgraph
