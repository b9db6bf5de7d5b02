#include "taskgraph/inference/rollout.hpp"

#include "taskgraph/errors.hpp"

namespace taskgraph {

RolloutResult rollout(const Predictor& predictor, const Demonstration& demo,
                      const SliceConfig& slice, const Vocab& vocab, const Standardizer& stats,
                      const RolloutConfig& cfg) {
  slice.validate();
  if (!relations_present(demo)) throw InputError("rollout needs relations on every frame");
  RolloutResult out;
  const int warmup = slice.warmup();
  if (demo.num_frames() <= warmup) {
    out.warning = "stream has " + std::to_string(demo.num_frames()) +
                  " frames, fewer than the warm-up of " + std::to_string(warmup + 1);
    return out;
  }
  EnsembleBuffer buffer(slice.horizon, cfg.decay);
  for (int t = warmup; t < demo.num_frames(); ++t) {
    buffer.update(t, predictor(build_inputs(demo, t, slice, vocab, stats)));
    buffer.prune(t + 1);
    RolloutStep step;
    step.frame = t + 1;
    step.fused = *buffer.query(t + 1);
    if (t + 1 < demo.num_frames()) {
      const Frame& f = demo.frames[static_cast<std::size_t>(t + 1)];
      step.frame_id = f.frame_id;
      step.truth = f.hands;
    } else {
      step.frame_id = -1;
    }
    out.steps.push_back(std::move(step));
  }
  return out;
}

RolloutResult rollout(const Model& model, const Demonstration& demo, const RolloutConfig& cfg) {
  const Predictor predictor = [&model](const GraphSlice& s) { return model.predict(s); };
  return rollout(predictor, demo, model.config().slice, model.vocab(), model.stats(), cfg);
}

std::array<double, kNumHands> rollout_accuracy(const RolloutResult& result) {
  std::array<double, kNumHands> acc{};
  int counted = 0;
  for (const RolloutStep& s : result.steps) {
    if (!s.truth) continue;
    ++counted;
    for (int h = 0; h < kNumHands; ++h) {
      const auto hi = static_cast<std::size_t>(h);
      if (s.fused.pairs[hi] == (*s.truth)[hi]) acc[hi] += 1.0;
    }
  }
  if (counted > 0) {
    for (double& a : acc) a /= counted;
  }
  return acc;
}

}  // namespace taskgraph
