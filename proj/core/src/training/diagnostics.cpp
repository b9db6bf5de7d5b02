#include "taskgraph/training/diagnostics.hpp"

#include "taskgraph/errors.hpp"
#include "taskgraph/training/trainer.hpp"

#include <cmath>
#include <random>

namespace taskgraph {

RunConfig tiny_run_config() {
  RunConfig c;
  c.model.slice.history = 3;
  c.model.slice.sample_rate = 1;
  c.model.slice.horizon = 2;
  c.model.slice.n_past = 3;
  c.model.encoder.d_mp = 8;
  c.model.encoder.iterations = 2;
  c.model.encoder.transformer_layers = 2;
  c.model.encoder.transformer_heads = 2;
  c.data.relation_step = 1;
  c.train.batch_size = 2;
  c.finalize();
  return c;
}

Demonstration random_demonstration(const Vocab& vocab, int nodes, int frames, std::uint64_t seed,
                                   int relation_step) {
  if (nodes < 2 || frames < 2) throw ConfigError("random demonstration needs >= 2 nodes and frames");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> step(0.0, 0.01);
  std::uniform_real_distribution<double> place(-0.3, 0.3);
  Demonstration d;
  d.subject = "random";
  d.task = static_cast<int>(rng() % static_cast<std::uint64_t>(vocab.num_tasks()));
  d.roster = {vocab.right_hand_class(), vocab.left_hand_class()};
  std::vector<int> others;
  for (int c = 0; c < vocab.num_object_classes(); ++c) {
    if (c != vocab.right_hand_class() && c != vocab.left_hand_class()) others.push_back(c);
  }
  if (others.empty()) throw ConfigError("vocabulary has no object classes besides the hands");
  while (d.num_nodes() < nodes) d.roster.push_back(others[rng() % others.size()]);

  std::vector<Point> pos;
  for (int n = 0; n < nodes; ++n) pos.emplace_back(place(rng), place(rng), std::abs(place(rng)));
  std::array<HandLabel, kNumHands> label{};
  std::array<int, kNumHands> left_in_run{};
  auto draw = [&] {
    int a = 0;
    do {
      a = static_cast<int>(rng() % static_cast<std::uint64_t>(vocab.num_actions()));
    } while (a == vocab.pad_action());
    const int o = static_cast<int>(rng() % static_cast<std::uint64_t>(vocab.num_object_labels() - 1));
    return HandLabel{a, o};
  };
  for (int f = 0; f < frames; ++f) {
    Frame fr;
    fr.frame_id = f;
    for (Point& p : pos) p += Point(step(rng), step(rng), step(rng));
    fr.positions = pos;
    for (std::size_t h = 0; h < kNumHands; ++h) {
      if (left_in_run[h]-- <= 0) {
        label[h] = draw();
        left_in_run[h] = static_cast<int>(rng() % 3) + 1;
      }
    }
    fr.hands = label;
    d.frames.push_back(std::move(fr));
  }
  recompute_relations(d, RelationThresholds{}, relation_step);
  return d;
}

nn::GradCheckReport check_loss_gradients(const RunConfig& cfg, const Vocab& vocab, int nodes,
                                         const nn::GradCheckOptions& options) {
  const SliceConfig& sc = cfg.model.slice;
  const int frames = sc.warmup() + sc.horizon + 6;
  std::vector<GraphSlice> slices;
  for (int i = 0; i < std::max(1, cfg.train.batch_size); ++i) {
    const Demonstration d = random_demonstration(vocab, nodes, frames, options.seed + 1 + i,
                                                 cfg.data.effective_relation_step());
    const Standardizer stats = Standardizer::fit(std::span<const Demonstration>(&d, 1));
    slices.push_back(build_slice(d, sc.warmup() + 2 + i % 3, sc, vocab, stats));
  }
  std::vector<const GraphSlice*> batch;
  for (const GraphSlice& s : slices) batch.push_back(&s);

  Model model(cfg.model, vocab, Standardizer{});
  model.init(options.seed);
  const ClassWeights weights = class_weights(batch, vocab);
  const nn::LossWithGrad loss = [&](const nn::ParamStore& params, nn::GradBuffer* grads) {
    if (&params != &model.params()) throw InternalError("grad check must perturb the model store");
    return batch_loss(model, batch, weights, cfg.train.beta_mse, cfg.train.teacher_forcing, grads)
        .total;
  };
  return nn::grad_check(loss, model.params(), options);
}

}  // namespace taskgraph
