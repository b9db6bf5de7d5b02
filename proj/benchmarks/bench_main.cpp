#include "taskgraph/config.hpp"
#include "taskgraph/model.hpp"
#include "taskgraph/nn/ops.hpp"
#include "taskgraph/relations.hpp"
#include "taskgraph/training/diagnostics.hpp"
#include "taskgraph/training/loss.hpp"
#include "taskgraph/training/trainer.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace tg = taskgraph;

namespace {

const tg::Vocab& vocab() {
  static const tg::Vocab v = tg::Vocab::builtin();
  return v;
}

void BM_ExtractRelations(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  std::vector<tg::Point> prev(static_cast<std::size_t>(n));
  std::vector<tg::Point> now(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    prev[static_cast<std::size_t>(i)] = tg::Point(u(rng), u(rng), u(rng));
    now[static_cast<std::size_t>(i)] = prev[static_cast<std::size_t>(i)] + tg::Point(0.01, 0.0, 0.0);
  }
  for (auto _ : state) {
    auto bits = tg::extract_relations(now, std::span<const tg::Point>(prev), {});
    benchmark::DoNotOptimize(bits.data());
  }
  state.SetItemsProcessed(state.iterations() * n * (n - 1));
}
BENCHMARK(BM_ExtractRelations)->Arg(4)->Arg(8)->Arg(16);

// Forward and backward through one attention core, d = 64, 4 heads.
void BM_Attention(benchmark::State& state) {
  const int tokens = static_cast<int>(state.range(0));
  const tg::nn::Mat q = tg::nn::Mat::Random(tokens, 64);
  const tg::nn::Mat k = tg::nn::Mat::Random(tokens, 64);
  const tg::nn::Mat v = tg::nn::Mat::Random(tokens, 64);
  for (auto _ : state) {
    tg::nn::Tape tape;
    tg::nn::Var qv = tape.constant(q);
    tg::nn::Var kv = tape.constant(k);
    tg::nn::Var vv = tape.constant(v);
    tg::nn::Var out = tg::nn::attention(qv, kv, vv, {{0, tokens}}, {{0, tokens}}, 4);
    tape.backward(tg::nn::squared_error_sum(out, tg::nn::Mat::Zero(tokens, 64), 1.0));
    benchmark::DoNotOptimize(out.value().data());
  }
}
BENCHMARK(BM_Attention)->Arg(10)->Arg(60)->Arg(200);

tg::RunConfig default_config(const char* variant) {
  tg::RunConfig cfg;
  tg::apply_config(cfg, {{"encoder.variant", variant}});
  cfg.finalize();
  return cfg;
}

// Inference on a full-size slice (d = 64, H = 10, 6 objects).
void BM_Predict(benchmark::State& state, const char* variant) {
  const tg::RunConfig cfg = default_config(variant);
  const tg::Demonstration d = tg::random_demonstration(vocab(), 6, 130, 3, 10);
  const tg::GraphSlice s =
      tg::build_slice(d, cfg.model.slice.warmup() + 5, cfg.model.slice, vocab(), tg::Standardizer{});
  tg::Model model(cfg.model, vocab(), tg::Standardizer{});
  model.init(1);
  for (auto _ : state) {
    auto b = model.predict(s);
    benchmark::DoNotOptimize(b.motion.data());
  }
}
BENCHMARK_CAPTURE(BM_Predict, mpnn, "mpnn")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Predict, none, "none")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Predict, dreher, "dreher")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Predict, transformer, "transformer")->Unit(benchmark::kMillisecond);

// Loss and gradients of one 8-sample batch.
void BM_TrainBatch(benchmark::State& state) {
  const tg::RunConfig cfg = default_config("mpnn");
  const tg::Demonstration d = tg::random_demonstration(vocab(), 6, 130, 4, 10);
  std::vector<tg::GraphSlice> slices;
  for (int i = 0; i < 8; ++i) {
    slices.push_back(tg::build_slice(d, cfg.model.slice.warmup() + 3 * i, cfg.model.slice, vocab(),
                                     tg::Standardizer{}));
  }
  std::vector<const tg::GraphSlice*> batch;
  for (const auto& s : slices) batch.push_back(&s);
  const tg::ClassWeights w = tg::class_weights(batch, vocab());
  tg::Model model(cfg.model, vocab(), tg::Standardizer{});
  model.init(1);
  for (auto _ : state) {
    tg::nn::GradBuffer grads(model.params().size());
    auto loss = tg::batch_loss(model, batch, w, cfg.train.beta_mse, true, &grads);
    benchmark::DoNotOptimize(loss.total);
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_TrainBatch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
