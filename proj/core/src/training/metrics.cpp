#include "taskgraph/training/metrics.hpp"

#include "taskgraph/errors.hpp"

#include <cmath>

namespace taskgraph {

namespace {

void count_rows(const nn::Mat& logits, const std::vector<int>& targets, int pad, double& correct,
                double& total) {
  for (std::size_t r = 0; r < targets.size(); ++r) {
    if (targets[r] == pad) continue;
    total += 1.0;
    if (argmax(logits.row(static_cast<Eigen::Index>(r))) == targets[r]) correct += 1.0;
  }
}

}  // namespace

void MetricsAccumulator::add(const GraphSlice& slice, const PredictionBundle& pred,
                             const Vocab& vocab, const Standardizer& stats) {
  if (!slice.has_targets) throw ConfigError("evaluation needs slices with targets");
  const int pa = vocab.pad_action();
  const int po = vocab.pad_object();
  for (std::size_t h = 0; h < kNumHands; ++h) {
    const HandSlice& t = slice.hands[h];
    const HandOutput& p = pred.hands[h];
    auto& c = correct_[h];
    auto& n = total_[h];
    count_rows(p.next_action, {t.next.action}, pa, c[kObjNextAction], n[kObjNextAction]);
    count_rows(p.future_action, {t.future.action}, pa, c[kObjFutureAction], n[kObjFutureAction]);
    count_rows(p.horizon_action, t.horizon_actions, pa, c[kObjHorizonAction],
               n[kObjHorizonAction]);
    count_rows(p.next_object, {t.next.object}, po, c[kObjNextObject], n[kObjNextObject]);
    count_rows(p.future_object, {t.future.object}, po, c[kObjFutureObject], n[kObjFutureObject]);
    count_rows(p.horizon_object, t.horizon_objects, po, c[kObjHorizonObject],
               n[kObjHorizonObject]);
  }
  const nn::Mat truth = stats.destandardize(slice.target_coords);
  if (truth.rows() != pred.motion.rows() || truth.cols() != pred.motion.cols()) {
    throw DimensionError("motion prediction shape mismatch");
  }
  squared_error_ += (pred.motion - truth).squaredNorm();
  entries_ += static_cast<double>(truth.size());
  ++samples_;
}

MetricsReport MetricsAccumulator::report() const {
  MetricsReport r;
  r.samples = samples_;
  for (int o = 0; o < kNumObjectives; ++o) {
    const auto oi = static_cast<std::size_t>(o);
    double sum = 0.0;
    for (std::size_t h = 0; h < kNumHands; ++h) {
      r.hand_accuracy[h][oi] = total_[h][oi] > 0 ? correct_[h][oi] / total_[h][oi] : 0.0;
      sum += r.hand_accuracy[h][oi];
    }
    r.accuracy[oi] = sum / kNumHands;
  }
  r.rmse_m = entries_ > 0 ? std::sqrt(squared_error_ / entries_) : 0.0;
  return r;
}

MetricsReport evaluate(const Model& model, const std::vector<const GraphSlice*>& slices) {
  MetricsAccumulator acc;
  for (const GraphSlice* s : slices) {
    acc.add(*s, model.predict(*s), model.vocab(), model.stats());
  }
  return acc.report();
}

MetricsSummary summarize(const std::vector<MetricsReport>& runs) {
  MetricsSummary s;
  s.runs = runs.size();
  if (runs.empty()) return s;
  const double n = static_cast<double>(runs.size());
  auto stat = [&](auto get, double& mean, double& sd) {
    double sum = 0.0;
    for (const auto& r : runs) sum += get(r);
    mean = sum / n;
    double var = 0.0;
    for (const auto& r : runs) var += (get(r) - mean) * (get(r) - mean);
    sd = std::sqrt(var / n);
  };
  for (std::size_t o = 0; o < kNumObjectives; ++o) {
    for (std::size_t h = 0; h < kNumHands; ++h) {
      stat([&](const MetricsReport& r) { return r.hand_accuracy[h][o]; },
           s.mean.hand_accuracy[h][o], s.stddev.hand_accuracy[h][o]);
    }
    stat([&](const MetricsReport& r) { return r.accuracy[o]; }, s.mean.accuracy[o],
         s.stddev.accuracy[o]);
  }
  stat([](const MetricsReport& r) { return r.rmse_m; }, s.mean.rmse_m, s.stddev.rmse_m);
  for (const auto& r : runs) s.mean.samples += r.samples;
  return s;
}

}  // namespace taskgraph
