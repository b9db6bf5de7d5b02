#include "taskgraph/inference/ensemble.hpp"

#include "taskgraph/errors.hpp"

#include <cmath>

namespace taskgraph {

std::vector<double> ensemble_weights(int count, double decay) {
  if (count < 1) throw ConfigError("ensemble needs at least one prediction");
  if (std::isnan(decay) || decay < 0) throw ConfigError("ensemble decay must be >= 0");
  std::vector<double> w(static_cast<std::size_t>(count), 0.0);
  if (std::isinf(decay)) {
    w[0] = 1.0;
    return w;
  }
  double sum = 0.0;
  for (int i = 0; i < count; ++i) {
    w[static_cast<std::size_t>(i)] = std::exp(-decay * i);
    sum += w[static_cast<std::size_t>(i)];
  }
  for (double& x : w) x /= sum;
  return w;
}

int argmax(const Eigen::VectorXd& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

EnsembleBuffer::EnsembleBuffer(int horizon, double decay) : horizon_(horizon), decay_(decay) {
  if (horizon < 1) throw ConfigError("ensemble horizon must be >= 1");
  (void)ensemble_weights(1, decay);
}

void EnsembleBuffer::update(StepPrediction prediction, int step) {
  if (step <= prediction.origin || step > prediction.origin + horizon_) {
    throw RangeError("prediction for step " + std::to_string(step) + " lies outside its window");
  }
  auto& list = steps_[step];
  if (!list.empty() && list.back().origin >= prediction.origin) {
    throw InternalError("ensemble predictions must arrive oldest first");
  }
  list.push_back(std::move(prediction));
}

void EnsembleBuffer::update(int origin, const PredictionBundle& bundle) {
  if (any_ && origin <= last_origin_) throw InternalError("ensemble origins must increase");
  const int n = static_cast<int>(bundle.motion.rows()) / horizon_;
  if (n * horizon_ != bundle.motion.rows()) throw DimensionError("motion rows are not N*P");
  std::array<nn::Mat, kNumHands> action_probs;
  std::array<nn::Mat, kNumHands> object_probs;
  for (int h = 0; h < kNumHands; ++h) {
    const auto hi = static_cast<std::size_t>(h);
    if (bundle.hands[hi].horizon_action.rows() != horizon_ ||
        bundle.hands[hi].horizon_object.rows() != horizon_) {
      throw DimensionError("bundle horizon does not match the ensemble");
    }
    action_probs[hi] = softmax_rows(bundle.hands[hi].horizon_action);
    object_probs[hi] = softmax_rows(bundle.hands[hi].horizon_object);
  }
  for (int p = 0; p < horizon_; ++p) {
    StepPrediction sp;
    sp.origin = origin;
    for (int h = 0; h < kNumHands; ++h) {
      const auto hi = static_cast<std::size_t>(h);
      sp.hands[hi].action = action_probs[hi].row(p).transpose();
      sp.hands[hi].object = object_probs[hi].row(p).transpose();
    }
    sp.coords.resize(n, 3);
    for (int node = 0; node < n; ++node) sp.coords.row(node) = bundle.motion.row(node * horizon_ + p);
    update(std::move(sp), origin + 1 + p);
  }
  last_origin_ = origin;
  any_ = true;
}

std::optional<FusedStep> EnsembleBuffer::query(int step) const {
  auto it = steps_.find(step);
  if (it == steps_.end() || it->second.empty()) return std::nullopt;
  const auto& list = it->second;
  FusedStep out;
  out.step = step;
  out.weights = ensemble_weights(static_cast<int>(list.size()), decay_);
  for (std::size_t i = 0; i < list.size(); ++i) {
    const double w = out.weights[i];
    const StepPrediction& sp = list[i];
    if (i == 0) {
      for (int h = 0; h < kNumHands; ++h) {
        const auto hi = static_cast<std::size_t>(h);
        out.hands[hi].action = Eigen::VectorXd::Zero(sp.hands[hi].action.size());
        out.hands[hi].object = Eigen::VectorXd::Zero(sp.hands[hi].object.size());
      }
      out.coords = nn::Mat::Zero(sp.coords.rows(), sp.coords.cols());
    }
    for (int h = 0; h < kNumHands; ++h) {
      const auto hi = static_cast<std::size_t>(h);
      out.hands[hi].action += w * sp.hands[hi].action;
      out.hands[hi].object += w * sp.hands[hi].object;
    }
    out.coords += w * sp.coords;
  }
  for (int h = 0; h < kNumHands; ++h) {
    const auto hi = static_cast<std::size_t>(h);
    out.pairs[hi] = HandLabel{argmax(out.hands[hi].action), argmax(out.hands[hi].object)};
  }
  return out;
}

void EnsembleBuffer::prune(int step) { steps_.erase(steps_.begin(), steps_.lower_bound(step)); }

std::size_t EnsembleBuffer::entries(int step) const {
  auto it = steps_.find(step);
  return it == steps_.end() ? 0 : it->second.size();
}

}  // namespace taskgraph
