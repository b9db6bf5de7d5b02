#include "taskgraph/training/loss.hpp"

#include "taskgraph/errors.hpp"

namespace taskgraph {

namespace {

struct HandTargets {
  std::array<std::vector<int>, kNumCeTerms> targets;
};

HandTargets targets_of(const HandSlice& h) {
  HandTargets t;
  t.targets[kNextAction] = {h.next.action};
  t.targets[kNextObject] = {h.next.object};
  t.targets[kFutureAction] = {h.future.action};
  t.targets[kFutureObject] = {h.future.object};
  t.targets[kHorizonAction] = h.horizon_actions;
  t.targets[kHorizonObject] = h.horizon_objects;
  return t;
}

bool is_action_term(int term) {
  return term == kNextAction || term == kFutureAction || term == kHorizonAction;
}

const std::vector<double>& weights_for(int term, const ClassWeights& w) {
  return is_action_term(term) ? w.actions : w.objects;
}

}  // namespace

std::vector<double> inverse_frequency(const std::vector<double>& counts, int pad) {
  double total = 0.0;
  int present = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (static_cast<int>(c) == pad || counts[c] <= 0) continue;
    total += counts[c];
    ++present;
  }
  std::vector<double> w(counts.size(), 0.0);
  if (present == 0) return w;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (static_cast<int>(c) == pad || counts[c] <= 0) continue;
    w[c] = total / (present * counts[c]);
  }
  return w;
}

ClassWeights class_weights(const std::vector<const GraphSlice*>& slices, const Vocab& vocab) {
  if (slices.empty()) throw ConfigError("class weights need a non-empty training split");
  std::vector<double> actions(static_cast<std::size_t>(vocab.num_actions()), 0.0);
  std::vector<double> objects(static_cast<std::size_t>(vocab.num_object_labels()), 0.0);
  for (const GraphSlice* s : slices) {
    if (!s->has_targets) throw ConfigError("class weights need slices with targets");
    for (const HandSlice& h : s->hands) {
      const HandTargets t = targets_of(h);
      for (int term = 0; term < kNumCeTerms; ++term) {
        auto& counts = is_action_term(term) ? actions : objects;
        for (int c : t.targets[static_cast<std::size_t>(term)]) {
          counts.at(static_cast<std::size_t>(c)) += 1.0;
        }
      }
    }
  }
  return {inverse_frequency(actions, vocab.pad_action()),
          inverse_frequency(objects, vocab.pad_object())};
}

LossNormalizer loss_normalizer(const std::vector<const GraphSlice*>& slices,
                               const ClassWeights& weights) {
  LossNormalizer n;
  for (const GraphSlice* s : slices) {
    for (int h = 0; h < kNumHands; ++h) {
      const HandTargets t = targets_of(s->hands[static_cast<std::size_t>(h)]);
      for (int term = 0; term < kNumCeTerms; ++term) {
        const auto& w = weights_for(term, weights);
        for (int c : t.targets[static_cast<std::size_t>(term)]) {
          if (w.at(static_cast<std::size_t>(c)) > 0) {
            n.rows[static_cast<std::size_t>(h)][static_cast<std::size_t>(term)] += 1.0;
          }
        }
      }
    }
    n.motion_entries += static_cast<double>(s->target_coords.size());
  }
  return n;
}

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
  for (std::size_t i = 0; i < ce.size(); ++i) ce[i] += o.ce[i];
  mse += o.mse;
  total += o.total;
  return *this;
}

nn::Var joint_loss(const Prediction& pred, const GraphSlice& slice, const ClassWeights& weights,
                   const LossNormalizer& norm, double beta_mse, LossBreakdown* breakdown) {
  if (!slice.has_targets) throw ConfigError("loss needs a slice with targets");
  if (!(beta_mse > 0)) throw ConfigError("beta_mse must be positive");
  std::vector<nn::Var> terms;
  LossBreakdown local;
  for (int h = 0; h < kNumHands; ++h) {
    const auto hi = static_cast<std::size_t>(h);
    const HandPrediction& hp = pred.hands[hi];
    const std::array<nn::Var, kNumCeTerms> logits = {hp.next_action,   hp.next_object,
                                                     hp.future_action, hp.future_object,
                                                     hp.horizon_action, hp.horizon_object};
    const HandTargets t = targets_of(slice.hands[hi]);
    for (int term = 0; term < kNumCeTerms; ++term) {
      const auto ti = static_cast<std::size_t>(term);
      const double rows = norm.rows[hi][ti];
      if (rows <= 0) continue;
      const auto& w = weights_for(term, weights);
      std::vector<double> row_w;
      bool any = false;
      for (int c : t.targets[ti]) {
        row_w.push_back(w.at(static_cast<std::size_t>(c)));
        any = any || row_w.back() > 0;
      }
      if (!any) continue;
      nn::Var ce = nn::weighted_cross_entropy_sum(logits[ti], t.targets[ti], std::move(row_w),
                                                  1.0 / rows);
      local.ce[ti] += ce.scalar();
      terms.push_back(ce);
    }
  }
  if (norm.motion_entries <= 0) throw InternalError("loss normalizer has no motion entries");
  nn::Var mse = nn::squared_error_sum(pred.motion, slice.target_coords, 1.0 / norm.motion_entries);
  local.mse = mse.scalar();
  terms.push_back(nn::scale(mse, beta_mse));

  nn::Var total = nn::sum_scalars(terms);
  local.total = total.scalar();
  if (breakdown != nullptr) *breakdown += local;
  return total;
}

}  // namespace taskgraph
