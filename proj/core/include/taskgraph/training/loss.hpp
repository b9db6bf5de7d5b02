#pragma once

#include "taskgraph/decoder.hpp"
#include "taskgraph/graph_slice.hpp"
#include "taskgraph/vocab.hpp"

#include <array>
#include <string_view>
#include <vector>

namespace taskgraph {

/// Inverse-frequency class weights; absent classes and `pad` get 0.
struct ClassWeights {
  std::vector<double> actions;
  std::vector<double> objects;
};

/// Counts every action/object target of the slices (next, future and
/// horizon labels of both hands); w_c = total / (C_present * count_c).
[[nodiscard]] ClassWeights class_weights(const std::vector<const GraphSlice*>& slices,
                                         const Vocab& vocab);

/// w_c = total / (C_present * count_c) over raw counts; pad index forced to 0.
[[nodiscard]] std::vector<double> inverse_frequency(const std::vector<double>& counts, int pad);

enum LossTerm : int {
  kNextAction = 0,
  kNextObject,
  kFutureAction,
  kFutureObject,
  kHorizonAction,
  kHorizonObject,
  kNumCeTerms,
};

inline constexpr std::array<std::string_view, kNumCeTerms> kLossTermNames = {
    "ce_next_action", "ce_next_object", "ce_future_action",
    "ce_future_object", "ce_horizon_action", "ce_horizon_object"};

/// Batch-level denominators: the number of unmasked rows per (hand, term)
/// and the number of coordinate entries. Every CE term is a mean over its
/// unmasked rows; the horizon terms therefore average over P as well.
struct LossNormalizer {
  std::array<std::array<double, kNumCeTerms>, kNumHands> rows{};
  double motion_entries = 0.0;
};

[[nodiscard]] LossNormalizer loss_normalizer(const std::vector<const GraphSlice*>& slices,
                                             const ClassWeights& weights);

struct LossBreakdown {
  std::array<double, kNumCeTerms> ce{};  // summed over hands
  double mse = 0.0;                      // standardized units, unscaled
  double total = 0.0;                    // sum(ce) + beta * mse

  LossBreakdown& operator+=(const LossBreakdown& o);
};

/// This sample's share of the batch loss. Summing over the batch (with the
/// normalizer computed over the same batch) gives the batch joint loss.
nn::Var joint_loss(const Prediction& pred, const GraphSlice& slice, const ClassWeights& weights,
                   const LossNormalizer& norm, double beta_mse, LossBreakdown* breakdown);

}  // namespace taskgraph
