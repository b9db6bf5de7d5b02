#pragma once

#include "taskgraph/graph_slice.hpp"
#include "taskgraph/model.hpp"

#include <array>
#include <string_view>
#include <vector>

namespace taskgraph {

/// Report columns, in table order.
enum Objective : int {
  kObjNextAction = 0,
  kObjFutureAction,
  kObjHorizonAction,
  kObjNextObject,
  kObjFutureObject,
  kObjHorizonObject,
  kNumObjectives,
};

inline constexpr std::array<std::string_view, kNumObjectives> kObjectiveNames = {
    "a_next", "a_future", "a_horizon", "o_next", "o_future", "o_horizon"};

struct MetricsReport {
  std::array<std::array<double, kNumObjectives>, kNumHands> hand_accuracy{};
  std::array<double, kNumObjectives> accuracy{};  // mean of the two hands
  double rmse_m = 0.0;                            // destandardized, meters
  std::size_t samples = 0;
};

/// Running counts; argmax with ties to the lowest index, `pad` targets skipped.
class MetricsAccumulator {
 public:
  void add(const GraphSlice& slice, const PredictionBundle& pred, const Vocab& vocab,
           const Standardizer& stats);
  [[nodiscard]] MetricsReport report() const;

 private:
  std::array<std::array<double, kNumObjectives>, kNumHands> correct_{};
  std::array<std::array<double, kNumObjectives>, kNumHands> total_{};
  double squared_error_ = 0.0;
  double entries_ = 0.0;
  std::size_t samples_ = 0;
};

/// Runs the model (no teacher forcing) over every slice.
[[nodiscard]] MetricsReport evaluate(const Model& model,
                                     const std::vector<const GraphSlice*>& slices);

struct MetricsSummary {
  MetricsReport mean;
  MetricsReport stddev;  // population std over runs
  std::size_t runs = 0;
};

[[nodiscard]] MetricsSummary summarize(const std::vector<MetricsReport>& runs);

}  // namespace taskgraph
