#pragma once

#include "taskgraph/demonstration.hpp"
#include "taskgraph/nn/tape.hpp"

#include <array>
#include <span>

namespace taskgraph {

/// Per-axis z-score parameters for coordinates.
struct Standardizer {
  static constexpr double kStdFloor = 1e-6;

  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> stddev{1.0, 1.0, 1.0};

  /// Fits over every position of every frame of `demos`.
  [[nodiscard]] static Standardizer fit(std::span<const Demonstration> demos);

  void validate() const;

  [[nodiscard]] Point apply(const Point& p) const;
  [[nodiscard]] Point invert(const Point& p) const;

  /// Row-wise over an [R x 3] coordinate matrix.
  [[nodiscard]] nn::Mat standardize(const nn::Mat& coords) const;
  [[nodiscard]] nn::Mat destandardize(const nn::Mat& coords) const;
};

}  // namespace taskgraph
