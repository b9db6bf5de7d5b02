#include "taskgraph/standardize.hpp"

#include "taskgraph/errors.hpp"

#include <cmath>

namespace taskgraph {

Standardizer Standardizer::fit(std::span<const Demonstration> demos) {
  std::array<double, 3> sum{};
  std::array<double, 3> sq{};
  double count = 0.0;
  for (const Demonstration& d : demos) {
    for (const Frame& f : d.frames) {
      for (const Point& p : f.positions) {
        for (int a = 0; a < 3; ++a) sum[static_cast<std::size_t>(a)] += p[a];
        count += 1.0;
      }
    }
  }
  if (count == 0.0) throw ConfigError("cannot fit standardization on an empty split");
  Standardizer s;
  for (std::size_t a = 0; a < 3; ++a) s.mean[a] = sum[a] / count;
  for (const Demonstration& d : demos) {
    for (const Frame& f : d.frames) {
      for (const Point& p : f.positions) {
        for (std::size_t a = 0; a < 3; ++a) {
          const double dv = p[static_cast<Eigen::Index>(a)] - s.mean[a];
          sq[a] += dv * dv;
        }
      }
    }
  }
  for (std::size_t a = 0; a < 3; ++a) s.stddev[a] = std::max(std::sqrt(sq[a] / count), kStdFloor);
  return s;
}

void Standardizer::validate() const {
  for (std::size_t a = 0; a < 3; ++a) {
    if (!std::isfinite(mean[a]) || !std::isfinite(stddev[a]) || !(stddev[a] > 0.0)) {
      throw ConfigError("standardization statistics must be finite with positive stddev");
    }
  }
}

Point Standardizer::apply(const Point& p) const {
  Point out;
  for (int a = 0; a < 3; ++a) {
    const auto i = static_cast<std::size_t>(a);
    out[a] = (p[a] - mean[i]) / std::max(stddev[i], kStdFloor);
  }
  return out;
}

Point Standardizer::invert(const Point& p) const {
  Point out;
  for (int a = 0; a < 3; ++a) {
    const auto i = static_cast<std::size_t>(a);
    out[a] = p[a] * std::max(stddev[i], kStdFloor) + mean[i];
  }
  return out;
}

nn::Mat Standardizer::standardize(const nn::Mat& coords) const {
  validate();
  if (coords.cols() != 3) throw DimensionError("standardize expects [R x 3] coordinates");
  nn::Mat out(coords.rows(), 3);
  for (Eigen::Index r = 0; r < coords.rows(); ++r) {
    out.row(r) = apply(coords.row(r).transpose()).transpose();
  }
  return out;
}

nn::Mat Standardizer::destandardize(const nn::Mat& coords) const {
  validate();
  if (coords.cols() != 3) throw DimensionError("destandardize expects [R x 3] coordinates");
  nn::Mat out(coords.rows(), 3);
  for (Eigen::Index r = 0; r < coords.rows(); ++r) {
    out.row(r) = invert(coords.row(r).transpose()).transpose();
  }
  return out;
}

}  // namespace taskgraph
