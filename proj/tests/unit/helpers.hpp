#pragma once

#include "taskgraph/demonstration.hpp"
#include "taskgraph/graph_slice.hpp"
#include "taskgraph/training/diagnostics.hpp"
#include "taskgraph/vocab.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace taskgraph::test {

inline const Vocab& vocab() {
  static const Vocab v = Vocab::builtin();
  return v;
}

/// Hands plus one object, positions moving linearly, constant labels.
inline Demonstration linear_demo(int frames, HandLabel right, HandLabel left) {
  const Vocab& v = vocab();
  Demonstration d;
  d.subject = "s1";
  d.task = v.task("cooking");
  d.roster = {v.right_hand_class(), v.left_hand_class(), v.object_class("bowl")};
  for (int f = 0; f < frames; ++f) {
    Frame fr;
    fr.frame_id = f;
    const double s = 0.01 * f;
    fr.positions = {Point(0.2 + s, 0.1, 0.1), Point(-0.2, 0.1 + s, 0.1), Point(0.0, 0.3, s)};
    fr.hands = {right, left};
    d.frames.push_back(fr);
  }
  recompute_relations(d, {}, 1);
  return d;
}

/// A random slice of the tiny diagnostic geometry.
inline GraphSlice tiny_slice(const RunConfig& cfg, int nodes, std::uint64_t seed) {
  const Demonstration d = random_demonstration(vocab(), nodes, 24, seed, 1);
  const int t = cfg.model.slice.warmup() + static_cast<int>(seed % 5);
  return build_slice(d, t, cfg.model.slice, vocab(), Standardizer{});
}

inline nn::Mat random_mat(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  nn::Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

inline double max_abs_diff(const nn::Mat& a, const nn::Mat& b) {
  EXPECT_EQ(a.rows(), b.rows());
  EXPECT_EQ(a.cols(), b.cols());
  if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

}  // namespace taskgraph::test
