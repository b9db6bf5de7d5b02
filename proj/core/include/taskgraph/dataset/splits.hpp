#pragma once

#include "taskgraph/demonstration.hpp"
#include "taskgraph/standardize.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace taskgraph {

/// Leave-one-subject-out fold over indices into the demonstration list.
struct Fold {
  std::string test_subject;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  Standardizer stats;  // fit on `train` only
};

/// One fold per subject, in order of first appearance.
[[nodiscard]] std::vector<Fold> split_loso(const std::vector<Demonstration>& demos);

/// Index batches of a shuffled permutation of [0, count); the shuffle
/// depends only on (seed, epoch) and the last partial batch is kept.
[[nodiscard]] std::vector<std::vector<std::size_t>> batches(std::size_t count, int batch_size,
                                                            std::uint64_t seed, int epoch);

}  // namespace taskgraph
