#pragma once

#include "taskgraph/config.hpp"
#include "taskgraph/nn/grad_check.hpp"

#include <cstdint>

namespace taskgraph {

/// d_MP=8, H=3, S=1, P=2, n_past=3, K=2: small enough for finite differences.
[[nodiscard]] RunConfig tiny_run_config();

/// Random-walk positions and random label runs over `nodes` objects (two of
/// them hands), relations computed with `relation_step`.
[[nodiscard]] Demonstration random_demonstration(const Vocab& vocab, int nodes, int frames,
                                                 std::uint64_t seed, int relation_step = 1);

/// Finite-difference check of the full joint loss over a batch of slices
/// cut from random demonstrations with `nodes` objects.
[[nodiscard]] nn::GradCheckReport check_loss_gradients(const RunConfig& cfg, const Vocab& vocab,
                                                       int nodes,
                                                       const nn::GradCheckOptions& options);

}  // namespace taskgraph
