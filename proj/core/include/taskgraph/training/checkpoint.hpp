#pragma once

#include "taskgraph/config.hpp"
#include "taskgraph/model.hpp"
#include "taskgraph/nn/adamw.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace taskgraph {

/// Binary checkpoint: magic, version, a JSON header (config, vocabulary,
/// coordinate stats, parameter table, metadata) and raw float64 payloads.
/// The layout is documented in docs/checkpoint.md.
struct Checkpoint {
  RunConfig config;
  Model model;
  std::optional<nn::OptimizerState> optimizer;
  std::map<std::string, std::string> meta;
};

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config,
                     const Model& model, const nn::OptimizerState* optimizer = nullptr,
                     const std::map<std::string, std::string>& meta = {});

[[nodiscard]] Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace taskgraph
