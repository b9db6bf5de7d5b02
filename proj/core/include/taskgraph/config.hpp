#pragma once

#include "taskgraph/dataset/augment.hpp"
#include "taskgraph/model.hpp"
#include "taskgraph/training/trainer.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace taskgraph {

/// Everything a run needs besides file paths. Keys are listed in
/// docs/config.md and by `config_keys()`.
struct RunConfig {
  DatasetConfig data;
  ModelConfig model;
  TrainConfig train;
  double ensemble_decay = 0.1;  // m in exp(-m * i)

  /// Pushes the shared geometry (slice sizes, d_MP) into every sub-config
  /// and validates the result.
  void finalize();
};

using ConfigMap = std::map<std::string, std::string>;

/// `key = value` lines; `#` starts a comment; blank lines ignored.
[[nodiscard]] ConfigMap parse_config_text(const std::string& text);
[[nodiscard]] ConfigMap load_config_file(const std::filesystem::path& path);

/// Applies entries in key order; unknown keys or unparsable values throw
/// ConfigError. Later maps win when applied in sequence.
void apply_config(RunConfig& cfg, const ConfigMap& entries);

/// Every key with its current value.
[[nodiscard]] ConfigMap to_config_map(const RunConfig& cfg);

[[nodiscard]] std::vector<std::string> config_keys();

}  // namespace taskgraph
