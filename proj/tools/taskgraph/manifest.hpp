#pragma once

#include "taskgraph/config.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace taskgraph::cli {

struct HashedFile {
  std::string path;
  std::string sha256;
};

/// Record of one CLI invocation, written before any computation.
struct RunManifest {
  std::string tool_version;
  std::string command;
  std::vector<std::string> argv;  // without the program name
  ConfigMap config;               // resolved run config
  std::vector<std::uint64_t> seeds;
  std::vector<HashedFile> inputs;
  std::vector<std::string> checkpoints_in;
  std::vector<std::string> checkpoints_out;
};

/// Lowercase hex SHA-256 of a file's bytes.
[[nodiscard]] std::string sha256_file(const std::filesystem::path& path);

[[nodiscard]] std::vector<HashedFile> hash_files(const std::vector<std::filesystem::path>& files);

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);
[[nodiscard]] RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace taskgraph::cli
