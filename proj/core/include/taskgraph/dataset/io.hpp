#pragma once

#include "taskgraph/demonstration.hpp"
#include "taskgraph/relations.hpp"
#include "taskgraph/vocab.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace taskgraph {

inline constexpr int kSchemaVersion = 1;

/// Reads a take file record by record. The header is parsed on
/// construction; frames are returned one at a time so the same reader
/// serves offline loading and streamed online inference.
class DemonstrationReader {
 public:
  DemonstrationReader(std::istream& in, const Vocab& vocab);

  /// Demonstration metadata (no frames).
  [[nodiscard]] const Demonstration& header() const { return header_; }

  /// Next frame record, or nullopt at end of stream.
  std::optional<Frame> next();

  [[nodiscard]] int line() const { return line_; }

 private:
  std::istream* in_;
  const Vocab* vocab_;
  Demonstration header_;
  int line_ = 0;
};

/// Parses a whole take. Relations missing from the file are recomputed with
/// `relation_step` (frames between the two positions compared).
[[nodiscard]] Demonstration read_demonstration(std::istream& in, const Vocab& vocab,
                                               const RelationThresholds& thresholds,
                                               int relation_step);
[[nodiscard]] Demonstration read_demonstration(const std::filesystem::path& path,
                                               const Vocab& vocab,
                                               const RelationThresholds& thresholds,
                                               int relation_step);

struct WriteOptions {
  bool relations = false;  // emit precomputed relation rows
};

void write_demonstration(std::ostream& out, const Demonstration& demo, const Vocab& vocab,
                         const WriteOptions& options = {});
void write_demonstration(const std::filesystem::path& path, const Demonstration& demo,
                         const Vocab& vocab, const WriteOptions& options = {});

/// `<task>_<subject>_<take>.jsonl`
[[nodiscard]] std::string take_file_name(const Demonstration& demo, const Vocab& vocab);

/// Writes `manifest.json` (vocabularies, axis convention, take list).
void write_manifest(const std::filesystem::path& dir, const Vocab& vocab,
                    const std::vector<std::string>& take_files);
[[nodiscard]] Vocab read_manifest_vocab(const std::filesystem::path& dir);

/// Every `*.jsonl` take of a dataset directory, sorted by file name. The
/// vocabulary comes from the directory manifest.
struct Dataset {
  Vocab vocab;
  std::vector<Demonstration> demos;
  std::vector<std::filesystem::path> files;
};
[[nodiscard]] Dataset load_dataset(const std::filesystem::path& dir,
                                   const RelationThresholds& thresholds, int relation_step);

/// Writes all takes plus the manifest; returns the take file paths.
std::vector<std::filesystem::path> save_dataset(const std::filesystem::path& dir,
                                                const std::vector<Demonstration>& demos,
                                                const Vocab& vocab,
                                                const WriteOptions& options = {});

}  // namespace taskgraph
