#include "taskgraph/dataset/io.hpp"

#include "taskgraph/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

namespace taskgraph {

using nlohmann::json;

namespace {

std::string where(int line) { return "line " + std::to_string(line) + ": "; }

HandLabel parse_hand(const json& j, const Vocab& vocab, int line) {
  if (!j.is_array() || j.size() != 2) {
    throw InputError(where(line) + "hand label must be [action, object]");
  }
  try {
    return {vocab.action(j[0].get<std::string>()), vocab.object_label(j[1].get<std::string>())};
  } catch (const InputError& e) {
    throw InputError(where(line) + e.what());
  }
}

Frame parse_frame(const json& j, const Vocab& vocab, int nodes, int line) {
  Frame f;
  f.frame_id = j.at("frame_id").get<int>();
  const json& pos = j.at("positions");
  if (!pos.is_array() || static_cast<int>(pos.size()) != nodes) {
    throw InputError(where(line) + "expected " + std::to_string(nodes) + " positions");
  }
  f.positions.reserve(pos.size());
  for (const json& p : pos) {
    if (!p.is_array() || p.size() != 3) throw InputError(where(line) + "position must be [x,y,z]");
    f.positions.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
  }
  if (auto it = j.find("relations"); it != j.end() && !it->is_null()) {
    if (!it->is_array() || static_cast<int>(it->size()) != num_edges(nodes)) {
      throw InputError(where(line) + "relations must have one row per directed edge");
    }
    for (const json& row : *it) {
      if (!row.is_array() || row.size() != kRelationNames.size()) {
        throw InputError(where(line) + "relation row must have " +
                         std::to_string(kRelationNames.size()) + " entries");
      }
      RelationBits bits = 0;
      for (std::size_t r = 0; r < row.size(); ++r) {
        const int v = row[r].get<int>();
        if (v != 0 && v != 1) throw InputError(where(line) + "relation entries must be 0 or 1");
        if (v == 1) bits = static_cast<RelationBits>(bits | (1u << r));
      }
      f.relations.push_back(bits);
    }
  }
  f.hands[kRight] = parse_hand(j.at("right"), vocab, line);
  f.hands[kLeft] = parse_hand(j.at("left"), vocab, line);
  return f;
}

json hand_json(const HandLabel& h, const Vocab& vocab) {
  return json::array({vocab.action_name(h.action), vocab.object_label_name(h.object)});
}

}  // namespace

DemonstrationReader::DemonstrationReader(std::istream& in, const Vocab& vocab)
    : in_(&in), vocab_(&vocab) {
  std::string text;
  while (text.empty() && std::getline(*in_, text)) ++line_;
  if (text.empty()) throw InputError("empty demonstration stream");
  json j;
  try {
    j = json::parse(text);
    if (j.at("type").get<std::string>() != "header") {
      throw InputError(where(line_) + "first record must be the header");
    }
    if (j.at("schema").get<int>() != kSchemaVersion) {
      throw InputError(where(line_) + "unsupported schema version");
    }
    header_.subject = j.at("subject").get<std::string>();
    header_.task = vocab.task(j.at("task").get<std::string>());
    header_.take = j.value("take", 0);
    header_.frame_rate = j.value("frame_rate", 30.0);
    for (const json& name : j.at("roster")) {
      header_.roster.push_back(vocab.object_class(name.get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw InputError(where(line_) + e.what());
  }
}

std::optional<Frame> DemonstrationReader::next() {
  std::string text;
  while (std::getline(*in_, text)) {
    ++line_;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(text);
      if (j.value("type", std::string("frame")) != "frame") {
        throw InputError(where(line_) + "unexpected record type");
      }
      return parse_frame(j, *vocab_, header_.num_nodes(), line_);
    } catch (const json::exception& e) {
      throw InputError(where(line_) + e.what());
    }
  }
  return std::nullopt;
}

Demonstration read_demonstration(std::istream& in, const Vocab& vocab,
                                 const RelationThresholds& thresholds, int relation_step) {
  DemonstrationReader reader(in, vocab);
  Demonstration demo = reader.header();
  while (auto f = reader.next()) demo.frames.push_back(std::move(*f));
  validate(demo, vocab);
  if (!relations_present(demo)) recompute_relations(demo, thresholds, relation_step);
  return demo;
}

Demonstration read_demonstration(const std::filesystem::path& path, const Vocab& vocab,
                                 const RelationThresholds& thresholds, int relation_step) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return read_demonstration(in, vocab, thresholds, relation_step);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_demonstration(std::ostream& out, const Demonstration& demo, const Vocab& vocab,
                         const WriteOptions& options) {
  json header = {{"schema", kSchemaVersion},
                 {"type", "header"},
                 {"subject", demo.subject},
                 {"task", vocab.task_name(demo.task)},
                 {"take", demo.take},
                 {"frame_rate", demo.frame_rate}};
  json roster = json::array();
  for (int c : demo.roster) roster.push_back(vocab.object_class_name(c));
  header["roster"] = std::move(roster);
  out << header.dump() << '\n';

  for (const Frame& f : demo.frames) {
    json pos = json::array();
    for (const Point& p : f.positions) pos.push_back({p.x(), p.y(), p.z()});
    json rec = {{"type", "frame"}, {"frame_id", f.frame_id}, {"positions", std::move(pos)}};
    if (options.relations && !f.relations.empty()) {
      json rel = json::array();
      for (RelationBits bits : f.relations) {
        json row = json::array();
        for (int r = 0; r < kNumRelations; ++r) row.push_back((bits >> r) & 1);
        rel.push_back(std::move(row));
      }
      rec["relations"] = std::move(rel);
    }
    rec["right"] = hand_json(f.hands[kRight], vocab);
    rec["left"] = hand_json(f.hands[kLeft], vocab);
    out << rec.dump() << '\n';
  }
}

void write_demonstration(const std::filesystem::path& path, const Demonstration& demo,
                         const Vocab& vocab, const WriteOptions& options) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  write_demonstration(out, demo, vocab, options);
  if (!out) throw InputError("write failed: " + path.string());
}

std::string take_file_name(const Demonstration& demo, const Vocab& vocab) {
  return vocab.task_name(demo.task) + "_" + demo.subject + "_" + std::to_string(demo.take) +
         ".jsonl";
}

void write_manifest(const std::filesystem::path& dir, const Vocab& vocab,
                    const std::vector<std::string>& take_files) {
  json m = {{"schema", kSchemaVersion},
            {"units", "meters"},
            {"axes", {{"x", "right"}, {"y", "away from the demonstrator"}, {"z", "up"}}},
            {"object_classes", vocab.object_classes()},
            {"actions", vocab.action_labels()},
            {"tasks", vocab.task_labels()},
            {"relations", vocab.relation_labels()},
            {"takes", take_files}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw InputError("cannot write manifest in " + dir.string());
  out << m.dump(2) << '\n';
}

Vocab read_manifest_vocab(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw InputError("missing manifest.json in " + dir.string());
  try {
    const json m = json::parse(in);
    if (m.at("schema").get<int>() != kSchemaVersion) {
      throw InputError("unsupported manifest schema");
    }
    return Vocab(m.at("object_classes").get<std::vector<std::string>>(),
                 m.at("actions").get<std::vector<std::string>>(),
                 m.at("tasks").get<std::vector<std::string>>(),
                 m.at("relations").get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw InputError("manifest.json: " + std::string(e.what()));
  }
}

Dataset load_dataset(const std::filesystem::path& dir, const RelationThresholds& thresholds,
                     int relation_step) {
  Dataset ds;
  ds.vocab = read_manifest_vocab(dir);
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      ds.files.push_back(entry.path());
    }
  }
  std::ranges::sort(ds.files);
  if (ds.files.empty()) throw InputError("no .jsonl takes in " + dir.string());
  for (const auto& f : ds.files) {
    ds.demos.push_back(read_demonstration(f, ds.vocab, thresholds, relation_step));
  }
  return ds;
}

std::vector<std::filesystem::path> save_dataset(const std::filesystem::path& dir,
                                                const std::vector<Demonstration>& demos,
                                                const Vocab& vocab, const WriteOptions& options) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  std::vector<std::string> names;
  for (const Demonstration& d : demos) {
    names.push_back(take_file_name(d, vocab));
    paths.push_back(dir / names.back());
    write_demonstration(paths.back(), d, vocab, options);
  }
  write_manifest(dir, vocab, names);
  return paths;
}

}  // namespace taskgraph
