#include "manifest.hpp"

#include "taskgraph/errors.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

namespace taskgraph::cli {

using nlohmann::json;

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot hash " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw InternalError("sha256 init failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

std::vector<HashedFile> hash_files(const std::vector<std::filesystem::path>& files) {
  std::vector<HashedFile> out;
  for (const auto& f : files) out.push_back({f.string(), sha256_file(f)});
  return out;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  json inputs = json::array();
  for (const HashedFile& f : m.inputs) inputs.push_back({{"path", f.path}, {"sha256", f.sha256}});
  const json j = {{"tool", "taskgraph"},
                  {"tool_version", m.tool_version},
                  {"command", m.command},
                  {"argv", m.argv},
                  {"config", m.config},
                  {"seeds", m.seeds},
                  {"inputs", inputs},
                  {"checkpoints_in", m.checkpoints_in},
                  {"checkpoints_out", m.checkpoints_out}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write manifest " + path.string());
  out << j.dump(2) << '\n';
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest " + path.string());
  try {
    const json j = json::parse(in);
    RunManifest m;
    m.tool_version = j.at("tool_version").get<std::string>();
    m.command = j.at("command").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    m.config = j.at("config").get<ConfigMap>();
    m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    for (const json& f : j.at("inputs")) {
      m.inputs.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>()});
    }
    m.checkpoints_in = j.at("checkpoints_in").get<std::vector<std::string>>();
    m.checkpoints_out = j.at("checkpoints_out").get<std::vector<std::string>>();
    return m;
  } catch (const json::exception& e) {
    throw InputError("malformed manifest " + path.string() + ": " + e.what());
  }
}

}  // namespace taskgraph::cli
