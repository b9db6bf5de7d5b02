#include "taskgraph/training/checkpoint.hpp"

#include "taskgraph/errors.hpp"

#include <json.hpp>

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>

namespace taskgraph {

using nlohmann::json;

namespace {

constexpr std::array<char, 8> kMagic = {'T', 'G', 'R', 'A', 'P', 'H', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are stored little-endian");

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw InputError("truncated checkpoint");
  return v;
}

void put_mat(std::ostream& out, const nn::Mat& m) {
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
}

void get_mat(std::istream& in, nn::Mat& m) {
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
  if (!in) throw InputError("truncated checkpoint payload");
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config,
                     const Model& model, const nn::OptimizerState* optimizer,
                     const std::map<std::string, std::string>& meta) {
  const Vocab& v = model.vocab();
  json header;
  header["config"] = to_config_map(config);
  header["vocab"] = {{"object_classes", v.object_classes()},
                     {"actions", v.action_labels()},
                     {"tasks", v.task_labels()},
                     {"relations", v.relation_labels()}};
  header["stats"] = {{"mean", model.stats().mean}, {"stddev", model.stats().stddev}};
  json params = json::array();
  for (const nn::Param& p : model.params().params()) {
    params.push_back({{"name", p.name},
                      {"rows", p.value.rows()},
                      {"cols", p.value.cols()},
                      {"trainable", p.trainable}});
  }
  header["params"] = std::move(params);
  if (optimizer != nullptr) {
    header["optimizer"] = {{"step", optimizer->step},
                           {"lr", optimizer->config.lr},
                           {"beta1", optimizer->config.beta1},
                           {"beta2", optimizer->config.beta2},
                           {"eps", optimizer->config.eps},
                           {"weight_decay", optimizer->config.weight_decay}};
  }
  header["meta"] = meta;
  const std::string text = header.dump();

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw InputError("cannot write checkpoint " + path.string());
    out.write(kMagic.data(), kMagic.size());
    put(out, kVersion);
    put(out, static_cast<std::uint64_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const nn::Param& p : model.params().params()) put_mat(out, p.value);
    if (optimizer != nullptr) {
      for (std::size_t i = 0; i < model.params().size(); ++i) {
        if (!model.params().at(i).trainable) continue;
        put_mat(out, optimizer->first_moment.at(i));
        put_mat(out, optimizer->second_moment.at(i));
      }
    }
    if (!out) throw InputError("checkpoint write failed: " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw InputError(path.string() + " is not a checkpoint");
  if (get<std::uint32_t>(in) != kVersion) throw InputError("unsupported checkpoint version");
  const auto length = get<std::uint64_t>(in);
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw InputError("truncated checkpoint header");

  Checkpoint ck;
  try {
    const json header = json::parse(text);
    apply_config(ck.config, header.at("config").get<ConfigMap>());
    ck.config.finalize();
    const json& jv = header.at("vocab");
    Vocab vocab(jv.at("object_classes").get<std::vector<std::string>>(),
                jv.at("actions").get<std::vector<std::string>>(),
                jv.at("tasks").get<std::vector<std::string>>(),
                jv.at("relations").get<std::vector<std::string>>());
    Standardizer stats;
    stats.mean = header.at("stats").at("mean").get<std::array<double, 3>>();
    stats.stddev = header.at("stats").at("stddev").get<std::array<double, 3>>();
    ck.model = Model(ck.config.model, std::move(vocab), stats);
    ck.model.init(0);

    nn::ParamStore& store = ck.model.params();
    const json& table = header.at("params");
    if (table.size() != store.size()) {
      throw InputError("checkpoint parameter count does not match its config");
    }
    for (std::size_t i = 0; i < store.size(); ++i) {
      nn::Param& p = store.at(i);
      const json& e = table[i];
      if (e.at("name").get<std::string>() != p.name || e.at("rows").get<Eigen::Index>() != p.value.rows() ||
          e.at("cols").get<Eigen::Index>() != p.value.cols()) {
        throw InputError("checkpoint parameter '" + e.at("name").get<std::string>() +
                         "' does not match the architecture");
      }
      p.trainable = e.at("trainable").get<bool>();
      get_mat(in, p.value);
    }
    if (auto it = header.find("optimizer"); it != header.end()) {
      nn::AdamWConfig oc{it->at("lr").get<double>(), it->at("beta1").get<double>(),
                         it->at("beta2").get<double>(), it->at("eps").get<double>(),
                         it->at("weight_decay").get<double>()};
      nn::OptimizerState st = nn::OptimizerState::create(store, oc);
      st.step = it->at("step").get<std::int64_t>();
      for (std::size_t i = 0; i < store.size(); ++i) {
        if (!store.at(i).trainable) continue;
        get_mat(in, st.first_moment[i]);
        get_mat(in, st.second_moment[i]);
      }
      ck.optimizer = std::move(st);
    }
    ck.meta = header.value("meta", std::map<std::string, std::string>{});
  } catch (const json::exception& e) {
    throw InputError("corrupt checkpoint header: " + std::string(e.what()));
  }
  return ck;
}

}  // namespace taskgraph
