#include "taskgraph/config.hpp"

#include "taskgraph/errors.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace taskgraph {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("config '" + key + "': expected a boolean, got '" + text + "'");
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct Binding {
  std::function<void(RunConfig&, const std::string& key, const std::string& value)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Member>
Binding int_binding(Member member) {
  return {[member](RunConfig& c, const std::string& k, const std::string& v) {
            member(c) = parse_number<int>(k, v);
          },
          [member](const RunConfig& c) {
            RunConfig copy = c;
            return std::to_string(member(copy));
          }};
}

template <typename Member>
Binding double_binding(Member member) {
  return {[member](RunConfig& c, const std::string& k, const std::string& v) {
            member(c) = parse_number<double>(k, v);
          },
          [member](const RunConfig& c) {
            RunConfig copy = c;
            return format_double(member(copy));
          }};
}

template <typename Member>
Binding bool_binding(Member member) {
  return {[member](RunConfig& c, const std::string& k, const std::string& v) {
            member(c) = parse_bool(k, v);
          },
          [member](const RunConfig& c) {
            RunConfig copy = c;
            return std::string(member(copy) ? "true" : "false");
          }};
}

const std::map<std::string, Binding>& bindings() {
  static const std::map<std::string, Binding> table = [] {
    std::map<std::string, Binding> t;
    t["slice.history"] = int_binding([](RunConfig& c) -> int& { return c.model.slice.history; });
    t["slice.sample_rate"] =
        int_binding([](RunConfig& c) -> int& { return c.model.slice.sample_rate; });
    t["slice.horizon"] = int_binding([](RunConfig& c) -> int& { return c.model.slice.horizon; });
    t["slice.n_past"] = int_binding([](RunConfig& c) -> int& { return c.model.slice.n_past; });

    t["data.smoothing_window"] =
        int_binding([](RunConfig& c) -> int& { return c.data.smoothing_window; });
    t["data.resample_min"] = double_binding([](RunConfig& c) -> double& { return c.data.resample_min; });
    t["data.resample_max"] = double_binding([](RunConfig& c) -> double& { return c.data.resample_max; });
    t["data.resample_copies"] =
        int_binding([](RunConfig& c) -> int& { return c.data.resample_copies; });
    t["data.mirror"] = bool_binding([](RunConfig& c) -> bool& { return c.data.mirror; });
    t["data.stride"] = int_binding([](RunConfig& c) -> int& { return c.data.stride; });
    t["data.relation_step"] = int_binding([](RunConfig& c) -> int& { return c.data.relation_step; });
    t["data.seed"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                        c.data.seed = parse_number<std::uint64_t>(k, v);
                      },
                      [](const RunConfig& c) { return std::to_string(c.data.seed); }};

    t["relations.axis"] = double_binding([](RunConfig& c) -> double& { return c.data.thresholds.axis; });
    t["relations.contact"] =
        double_binding([](RunConfig& c) -> double& { return c.data.thresholds.contact; });
    t["relations.velocity"] =
        double_binding([](RunConfig& c) -> double& { return c.data.thresholds.velocity; });
    t["relations.motion"] =
        double_binding([](RunConfig& c) -> double& { return c.data.thresholds.motion; });
    t["relations.direction_cosine"] =
        double_binding([](RunConfig& c) -> double& { return c.data.thresholds.direction_cosine; });

    t["encoder.variant"] = {[](RunConfig& c, const std::string&, const std::string& v) {
                              c.model.encoder.variant = parse_encoder_variant(v);
                            },
                            [](const RunConfig& c) {
                              return std::string(to_string(c.model.encoder.variant));
                            }};
    t["encoder.d_mp"] = int_binding([](RunConfig& c) -> int& { return c.model.encoder.d_mp; });
    t["encoder.iterations"] =
        int_binding([](RunConfig& c) -> int& { return c.model.encoder.iterations; });
    t["encoder.temporal_heads"] =
        int_binding([](RunConfig& c) -> int& { return c.model.encoder.temporal_heads; });
    t["encoder.slope"] = double_binding([](RunConfig& c) -> double& { return c.model.encoder.slope; });
    t["encoder.rope_base"] =
        double_binding([](RunConfig& c) -> double& { return c.model.encoder.rope_base; });
    t["encoder.ffn_multiplier"] =
        int_binding([](RunConfig& c) -> int& { return c.model.encoder.ffn_multiplier; });
    t["encoder.dreher_iterations"] =
        int_binding([](RunConfig& c) -> int& { return c.model.encoder.dreher_iterations; });
    t["encoder.rgcn_blocks"] =
        int_binding([](RunConfig& c) -> int& { return c.model.encoder.rgcn_blocks; });
    t["encoder.transformer_layers"] =
        int_binding([](RunConfig& c) -> int& { return c.model.encoder.transformer_layers; });
    t["encoder.transformer_heads"] =
        int_binding([](RunConfig& c) -> int& { return c.model.encoder.transformer_heads; });

    t["decoder.heads"] = int_binding([](RunConfig& c) -> int& { return c.model.decoder.heads; });
    t["decoder.layers"] = int_binding([](RunConfig& c) -> int& { return c.model.decoder.layers; });
    t["decoder.future_anchor"] =
        int_binding([](RunConfig& c) -> int& { return c.model.decoder.future_anchor; });
    t["decoder.ffn_multiplier"] =
        int_binding([](RunConfig& c) -> int& { return c.model.decoder.ffn_multiplier; });

    t["train.epochs"] = int_binding([](RunConfig& c) -> int& { return c.train.epochs; });
    t["train.batch_size"] = int_binding([](RunConfig& c) -> int& { return c.train.batch_size; });
    t["train.beta_mse"] = double_binding([](RunConfig& c) -> double& { return c.train.beta_mse; });
    t["train.lr"] = double_binding([](RunConfig& c) -> double& { return c.train.optimizer.lr; });
    t["train.beta1"] = double_binding([](RunConfig& c) -> double& { return c.train.optimizer.beta1; });
    t["train.beta2"] = double_binding([](RunConfig& c) -> double& { return c.train.optimizer.beta2; });
    t["train.eps"] = double_binding([](RunConfig& c) -> double& { return c.train.optimizer.eps; });
    t["train.weight_decay"] =
        double_binding([](RunConfig& c) -> double& { return c.train.optimizer.weight_decay; });
    t["train.eval_epoch"] = int_binding([](RunConfig& c) -> int& { return c.train.eval_epoch; });
    t["train.eval_every"] = int_binding([](RunConfig& c) -> int& { return c.train.eval_every; });
    t["train.teacher_forcing"] =
        bool_binding([](RunConfig& c) -> bool& { return c.train.teacher_forcing; });
    t["train.freeze_encoder"] =
        bool_binding([](RunConfig& c) -> bool& { return c.train.freeze_encoder; });
    t["train.seeds"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                          std::vector<std::uint64_t> seeds;
                          std::stringstream ss(v);
                          std::string item;
                          while (std::getline(ss, item, ',')) {
                            seeds.push_back(parse_number<std::uint64_t>(k, trim(item)));
                          }
                          c.train.seeds = std::move(seeds);
                        },
                        [](const RunConfig& c) {
                          std::string out;
                          for (std::size_t i = 0; i < c.train.seeds.size(); ++i) {
                            if (i > 0) out += ",";
                            out += std::to_string(c.train.seeds[i]);
                          }
                          return out;
                        }};

    t["ensemble.decay"] = double_binding([](RunConfig& c) -> double& { return c.ensemble_decay; });
    return t;
  }();
  return table;
}

}  // namespace

void RunConfig::finalize() {
  model.sync();
  data.slice = model.slice;
  data.validate();
  model.validate();
  train.validate();
  if (ensemble_decay < 0) throw ConfigError("ensemble decay must be >= 0");
}

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  std::stringstream ss(text);
  std::string line;
  int number = 0;
  while (std::getline(ss, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(number) + ": empty key");
    out[key] = trim(std::string_view(body).substr(eq + 1));
  }
  return out;
}

ConfigMap load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_config(RunConfig& cfg, const ConfigMap& entries) {
  const auto& table = bindings();
  for (const auto& [key, value] : entries) {
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key: " + key);
    it->second.set(cfg, key, value);
  }
}

ConfigMap to_config_map(const RunConfig& cfg) {
  ConfigMap out;
  for (const auto& [key, b] : bindings()) out[key] = b.get(cfg);
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [key, b] : bindings()) keys.push_back(key);
  return keys;
}

}  // namespace taskgraph
