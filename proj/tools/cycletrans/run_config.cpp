#include "run_config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

#include "cycletrans/error.hpp"

namespace cycletrans::cli {
namespace {

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError("invalid value '" + std::string(text) + "' for " + std::string(key));
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  std::string t(text);
  for (auto& ch : t) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw ValidationError("invalid boolean '" + std::string(text) + "' for " + std::string(key));
}

struct Accessor {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view key, std::string_view)> set;
};

template <class T>
Accessor number(T TrainConfig::*field) {
  return {[field](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(c.train.*field);
            } else {
              return std::to_string(c.train.*field);
            }
          },
          [field](RunConfig& c, std::string_view key, std::string_view v) {
            c.train.*field = parse_number<T>(key, v);
          }};
}

Accessor path(std::filesystem::path RunConfig::*field) {
  return {[field](const RunConfig& c) { return (c.*field).string(); },
          [field](RunConfig& c, std::string_view, std::string_view v) { c.*field = std::string(v); }};
}

const std::map<std::string, Accessor, std::less<>>& accessors() {
  static const std::map<std::string, Accessor, std::less<>> table = {
      {"data_dir", path(&RunConfig::data_dir)},
      {"checkpoint_dir", path(&RunConfig::checkpoint_dir)},
      {"log_dir", path(&RunConfig::log_dir)},
      {"dataset",
       {[](const RunConfig& c) { return c.dataset; },
        [](RunConfig& c, std::string_view, std::string_view v) {
          preset(v);
          c.dataset = std::string(v);
        }}},
      {"iterations", number(&TrainConfig::iterations)},
      {"batch_size", number(&TrainConfig::batch_size)},
      {"learning_rate", number(&TrainConfig::learning_rate)},
      {"hidden_size", number(&TrainConfig::hidden_size)},
      {"embedding_size", number(&TrainConfig::embedding_size)},
      {"vocab_cap", number(&TrainConfig::vocab_cap)},
      {"clip_norm", number(&TrainConfig::clip_norm)},
      {"beta", number(&TrainConfig::beta)},
      {"classifier_epochs", number(&TrainConfig::classifier_epochs)},
      {"neutralizer_epochs", number(&TrainConfig::neutralizer_epochs)},
      {"emotionalizer_epochs", number(&TrainConfig::emotionalizer_epochs)},
      {"seed", number(&TrainConfig::seed)},
      {"baseline_decay", number(&TrainConfig::baseline_decay)},
      {"baseline",
       {[](const RunConfig& c) { return std::string(c.train.use_baseline ? "true" : "false"); },
        [](RunConfig& c, std::string_view key, std::string_view v) {
          c.train.use_baseline = parse_bool(key, v);
        }}},
      {"max_decode_length", number(&TrainConfig::max_decode_length)},
      {"checkpoint_every", number(&TrainConfig::checkpoint_every)},
      {"workers", number(&TrainConfig::workers)},
      {"eval_epochs",
       {[](const RunConfig& c) { return std::to_string(c.eval_epochs); },
        [](RunConfig& c, std::string_view key, std::string_view v) {
          c.eval_epochs = parse_number<int>(key, v);
        }}},
  };
  return table;
}

const Accessor& accessor(std::string_view key) {
  const auto& table = accessors();
  auto it = table.find(key);
  if (it == table.end()) throw ValidationError("unknown setting '" + std::string(key) + "'");
  return it->second;
}

std::map<std::string, std::string> read_file_layer(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot read config file " + file.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config file " + file.string() + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ValidationError("config file " + file.string() + " must hold an object");
  std::map<std::string, std::string> layer;
  for (const auto& [key, value] : j.items()) {
    accessor(key);
    if (value.is_string()) {
      layer[key] = value.get<std::string>();
    } else if (value.is_number_float()) {
      layer[key] = format_double(value.get<double>());
    } else {
      layer[key] = value.dump();
    }
  }
  return layer;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"dataset", "NAME", "training preset: yelp, amazon or synthetic"},
      {"data_dir", "PATH", "processed dataset directory"},
      {"checkpoint_dir", "PATH", "directory of model checkpoints"},
      {"log_dir", "PATH", "directory of reward logs and reports"},
      {"iterations", "INT", "cycled training iterations"},
      {"batch_size", "INT", "minibatch size"},
      {"learning_rate", "FLOAT", "Adagrad learning rate"},
      {"hidden_size", "INT", "LSTM hidden size"},
      {"embedding_size", "INT", "word embedding size"},
      {"vocab_cap", "INT", "vocabulary size cap"},
      {"clip_norm", "FLOAT", "global gradient norm clip"},
      {"beta", "FLOAT", "harmonic reward weight"},
      {"classifier_epochs", "INT", "classifier pre-training epochs"},
      {"neutralizer_epochs", "INT", "neutralizer pre-training epochs"},
      {"emotionalizer_epochs", "INT", "emotionalizer pre-training epochs"},
      {"seed", "INT", "random seed"},
      {"baseline_decay", "FLOAT", "decay of the moving-average reward baseline"},
      {"baseline", "BOOL", "subtract the moving-average baseline (false = plain REINFORCE)"},
      {"max_decode_length", "INT", "longest generated sentence"},
      {"checkpoint_every", "INT", "checkpoint cadence in iterations (0 = end only)"},
      {"workers", "INT", "worker threads per batch"},
      {"eval_epochs", "INT", "evaluation classifier training epochs"},
  };
  return keys;
}

RunConfig preset(std::string_view dataset) {
  RunConfig c;
  c.dataset = std::string(dataset);
  if (dataset == "yelp") {
    c.train = TrainConfig::yelp();
  } else if (dataset == "amazon") {
    c.train = TrainConfig::amazon();
  } else if (dataset == "synthetic") {
    c.train = TrainConfig::synthetic();
  } else {
    throw ValidationError("unknown dataset preset '" + std::string(dataset) +
                          "' (expected yelp, amazon or synthetic)");
  }
  return c;
}

std::string get_key(const RunConfig& config, std::string_view key) { return accessor(key).get(config); }

void set_key(RunConfig& config, std::string_view key, std::string_view value) {
  accessor(key).set(config, key, value);
}

std::string env_name(std::string_view key) {
  std::string name = "CYCLETRANS_";
  for (char ch : key) name += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return name;
}

std::string flag_name(std::string_view key) {
  std::string name = "--";
  for (char ch : key) name += ch == '_' ? '-' : ch;
  return name;
}

EnvLookup process_environment() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  };
}

RunConfig resolve_config(const ConfigSources& sources) {
  std::vector<std::map<std::string, std::string>> layers;
  if (sources.file) layers.push_back(read_file_layer(*sources.file));
  std::map<std::string, std::string> env;
  if (sources.env) {
    for (const auto& key : config_keys()) {
      if (auto v = sources.env(env_name(key.name))) env[key.name] = *v;
    }
  }
  layers.push_back(std::move(env));
  for (const auto& [key, value] : sources.flags) accessor(key);
  layers.push_back(sources.flags);

  std::string dataset = "yelp";
  for (const auto& layer : layers) {
    if (auto it = layer.find("dataset"); it != layer.end()) dataset = it->second;
  }
  RunConfig config = preset(dataset);
  for (const auto& layer : layers) {
    for (const auto& [key, value] : layer) set_key(config, key, value);
  }
  config.train.validate();
  if (config.eval_epochs < 0) throw ValidationError("eval_epochs must be non-negative");
  return config;
}

std::string RunConfig::to_json() const {
  nlohmann::ordered_json j;
  for (const auto& key : config_keys()) j[key.name] = get_key(*this, key.name);
  // Typed values where the key is numeric or boolean.
  for (auto& [key, value] : j.items()) {
    const std::string text = value.get<std::string>();
    if (key == "dataset" || key.ends_with("_dir")) continue;
    value = nlohmann::json::parse(text);
  }
  return j.dump(2);
}

void write_snapshot(const RunConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "run_config.json");
  out << config.to_json() << '\n';
  if (!out) throw std::runtime_error("cannot write " + (dir / "run_config.json").string());
}

}  // namespace cycletrans::cli
