#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cycletrans/cycle_trainer.hpp"

namespace cycletrans::cli {

/// Fully resolved settings of one invocation.
struct RunConfig {
  std::filesystem::path data_dir = "data";
  std::filesystem::path checkpoint_dir = "checkpoints";
  std::filesystem::path log_dir = "logs";
  /// Preset the training defaults come from: yelp, amazon or synthetic.
  std::string dataset = "yelp";
  TrainConfig train;
  /// Training epochs of the evaluation classifier.
  int eval_epochs = 5;

  std::string to_json() const;
};

/// One setting reachable from the config file, the environment
/// (CYCLETRANS_<NAME> upper-cased) and the command line (--name-with-dashes).
struct ConfigKey {
  std::string name;
  std::string type;
  std::string description;
};

const std::vector<ConfigKey>& config_keys();

/// Defaults of a preset; ValidationError for an unknown name.
RunConfig preset(std::string_view dataset);

std::string get_key(const RunConfig& config, std::string_view key);
/// Parses `value` by the key's type. ValidationError on unknown keys or bad values.
void set_key(RunConfig& config, std::string_view key, std::string_view value);

std::string env_name(std::string_view key);
std::string flag_name(std::string_view key);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_environment();

struct ConfigSources {
  std::optional<std::filesystem::path> file;
  EnvLookup env;
  std::map<std::string, std::string> flags;
};

/// defaults <- file <- environment <- flags. The preset is chosen by the
/// highest-precedence `dataset` setting before the layers are applied.
RunConfig resolve_config(const ConfigSources& sources);

/// Writes run_config.json into `dir`.
void write_snapshot(const RunConfig& config, const std::filesystem::path& dir);

}  // namespace cycletrans::cli
