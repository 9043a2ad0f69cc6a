#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "cycletrans/error.hpp"
#include "cycletrans/model_dims.hpp"
#include "cycletrans/nn/checkpoint.hpp"

namespace cycletrans::detail {

inline nlohmann::json dims_to_json(const ModelDims& d) {
  return {{"vocab_size", d.vocab_size},
          {"embedding_size", d.embedding_size},
          {"hidden_size", d.hidden_size},
          {"init_scale", d.init_scale}};
}

inline ModelDims dims_from_json(const nlohmann::json& j, std::uint64_t seed) {
  ModelDims d;
  d.vocab_size = j.at("vocab_size").get<int>();
  d.embedding_size = j.at("embedding_size").get<int>();
  d.hidden_size = j.at("hidden_size").get<int>();
  d.init_scale = j.value("init_scale", 0.1);
  d.seed = seed;
  return d;
}

inline nlohmann::json checkpoint_metadata(const nn::Checkpoint& ckpt, const std::string& kind,
                                          const std::filesystem::path& path) {
  if (ckpt.kind != kind) {
    throw FormatError(path.string() + " holds a '" + ckpt.kind + "' checkpoint, expected '" + kind +
                      "'");
  }
  try {
    return nlohmann::json::parse(ckpt.metadata);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad checkpoint metadata: " + e.what());
  }
}

}  // namespace cycletrans::detail
