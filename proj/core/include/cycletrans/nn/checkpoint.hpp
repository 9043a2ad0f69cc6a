#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cycletrans/nn/params.hpp"

namespace cycletrans::nn {

/// Binary checkpoint container shared by every model:
///
///   magic "CYTRCKPT", u32 version, u32 dtype tag (1 = f64),
///   str kind, u64 vocab fingerprint, u64 seed, str metadata (JSON text),
///   u32 tensor count, per tensor: str name, u64 rows, u64 cols, f64 data
///   (column-major).
///
/// Strings are u32 length + bytes; integers little-endian. Optimizer
/// accumulators are stored as extra tensors prefixed "adagrad/".
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;
  static constexpr std::uint32_t kDtypeF64 = 1;

  std::string kind;
  std::uint64_t vocab_fingerprint = 0;
  std::uint64_t seed = 0;
  std::string metadata;
  std::vector<std::string> names;
  std::vector<Matrix> tensors;

  void add(std::string name, Matrix tensor);
  const Matrix* find(const std::string& name) const;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

/// Copies `params` (and `accumulators`, when non-empty) into a checkpoint.
void store_params(Checkpoint& ckpt, const ParamSet& params,
                  const std::vector<Matrix>& accumulators = {});
/// Fills `params` by name; shapes must match. Restores accumulators if present.
void restore_params(const Checkpoint& ckpt, ParamSet& params, std::vector<Matrix>* accumulators);

}  // namespace cycletrans::nn
