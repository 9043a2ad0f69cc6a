#pragma once

#include <cstdint>

namespace cycletrans {

/// Architecture sizes shared by every network in the project.
struct ModelDims {
  int vocab_size = 0;
  int embedding_size = 128;
  int hidden_size = 256;
  std::uint64_t seed = 0;
  /// Parameters start uniform in (-init_scale, init_scale).
  double init_scale = 0.1;
};

}  // namespace cycletrans
