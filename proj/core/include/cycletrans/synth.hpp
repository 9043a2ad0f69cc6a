#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cycletrans/corpus.hpp"
#include "cycletrans/vocabulary.hpp"

namespace cycletrans {

/// Template description for the synthetic corpus. Templates are space
/// separated; `ADJ` marks an emotional slot and any key of `slots` marks a
/// neutral filler slot.
struct TemplateSpec {
  std::vector<std::string> templates;
  std::vector<std::string> positive_words;
  std::vector<std::string> negative_words;
  std::map<std::string, std::vector<std::string>> slots;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;
  std::uint64_t seed = 0;
  bool balanced = true;

  static TemplateSpec from_json(std::string_view json_text);
  std::string to_json() const;
};

inline constexpr std::string_view kEmotionalSlot = "ADJ";

struct SyntheticCorpus {
  Vocabulary vocab;
  DatasetSplits splits;
};

/// Deterministic in `seed`. Sentences are distinct across all splits.
/// Throws ValidationError when the inventories overlap, a template has no
/// emotional slot, or there are not enough distinct sentences.
SyntheticCorpus synth_corpus(const TemplateSpec& spec, std::uint64_t seed);

/// The template set used by the acceptance run and the `synth` defaults.
TemplateSpec default_template_spec();

}  // namespace cycletrans
