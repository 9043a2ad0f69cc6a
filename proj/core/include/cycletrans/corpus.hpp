#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cycletrans/sentiment.hpp"
#include "cycletrans/vocabulary.hpp"

namespace cycletrans {

struct Review {
  std::string text;
  int rating = 0;
};

/// One sentence with its label. `emotional_positions` is only populated for
/// synthetic data, where the emotional slots are known by construction.
struct Example {
  std::vector<TokenId> tokens;
  Sentiment sentiment = Sentiment::kPositive;
  std::string raw_text;
  std::vector<std::size_t> emotional_positions;
};

struct DatasetSplits {
  std::vector<Example> train;
  std::vector<Example> valid;
  std::vector<Example> test;
};

inline constexpr std::size_t kMaxSentenceWords = 20;
inline constexpr double kMinLabelConfidence = 0.8;

/// Lowercases, splits on whitespace and detaches punctuation. A run of the
/// same punctuation character ("...", "!!") stays one token; apostrophes
/// between letters stay inside the word. Throws DegenerateInputError when
/// nothing survives.
std::vector<std::string> tokenize(std::string_view text);

/// 4,5 -> positive; 1,2 -> negative; 3 -> nullopt (drop). Throws
/// ValidationError outside 1..5.
std::optional<Sentiment> label_from_rating(int rating);

/// Prefix through the first run of terminal punctuation (. ! ?), trimmed.
/// Whole (trimmed) text when there is none.
std::string first_sentence(std::string_view text);

/// Keep iff the token count does not exceed `max_words`.
inline bool length_filter(std::span<const std::string> tokens,
                          std::size_t max_words = kMaxSentenceWords) {
  return tokens.size() <= max_words;
}

/// Keep iff the confidence on the example's own label is at least `threshold`.
inline bool confidence_filter(double own_label_confidence,
                              double threshold = kMinLabelConfidence) {
  return own_label_confidence >= threshold;
}

/// Parses a raw record: a JSON object {"text": ..., "rating": ...} or
/// `rating<TAB>text`. Throws FormatError on anything else.
Review parse_review(std::string_view line);

// ---------------------------------------------------------------------------
// Processed record files (JSON lines).

void write_record(std::ostream& out, std::span<const std::string> tokens, Sentiment sentiment,
                  std::string_view raw_text, std::span<const std::size_t> emotional_positions = {});
void write_examples(std::ostream& out, std::span<const Example> examples, const Vocabulary& vocab);
std::vector<Example> read_examples(std::istream& in, const Vocabulary& vocab);

void save_splits(const std::filesystem::path& dir, const DatasetSplits& splits,
                 const Vocabulary& vocab);
DatasetSplits load_splits(const std::filesystem::path& dir, const Vocabulary& vocab);
Vocabulary load_vocabulary(const std::filesystem::path& path);
void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab);

/// Share of tokens mapped to <unk> over all splits.
double unknown_rate(const DatasetSplits& splits);

// ---------------------------------------------------------------------------
// Ingestion.

enum class Split : std::uint8_t { kTrain, kValid, kTest };

/// Deterministic split assignment from a 64-bit hash of the raw text.
Split assign_split(std::string_view raw_text, double train_fraction, double valid_fraction);

struct IngestOptions {
  std::size_t max_words = kMaxSentenceWords;
  double min_confidence = kMinLabelConfidence;
  std::size_t vocab_cap = 50000;
  double train_fraction = 0.8;
  double valid_fraction = 0.1;
  double max_malformed_fraction = 0.1;
};

struct IngestStats {
  std::size_t total = 0;
  std::size_t malformed = 0;
  std::size_t neutral_rating = 0;
  std::size_t degenerate = 0;
  std::size_t too_long = 0;
  std::size_t low_confidence = 0;
  std::size_t kept = 0;
  std::size_t train = 0;
  std::size_t valid = 0;
  std::size_t test = 0;
  double unknown_rate = 0.0;

  std::string to_json() const;
};

/// Confidence of a classifier on `tokens` for label `s`.
using ConfidenceFn = std::function<double(std::span<const TokenId> tokens, Sentiment s)>;

/// Per-review preprocessing: label, review-length filter, first sentence,
/// tokenization. Returns nullopt and bumps the matching counter on a drop.
struct Preprocessed {
  std::vector<std::string> tokens;
  Sentiment sentiment;
  std::string raw_text;
};
std::optional<Preprocessed> preprocess_review(const Review& review, std::size_t max_words,
                                              IngestStats& stats);

/// Two passes over `raw_path`: the first counts vocabulary (skipped when
/// `vocab` is given), the second filters and streams records into
/// train/valid/test.jsonl under `out_dir`, with vocab.txt and stats.json.
/// A confidence function requires an existing vocabulary, the one the
/// classifier was trained with.
IngestStats ingest_file(const std::filesystem::path& raw_path,
                        const std::filesystem::path& out_dir, const IngestOptions& options,
                        const Vocabulary* vocab = nullptr, const ConfidenceFn& confidence = {});

}  // namespace cycletrans
