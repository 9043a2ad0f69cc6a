#include "cycletrans/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "cycletrans/error.hpp"
#include "cycletrans/random.hpp"

namespace cycletrans {
namespace {

using ordered_json = nlohmann::ordered_json;

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) {
  // Bytes >= 0x80 belong to UTF-8 sequences; treat them as word characters.
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || static_cast<unsigned char>(c) >= 0x80;
}
bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  return in;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) tokens.push_back(std::move(word));
    word.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (is_space(c)) {
      flush();
    } else if (c == '\'' && !word.empty() && i + 1 < text.size() &&
               std::isalpha(static_cast<unsigned char>(text[i + 1]))) {
      word += c;
    } else if (is_punct(c)) {
      flush();
      std::size_t j = i;
      while (j < text.size() && text[j] == c) ++j;
      tokens.emplace_back(text.substr(i, j - i));
      i = j - 1;
    } else {
      word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  flush();
  if (tokens.empty()) throw DegenerateInputError("text has no tokens");
  return tokens;
}

std::optional<Sentiment> label_from_rating(int rating) {
  if (rating < 1 || rating > 5) {
    throw ValidationError("rating " + std::to_string(rating) + " outside 1..5");
  }
  if (rating > 3) return Sentiment::kPositive;
  if (rating < 3) return Sentiment::kNegative;
  return std::nullopt;
}

std::string first_sentence(std::string_view text) {
  text = trim(text);
  const auto pos = std::find_if(text.begin(), text.end(), is_terminal);
  if (pos == text.end()) return std::string(text);
  auto end = pos;
  while (end != text.end() && is_terminal(*end)) ++end;
  return std::string(trim(std::string_view(text.begin(), end)));
}

Review parse_review(std::string_view line) {
  const auto body = trim(line);
  if (body.empty()) throw FormatError("empty record");
  Review review;
  if (body.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("bad JSON record: ") + e.what());
    }
    if (!j.contains("text") || !j["text"].is_string()) throw FormatError("record lacks string 'text'");
    if (!j.contains("rating") || !j["rating"].is_number_integer()) {
      throw FormatError("record lacks integer 'rating'");
    }
    review.text = j["text"].get<std::string>();
    review.rating = j["rating"].get<int>();
  } else {
    const auto tab = body.find('\t');
    if (tab == std::string_view::npos) throw FormatError("record is neither JSON nor rating<TAB>text");
    const auto rating_text = trim(body.substr(0, tab));
    if (rating_text.empty() ||
        !std::all_of(rating_text.begin(), rating_text.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }) ||
        rating_text.size() > 2) {
      throw FormatError("bad rating field '" + std::string(rating_text) + "'");
    }
    review.rating = std::stoi(std::string(rating_text));
    review.text = std::string(body.substr(tab + 1));
  }
  if (review.rating < 1 || review.rating > 5) {
    throw FormatError("rating " + std::to_string(review.rating) + " outside 1..5");
  }
  if (trim(review.text).empty()) throw FormatError("empty review text");
  return review;
}

void write_record(std::ostream& out, std::span<const std::string> tokens, Sentiment sentiment,
                  std::string_view raw_text, std::span<const std::size_t> emotional_positions) {
  ordered_json j;
  j["tokens"] = std::vector<std::string>(tokens.begin(), tokens.end());
  j["sentiment"] = std::string(to_string(sentiment));
  j["raw_text"] = std::string(raw_text);
  if (!emotional_positions.empty()) {
    j["emotional_positions"] =
        std::vector<std::size_t>(emotional_positions.begin(), emotional_positions.end());
  }
  out << j.dump() << '\n';
}

void write_examples(std::ostream& out, std::span<const Example> examples, const Vocabulary& vocab) {
  for (const auto& ex : examples) {
    write_record(out, vocab.decode(ex.tokens), ex.sentiment, ex.raw_text, ex.emotional_positions);
  }
}

std::vector<Example> read_examples(std::istream& in, const Vocabulary& vocab) {
  std::vector<Example> examples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Example ex;
      ex.tokens = vocab.encode(j.at("tokens").get<std::vector<std::string>>());
      ex.sentiment = parse_sentiment(j.at("sentiment").get<std::string>());
      ex.raw_text = j.value("raw_text", std::string());
      if (j.contains("emotional_positions")) {
        ex.emotional_positions = j["emotional_positions"].get<std::vector<std::size_t>>();
      }
      if (ex.tokens.empty()) throw FormatError("empty token list");
      examples.push_back(std::move(ex));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return examples;
}

void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab) {
  auto out = open_out(path);
  vocab.save(out);
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  auto in = open_in(path);
  return Vocabulary::load(in);
}

void save_splits(const std::filesystem::path& dir, const DatasetSplits& splits,
                 const Vocabulary& vocab) {
  std::filesystem::create_directories(dir);
  auto train = open_out(dir / "train.jsonl");
  write_examples(train, splits.train, vocab);
  auto valid = open_out(dir / "valid.jsonl");
  write_examples(valid, splits.valid, vocab);
  auto test = open_out(dir / "test.jsonl");
  write_examples(test, splits.test, vocab);
  save_vocabulary(dir / "vocab.txt", vocab);
}

DatasetSplits load_splits(const std::filesystem::path& dir, const Vocabulary& vocab) {
  DatasetSplits splits;
  auto train = open_in(dir / "train.jsonl");
  splits.train = read_examples(train, vocab);
  auto valid = open_in(dir / "valid.jsonl");
  splits.valid = read_examples(valid, vocab);
  auto test = open_in(dir / "test.jsonl");
  splits.test = read_examples(test, vocab);
  return splits;
}

double unknown_rate(const DatasetSplits& splits) {
  std::size_t total = 0;
  std::size_t unknown = 0;
  for (const auto* part : {&splits.train, &splits.valid, &splits.test}) {
    for (const auto& ex : *part) {
      total += ex.tokens.size();
      unknown += static_cast<std::size_t>(
          std::count(ex.tokens.begin(), ex.tokens.end(), Vocabulary::kUnk));
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(unknown) / static_cast<double>(total);
}

Split assign_split(std::string_view raw_text, double train_fraction, double valid_fraction) {
  const double u = static_cast<double>(mix_seed(fnv1a(raw_text)) >> 11) * 0x1.0p-53;
  if (u < train_fraction) return Split::kTrain;
  if (u < train_fraction + valid_fraction) return Split::kValid;
  return Split::kTest;
}

std::string IngestStats::to_json() const {
  ordered_json j;
  j["total"] = total;
  j["malformed"] = malformed;
  j["neutral_rating"] = neutral_rating;
  j["degenerate"] = degenerate;
  j["too_long"] = too_long;
  j["low_confidence"] = low_confidence;
  j["kept"] = kept;
  j["train"] = train;
  j["valid"] = valid;
  j["test"] = test;
  j["unknown_rate"] = unknown_rate;
  return j.dump(2);
}

std::optional<Preprocessed> preprocess_review(const Review& review, std::size_t max_words,
                                              IngestStats& stats) {
  const auto label = label_from_rating(review.rating);
  if (!label) {
    ++stats.neutral_rating;
    return std::nullopt;
  }
  try {
    if (!length_filter(tokenize(review.text), max_words)) {
      ++stats.too_long;
      return std::nullopt;
    }
    Preprocessed p;
    p.raw_text = first_sentence(review.text);
    p.tokens = tokenize(p.raw_text);
    p.sentiment = *label;
    return p;
  } catch (const DegenerateInputError&) {
    ++stats.degenerate;
    return std::nullopt;
  }
}

IngestStats ingest_file(const std::filesystem::path& raw_path,
                        const std::filesystem::path& out_dir, const IngestOptions& options,
                        const Vocabulary* vocab, const ConfidenceFn& confidence) {
  if (confidence && vocab == nullptr) {
    throw ValidationError("the confidence filter needs the classifier's vocabulary");
  }

  // Pass 1: validate records and count tokens.
  IngestStats scan;
  FrequencyTable frequencies;
  {
    auto in = open_in(raw_path);
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      ++scan.total;
      Review review;
      try {
        review = parse_review(line);
      } catch (const FormatError&) {
        ++scan.malformed;
        continue;
      }
      if (auto p = preprocess_review(review, options.max_words, scan); p && vocab == nullptr) {
        count_tokens(p->tokens, frequencies);
      }
    }
  }
  if (scan.total == 0) throw FormatError(raw_path.string() + " holds no records");
  if (static_cast<double>(scan.malformed) >
      options.max_malformed_fraction * static_cast<double>(scan.total)) {
    throw FormatError(std::to_string(scan.malformed) + " of " + std::to_string(scan.total) +
                      " records in " + raw_path.string() + " are malformed");
  }
  const Vocabulary built = vocab ? Vocabulary() : Vocabulary::build(frequencies, options.vocab_cap);
  const Vocabulary& v = vocab ? *vocab : built;

  // Pass 2: filter and stream into splits.
  std::filesystem::create_directories(out_dir);
  auto train = open_out(out_dir / "train.jsonl");
  auto valid = open_out(out_dir / "valid.jsonl");
  auto test = open_out(out_dir / "test.jsonl");
  IngestStats stats;
  std::size_t token_total = 0;
  std::size_t token_unknown = 0;
  auto in = open_in(raw_path);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++stats.total;
    Review review;
    try {
      review = parse_review(line);
    } catch (const FormatError&) {
      ++stats.malformed;
      continue;
    }
    auto p = preprocess_review(review, options.max_words, stats);
    if (!p) continue;
    const auto ids = v.encode(p->tokens);
    if (confidence && !confidence_filter(confidence(ids, p->sentiment), options.min_confidence)) {
      ++stats.low_confidence;
      continue;
    }
    ++stats.kept;
    token_total += ids.size();
    token_unknown += static_cast<std::size_t>(std::count(ids.begin(), ids.end(), Vocabulary::kUnk));
    switch (assign_split(p->raw_text, options.train_fraction, options.valid_fraction)) {
      case Split::kTrain:
        ++stats.train;
        write_record(train, p->tokens, p->sentiment, p->raw_text);
        break;
      case Split::kValid:
        ++stats.valid;
        write_record(valid, p->tokens, p->sentiment, p->raw_text);
        break;
      case Split::kTest:
        ++stats.test;
        write_record(test, p->tokens, p->sentiment, p->raw_text);
        break;
    }
  }
  stats.unknown_rate =
      token_total == 0 ? 0.0 : static_cast<double>(token_unknown) / static_cast<double>(token_total);
  save_vocabulary(out_dir / "vocab.txt", v);
  auto stats_out = open_out(out_dir / "stats.json");
  stats_out << stats.to_json() << '\n';
  return stats;
}

}  // namespace cycletrans
