#include "cycletrans/vocabulary.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "cycletrans/error.hpp"

namespace cycletrans {

void count_tokens(std::span<const std::string> tokens, FrequencyTable& table) {
  for (const auto& t : tokens) ++table[t];
}

void merge_frequencies(FrequencyTable& into, const FrequencyTable& from) {
  for (const auto& [token, count] : from) into[token] += count;
}

Vocabulary::Vocabulary() {
  for (auto t : kReservedTokens) push(std::string(t));
}

void Vocabulary::push(std::string token) {
  const auto id = static_cast<TokenId>(tokens_.size());
  index_.emplace(token, id);
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(const FrequencyTable& frequencies, std::size_t cap) {
  std::vector<std::pair<std::string, std::uint64_t>> entries;
  entries.reserve(frequencies.size());
  for (const auto& [token, count] : frequencies) {
    const bool reserved = std::find(kReservedTokens.begin(), kReservedTokens.end(), token) !=
                          kReservedTokens.end();
    if (!reserved && !token.empty()) entries.emplace_back(token, count);
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (entries.size() > cap) entries.resize(cap);

  Vocabulary vocab;
  vocab.cap_ = cap;
  for (auto& e : entries) vocab.push(std::move(e.first));
  return vocab;
}

TokenId Vocabulary::id(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw ValidationError("token id " + std::to_string(id) + " outside vocabulary of size " +
                          std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(std::span<const TokenId> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(token(id));
  return out;
}

std::string Vocabulary::detokenize(std::span<const TokenId> ids) const {
  std::string out;
  for (auto id : ids) {
    if (id == kPad || id == kBos || id == kEos) continue;
    if (!out.empty()) out += ' ';
    out += token(id);
  }
  return out;
}

std::uint64_t Vocabulary::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : tokens_) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xffU;  // separator
    h *= 0x100000001b3ULL;
  }
  return h;
}

void Vocabulary::save(std::ostream& out) const {
  out << "#vocab reserved=";
  for (std::size_t i = 0; i < kReservedCount; ++i) out << (i ? "," : "") << kReservedTokens[i];
  out << " cap=" << cap_ << '\n';
  for (std::size_t i = kReservedCount; i < tokens_.size(); ++i) out << tokens_[i] << '\n';
}

Vocabulary Vocabulary::load(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("#vocab ", 0) != 0) {
    throw FormatError("vocabulary file lacks the '#vocab' header line");
  }
  std::istringstream fields(header.substr(7));
  std::string field;
  Vocabulary vocab;
  bool saw_reserved = false;
  while (fields >> field) {
    if (field.rfind("reserved=", 0) == 0) {
      std::string expected;
      for (std::size_t i = 0; i < kReservedCount; ++i) {
        expected += (i ? "," : "") + std::string(kReservedTokens[i]);
      }
      if (field.substr(9) != expected) throw FormatError("unexpected reserved block: " + field);
      saw_reserved = true;
    } else if (field.rfind("cap=", 0) == 0) {
      vocab.cap_ = std::stoull(field.substr(4));
    }
  }
  if (!saw_reserved) throw FormatError("vocabulary header lacks reserved=");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (vocab.contains(line)) throw FormatError("duplicate vocabulary entry '" + line + "'");
    vocab.push(line);
  }
  return vocab;
}

Vocabulary build_vocab(std::span<const std::vector<std::string>> token_lists, std::size_t cap) {
  if (token_lists.empty()) throw PreconditionError("build_vocab needs a nonempty corpus");
  FrequencyTable table;
  for (const auto& tokens : token_lists) count_tokens(tokens, table);
  return Vocabulary::build(table, cap);
}

}  // namespace cycletrans
