#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cycletrans {

using TokenId = std::int32_t;

/// Token counts gathered before truncation. Merging tables is associative,
/// so per-worker tables can be combined in any grouping.
using FrequencyTable = std::unordered_map<std::string, std::uint64_t>;

void count_tokens(std::span<const std::string> tokens, FrequencyTable& table);
void merge_frequencies(FrequencyTable& into, const FrequencyTable& from);

/// Bijective token <-> index map over the kept tokens. The four reserved
/// entries always sit at indices 0..3.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kBos = 2;
  static constexpr TokenId kEos = 3;
  static constexpr std::size_t kReservedCount = 4;
  static constexpr std::array<std::string_view, kReservedCount> kReservedTokens{
      "<pad>", "<unk>", "<s>", "</s>"};

  Vocabulary();

  /// Keeps the `cap` most frequent tokens; ties go to the lexicographically
  /// smaller token. Reserved spellings in the table are ignored.
  static Vocabulary build(const FrequencyTable& frequencies, std::size_t cap);

  /// Index of `token`, or kUnk.
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;

  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t cap() const noexcept { return cap_; }

  std::vector<TokenId> encode(std::span<const std::string> tokens) const;
  std::vector<std::string> decode(std::span<const TokenId> ids) const;
  /// Space-joined surface form, reserved tokens skipped.
  std::string detokenize(std::span<const TokenId> ids) const;

  /// FNV-1a over the ordered token list; stored in checkpoints to catch
  /// vocabulary mismatches.
  std::uint64_t fingerprint() const;

  /// Header line `#vocab reserved=<pad>,<unk>,<s>,</s> cap=N`, then one kept
  /// token per line. Line k after the header holds index 4 + k - 1.
  void save(std::ostream& out) const;
  static Vocabulary load(std::istream& in);

 private:
  void push(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  std::size_t cap_ = 0;
};

Vocabulary build_vocab(std::span<const std::vector<std::string>> token_lists, std::size_t cap);

}  // namespace cycletrans
