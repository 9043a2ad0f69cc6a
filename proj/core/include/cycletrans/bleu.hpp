#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

namespace cycletrans {

inline constexpr std::size_t kBleuOrder = 4;

/// Clipped n-gram matches and candidate n-gram totals for orders 1..4,
/// plus lengths. Additive over sentence pairs, which is how corpus BLEU is
/// accumulated.
struct BleuStats {
  std::array<std::size_t, kBleuOrder> matches{};
  std::array<std::size_t, kBleuOrder> totals{};
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;

  BleuStats& operator+=(const BleuStats& o) {
    for (std::size_t n = 0; n < kBleuOrder; ++n) {
      matches[n] += o.matches[n];
      totals[n] += o.totals[n];
    }
    candidate_length += o.candidate_length;
    reference_length += o.reference_length;
    return *this;
  }
};

template <class Token>
BleuStats bleu_stats(std::span<const Token> candidate, std::span<const Token> reference) {
  BleuStats st;
  st.candidate_length = candidate.size();
  st.reference_length = reference.size();
  for (std::size_t n = 1; n <= kBleuOrder; ++n) {
    std::map<std::vector<Token>, std::size_t> ref_counts;
    for (std::size_t i = 0; i + n <= reference.size(); ++i) {
      ++ref_counts[std::vector<Token>(reference.begin() + i, reference.begin() + i + n)];
    }
    std::map<std::vector<Token>, std::size_t> cand_counts;
    for (std::size_t i = 0; i + n <= candidate.size(); ++i) {
      ++cand_counts[std::vector<Token>(candidate.begin() + i, candidate.begin() + i + n)];
    }
    std::size_t matched = 0;
    std::size_t total = 0;
    for (const auto& [gram, count] : cand_counts) {
      total += count;
      if (auto it = ref_counts.find(gram); it != ref_counts.end()) {
        matched += count < it->second ? count : it->second;
      }
    }
    st.matches[n - 1] = matched;
    st.totals[n - 1] = total;
  }
  return st;
}

/// exp(min(0, 1 - r/c)); 0 for an empty candidate.
inline double brevity_penalty(std::size_t candidate_length, std::size_t reference_length) {
  if (candidate_length == 0) return 0.0;
  const double ratio = static_cast<double>(reference_length) / static_cast<double>(candidate_length);
  return std::exp(std::min(0.0, 1.0 - ratio));
}

/// Sentence-level BLEU-4 used for rewards. Unigram precision is unsmoothed;
/// orders 2-4 use (matches + 1) / (totals + 1).
inline double smoothed_bleu(const BleuStats& st) {
  if (st.candidate_length == 0 || st.matches[0] == 0) return 0.0;
  double log_sum = std::log(static_cast<double>(st.matches[0]) / static_cast<double>(st.totals[0]));
  for (std::size_t n = 1; n < kBleuOrder; ++n) {
    log_sum += std::log((static_cast<double>(st.matches[n]) + 1.0) /
                        (static_cast<double>(st.totals[n]) + 1.0));
  }
  return brevity_penalty(st.candidate_length, st.reference_length) *
         std::exp(log_sum / static_cast<double>(kBleuOrder));
}

/// Standard unsmoothed BLEU-4 on accumulated statistics, in [0, 1].
inline double unsmoothed_bleu(const BleuStats& st) {
  double log_sum = 0.0;
  for (std::size_t n = 0; n < kBleuOrder; ++n) {
    if (st.matches[n] == 0 || st.totals[n] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(st.matches[n]) / static_cast<double>(st.totals[n]));
  }
  return brevity_penalty(st.candidate_length, st.reference_length) *
         std::exp(log_sum / static_cast<double>(kBleuOrder));
}

template <class Token>
double sentence_bleu(std::span<const Token> candidate, std::span<const Token> reference) {
  return smoothed_bleu(bleu_stats(candidate, reference));
}

template <class Token>
double sentence_bleu(const std::vector<Token>& candidate, const std::vector<Token>& reference) {
  return sentence_bleu(std::span<const Token>(candidate), std::span<const Token>(reference));
}

/// Unsmoothed BLEU-4 over a whole corpus, in [0, 1].
template <class Token>
double corpus_bleu(std::span<const std::vector<Token>> candidates,
                   std::span<const std::vector<Token>> references) {
  BleuStats total;
  for (std::size_t i = 0; i < candidates.size() && i < references.size(); ++i) {
    total += bleu_stats(std::span<const Token>(candidates[i]), std::span<const Token>(references[i]));
  }
  return unsmoothed_bleu(total);
}

}  // namespace cycletrans
