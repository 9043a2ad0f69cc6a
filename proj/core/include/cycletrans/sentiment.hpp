#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace cycletrans {

/// Binary sentiment. The numeric value doubles as the class index of every
/// two-way output layer in the project.
enum class Sentiment : std::uint8_t { kNegative = 0, kPositive = 1 };

constexpr Sentiment opposite(Sentiment s) noexcept {
  return s == Sentiment::kPositive ? Sentiment::kNegative : Sentiment::kPositive;
}

constexpr int class_index(Sentiment s) noexcept { return static_cast<int>(s); }

std::string_view to_string(Sentiment s) noexcept;

/// Accepts "positive"/"negative" (also "pos"/"neg", "1"/"0"). Throws ValidationError.
Sentiment parse_sentiment(std::string_view text);

}  // namespace cycletrans
