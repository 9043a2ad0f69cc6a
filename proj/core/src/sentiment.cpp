#include "cycletrans/sentiment.hpp"

#include <string>

#include "cycletrans/error.hpp"

namespace cycletrans {

std::string_view to_string(Sentiment s) noexcept {
  return s == Sentiment::kPositive ? "positive" : "negative";
}

Sentiment parse_sentiment(std::string_view text) {
  if (text == "positive" || text == "pos" || text == "1") return Sentiment::kPositive;
  if (text == "negative" || text == "neg" || text == "0") return Sentiment::kNegative;
  throw ValidationError("unknown sentiment '" + std::string(text) + "'");
}

}  // namespace cycletrans
