#include "cycletrans/synth.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "cycletrans/error.hpp"
#include "cycletrans/random.hpp"

namespace cycletrans {
namespace {

std::vector<std::string> split_spaces(const std::string& text) {
  std::vector<std::string> pieces;
  std::string cur;
  for (char c : text) {
    if (c == ' ' || c == '\t') {
      if (!cur.empty()) pieces.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) pieces.push_back(std::move(cur));
  return pieces;
}

std::string single_token(const std::string& word) {
  auto tokens = tokenize(word);
  if (tokens.size() != 1) throw ValidationError("emotional word '" + word + "' is not one token");
  return tokens.front();
}

struct Generated {
  std::vector<std::string> tokens;
  std::vector<std::size_t> emotional;
  std::string raw_text;
};

}  // namespace

TemplateSpec TemplateSpec::from_json(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("template spec is not valid JSON: ") + e.what());
  }
  TemplateSpec spec;
  try {
    spec.templates = j.at("templates").get<std::vector<std::string>>();
    spec.positive_words = j.at("positive_words").get<std::vector<std::string>>();
    spec.negative_words = j.at("negative_words").get<std::vector<std::string>>();
    if (j.contains("slots")) {
      spec.slots = j["slots"].get<std::map<std::string, std::vector<std::string>>>();
    }
    spec.n_train = j.at("n_train").get<std::size_t>();
    spec.n_val = j.at("n_val").get<std::size_t>();
    spec.n_test = j.at("n_test").get<std::size_t>();
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.balanced = j.value("balanced", true);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("template spec: ") + e.what());
  }
  return spec;
}

std::string TemplateSpec::to_json() const {
  nlohmann::ordered_json j;
  j["templates"] = templates;
  j["positive_words"] = positive_words;
  j["negative_words"] = negative_words;
  j["slots"] = slots;
  j["n_train"] = n_train;
  j["n_val"] = n_val;
  j["n_test"] = n_test;
  j["seed"] = seed;
  j["balanced"] = balanced;
  return j.dump(2);
}

SyntheticCorpus synth_corpus(const TemplateSpec& spec, std::uint64_t seed) {
  if (spec.templates.empty()) throw ValidationError("template spec has no templates");
  if (spec.positive_words.empty() || spec.negative_words.empty()) {
    throw ValidationError("template spec needs positive and negative words");
  }

  std::set<std::string> positive;
  std::set<std::string> negative;
  for (const auto& w : spec.positive_words) positive.insert(single_token(w));
  for (const auto& w : spec.negative_words) negative.insert(single_token(w));
  for (const auto& w : positive) {
    if (negative.contains(w)) {
      throw ValidationError("'" + w + "' is in both the positive and negative inventories");
    }
  }
  const std::vector<std::string> pos_words(positive.begin(), positive.end());
  const std::vector<std::string> neg_words(negative.begin(), negative.end());

  // Pre-split templates and check that neutral text never uses an emotional word.
  std::vector<std::vector<std::string>> templates;
  for (const auto& t : spec.templates) {
    auto pieces = split_spaces(t);
    if (std::find(pieces.begin(), pieces.end(), kEmotionalSlot) == pieces.end()) {
      throw ValidationError("template '" + t + "' has no " + std::string(kEmotionalSlot) + " slot");
    }
    for (const auto& piece : pieces) {
      if (piece == kEmotionalSlot || spec.slots.contains(piece)) continue;
      for (const auto& tok : tokenize(piece)) {
        if (positive.contains(tok) || negative.contains(tok)) {
          throw ValidationError("template '" + t + "' uses emotional word '" + tok + "'");
        }
      }
    }
    templates.push_back(std::move(pieces));
  }
  for (const auto& [name, fillers] : spec.slots) {
    if (fillers.empty()) throw ValidationError("slot " + name + " has no fillers");
    for (const auto& f : fillers) {
      for (const auto& tok : tokenize(f)) {
        if (positive.contains(tok) || negative.contains(tok)) {
          throw ValidationError("slot filler '" + f + "' uses emotional word '" + tok + "'");
        }
      }
    }
  }

  Rng rng(seed);
  auto generate = [&](Sentiment s) {
    const auto& tpl = templates[rng.below(templates.size())];
    const auto& inventory = s == Sentiment::kPositive ? pos_words : neg_words;
    Generated g;
    for (const auto& piece : tpl) {
      if (piece == kEmotionalSlot) {
        g.emotional.push_back(g.tokens.size());
        g.tokens.push_back(inventory[rng.below(inventory.size())]);
      } else if (auto it = spec.slots.find(piece); it != spec.slots.end()) {
        for (auto& tok : tokenize(it->second[rng.below(it->second.size())])) {
          g.tokens.push_back(std::move(tok));
        }
      } else {
        for (auto& tok : tokenize(piece)) g.tokens.push_back(std::move(tok));
      }
    }
    for (const auto& tok : g.tokens) {
      if (!g.raw_text.empty()) g.raw_text += ' ';
      g.raw_text += tok;
    }
    return g;
  };

  const std::size_t total = spec.n_train + spec.n_val + spec.n_test;
  std::set<std::string> seen;
  std::vector<std::pair<Generated, Sentiment>> sentences;
  sentences.reserve(total);
  const std::size_t max_attempts = 100 * total + 1000;
  std::size_t attempts = 0;
  while (sentences.size() < total) {
    if (++attempts > max_attempts) {
      throw ValidationError("template spec cannot produce " + std::to_string(total) +
                            " distinct sentences");
    }
    const Sentiment s = spec.balanced
                            ? (sentences.size() % 2 == 0 ? Sentiment::kPositive : Sentiment::kNegative)
                            : (rng.bernoulli(0.5) ? Sentiment::kPositive : Sentiment::kNegative);
    auto g = generate(s);
    if (!seen.insert(g.raw_text).second) continue;
    sentences.emplace_back(std::move(g), s);
  }

  FrequencyTable freq;
  for (const auto& [g, s] : sentences) count_tokens(g.tokens, freq);
  SyntheticCorpus corpus;
  corpus.vocab = Vocabulary::build(freq, freq.size());

  for (std::size_t i = 0; i < sentences.size(); ++i) {
    auto& [g, s] = sentences[i];
    Example ex;
    ex.tokens = corpus.vocab.encode(g.tokens);
    ex.sentiment = s;
    ex.raw_text = std::move(g.raw_text);
    ex.emotional_positions = std::move(g.emotional);
    auto& dst = i < spec.n_train                ? corpus.splits.train
                : i < spec.n_train + spec.n_val ? corpus.splits.valid
                                                : corpus.splits.test;
    dst.push_back(std::move(ex));
  }
  return corpus;
}

TemplateSpec default_template_spec() {
  TemplateSpec spec;
  spec.templates = {
      "the NOUN they serve here is ADJ",
      "we ordered the NOUN and it was ADJ",
      "my friend said the NOUN was ADJ",
      "to me the NOUN tasted ADJ",
      "this place has ADJ NOUN",
      "i think their NOUN is ADJ",
      "they serve a ADJ NOUN",
      "after a long wait the NOUN came out ADJ",
      "the waiter brought the NOUN and it looked ADJ",
      "honestly the NOUN at this place was ADJ",
  };
  spec.slots["NOUN"] = {"food",  "pizza", "pasta",   "soup",    "salad", "burger",
                        "coffee", "steak", "sushi",  "bread",   "dessert", "chicken",
                        "fish",  "rice",  "tea",     "cake"};
  spec.positive_words = {"delicious", "great", "amazing", "excellent",
                         "wonderful", "fantastic", "tasty", "perfect"};
  spec.negative_words = {"terrible", "awful", "bland", "horrible",
                         "disgusting", "mediocre", "stale", "bad"};
  spec.n_train = 1600;
  spec.n_val = 200;
  spec.n_test = 200;
  spec.seed = 7;
  return spec;
}

}  // namespace cycletrans
