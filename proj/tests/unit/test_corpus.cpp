#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "cycletrans/corpus.hpp"
#include "cycletrans/error.hpp"
#include "ingest_fixture.hpp"

using namespace cycletrans;
namespace fs = std::filesystem;

namespace {

using Tokens = std::vector<std::string>;

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("cycletrans_corpus_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("tokenize") {
  CHECK(tokenize("The food is delicious.") == Tokens{"the", "food", "is", "delicious", "."});
  CHECK(tokenize("Worst cleaning job ever!") == Tokens{"worst", "cleaning", "job", "ever", "!"});
  CHECK(tokenize("Most boring show I've ever been.") ==
        Tokens{"most", "boring", "show", "i've", "ever", "been", "."});
  CHECK(tokenize("wait... what?!") == Tokens{"wait", "...", "what", "?", "!"});
  CHECK(tokenize("  spaced\tout\n") == Tokens{"spaced", "out"});
  CHECK_THROWS_AS(tokenize(""), DegenerateInputError);
  CHECK_THROWS_AS(tokenize("   \t "), DegenerateInputError);
}

TEST_CASE("label_from_rating") {
  CHECK(label_from_rating(5) == Sentiment::kPositive);
  CHECK(label_from_rating(4) == Sentiment::kPositive);
  CHECK(label_from_rating(2) == Sentiment::kNegative);
  CHECK(label_from_rating(1) == Sentiment::kNegative);
  CHECK_FALSE(label_from_rating(3).has_value());
  CHECK_THROWS_AS(label_from_rating(0), ValidationError);
  CHECK_THROWS_AS(label_from_rating(6), ValidationError);
}

TEST_CASE("first_sentence") {
  CHECK(first_sentence("Great food. Bad service.") == "Great food.");
  CHECK(first_sentence("Most boring show I've ever been.") == "Most boring show I've ever been.");
  CHECK(first_sentence("no punctuation here") == "no punctuation here");
  CHECK(first_sentence("Wow!!! Really good.") == "Wow!!!");
  CHECK(first_sentence("  padded? yes ") == "padded?");
}

TEST_CASE("length_filter boundary") {
  CHECK(length_filter(Tokens(20, "w")));
  CHECK_FALSE(length_filter(Tokens(21, "w")));
  CHECK(length_filter(Tokens{"w"}));
}

TEST_CASE("confidence_filter boundary") {
  CHECK(confidence_filter(0.95));
  CHECK_FALSE(confidence_filter(0.79));
  CHECK(confidence_filter(0.8));
}

TEST_CASE("parse_review formats") {
  auto r = parse_review(R"({"text": "Nice place.", "rating": 5})");
  CHECK(r.text == "Nice place.");
  CHECK(r.rating == 5);
  r = parse_review("2\tNot great.");
  CHECK(r.rating == 2);
  CHECK(r.text == "Not great.");
  CHECK_THROWS_AS(parse_review("{not json"), FormatError);
  CHECK_THROWS_AS(parse_review(R"({"text": "x"})"), FormatError);
  CHECK_THROWS_AS(parse_review(R"({"text": "x", "rating": 9})"), FormatError);
  CHECK_THROWS_AS(parse_review("no tab here"), FormatError);
  CHECK_THROWS_AS(parse_review("x\ttext"), FormatError);
  CHECK_THROWS_AS(parse_review("4\t   "), FormatError);
}

TEST_CASE("build_vocab frequency order and ties") {
  FrequencyTable f{{"a", 5}, {"b", 4}, {"c", 3}, {"d", 2}};
  auto v = Vocabulary::build(f, 3);
  CHECK(v.size() == 3 + Vocabulary::kReservedCount);
  CHECK(v.contains("a"));
  CHECK(v.contains("b"));
  CHECK(v.contains("c"));
  CHECK_FALSE(v.contains("d"));
  CHECK(v.id("d") == Vocabulary::kUnk);

  auto tie = Vocabulary::build(FrequencyTable{{"b", 2}, {"a", 2}}, 1);
  CHECK(tie.contains("a"));
  CHECK_FALSE(tie.contains("b"));
}

TEST_CASE("vocabulary reserved block and bijection") {
  auto v = Vocabulary::build(FrequencyTable{{"x", 3}, {"y", 1}}, 10);
  CHECK(v.token(Vocabulary::kPad) == "<pad>");
  CHECK(v.token(Vocabulary::kUnk) == "<unk>");
  CHECK(v.token(Vocabulary::kBos) == "<s>");
  CHECK(v.token(Vocabulary::kEos) == "</s>");
  for (TokenId i = 0; i < static_cast<TokenId>(v.size()); ++i) CHECK(v.id(v.token(i)) == i);
  const Tokens words{"x", "zzz", "y"};
  const auto ids = v.encode(words);
  CHECK(ids[1] == Vocabulary::kUnk);
  CHECK(v.detokenize(ids) == "x <unk> y");
}

TEST_CASE("vocabulary file round trip") {
  auto v = Vocabulary::build(FrequencyTable{{"the", 9}, {"food", 4}, {"good", 4}}, 50000);
  std::stringstream s;
  v.save(s);
  const auto text = s.str();
  CHECK(text.rfind("#vocab reserved=<pad>,<unk>,<s>,</s> cap=50000\n", 0) == 0);
  auto back = Vocabulary::load(s);
  CHECK(back.size() == v.size());
  CHECK(back.fingerprint() == v.fingerprint());
  CHECK(back.id("good") == v.id("good"));
}

TEST_CASE("build_vocab rejects an empty corpus") {
  std::vector<Tokens> none;
  CHECK_THROWS_AS(build_vocab(none, 10), PreconditionError);
}

TEST_CASE("processed records round trip") {
  auto v = Vocabulary::build(FrequencyTable{{"the", 2}, {"food", 1}, {"is", 1}, {"good", 1}}, 100);
  Example e{v.encode(Tokens{"the", "food", "is", "good"}), Sentiment::kPositive, "The food is good", {}};
  std::vector<Example> examples{e};
  std::stringstream s;
  write_examples(s, examples, v);
  CHECK(s.str() ==
        R"({"tokens":["the","food","is","good"],"sentiment":"positive","raw_text":"The food is good"})"
        "\n");
  auto back = read_examples(s, v);
  REQUIRE(back.size() == 1);
  CHECK(back[0].tokens == e.tokens);
  CHECK(back[0].sentiment == e.sentiment);
  CHECK(back[0].raw_text == e.raw_text);
}

TEST_CASE("split assignment is a deterministic function of the text") {
  CHECK(assign_split("abc", 0.8, 0.1) == assign_split("abc", 0.8, 0.1));
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < 5000; ++i) {
    ++counts[static_cast<int>(assign_split("sentence " + std::to_string(i), 0.8, 0.1))];
  }
  CHECK(counts[0] == doctest::Approx(4000).epsilon(0.05));
  CHECK(counts[1] == doctest::Approx(500).epsilon(0.2));
  CHECK(counts[2] == doctest::Approx(500).epsilon(0.2));
}

TEST_CASE("ingestion of ten reviews with two over the length limit") {
  const auto dir = scratch_dir("ten");
  {
    std::ofstream raw(dir / "raw.jsonl");
    for (int i = 0; i < 8; ++i) {
      raw << R"({"text": "review number )" << i << R"( is fine.", "rating": )" << (i % 2 ? 5 : 1)
          << "}\n";
    }
    const std::string longtext(
        "one two three four five six seven eight nine ten eleven twelve thirteen fourteen "
        "fifteen sixteen seventeen eighteen nineteen twenty twentyone");
    raw << R"({"text": ")" << longtext << R"(", "rating": 4})" << "\n";
    raw << "2\t" << longtext << " and more\n";
  }
  const auto stats = ingest_file(dir / "raw.jsonl", dir / "out", IngestOptions{});
  CHECK(stats.total == 10);
  CHECK(stats.too_long == 2);
  CHECK(stats.kept == 8);
  CHECK(stats.train + stats.valid + stats.test == 8);
  CHECK(fs::exists(dir / "out" / "vocab.txt"));
  CHECK(fs::exists(dir / "out" / "stats.json"));
}

TEST_CASE("ingestion drops rating 3, is idempotent and keeps splits disjoint") {
  const auto dir = scratch_dir("idem");
  {
    std::ofstream raw(dir / "raw.tsv");
    for (int i = 0; i < 60; ++i) {
      raw << (1 + i % 5) << "\tthe place number " << i << " was visited. second sentence here\n";
    }
  }
  const auto a = ingest_file(dir / "raw.tsv", dir / "a", IngestOptions{});
  const auto b = ingest_file(dir / "raw.tsv", dir / "b", IngestOptions{});
  CHECK(a.neutral_rating == 12);
  CHECK(a.kept == 48);
  for (const char* f : {"train.jsonl", "valid.jsonl", "test.jsonl", "vocab.txt", "stats.json"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  const auto vocab = load_vocabulary(dir / "a" / "vocab.txt");
  const auto splits = load_splits(dir / "a", vocab);
  std::set<std::string> seen;
  std::size_t n = 0;
  for (const auto* part : {&splits.train, &splits.valid, &splits.test}) {
    for (const auto& e : *part) {
      seen.insert(e.raw_text);
      ++n;
      CHECK(e.tokens.size() <= kMaxSentenceWords);
      CHECK(e.raw_text.find("second") == std::string::npos);
      for (auto t : e.tokens) CHECK(t != Vocabulary::kPad);
    }
  }
  CHECK(seen.size() == n);
  CHECK(unknown_rate(splits) < 1.0);
}

TEST_CASE("ingestion aborts when more than ten percent of records are malformed") {
  const auto dir = scratch_dir("malformed");
  {
    std::ofstream raw(dir / "raw.jsonl");
    for (int i = 0; i < 8; ++i) raw << R"({"text": "fine text", "rating": 5})" << "\n";
    raw << "garbage\n";
    raw << "{broken\n";
  }
  CHECK_THROWS_AS(ingest_file(dir / "raw.jsonl", dir / "out", IngestOptions{}), FormatError);

  {
    std::ofstream raw(dir / "ok.jsonl");
    for (int i = 0; i < 10; ++i) raw << R"({"text": "fine text )" << i << R"(", "rating": 5})" << "\n";
    raw << "garbage\n";
  }
  const auto stats = ingest_file(dir / "ok.jsonl", dir / "out2", IngestOptions{});
  CHECK(stats.malformed == 1);
  CHECK(stats.kept == 10);
}

TEST_CASE("confidence filter needs a vocabulary") {
  const auto dir = scratch_dir("conf");
  {
    std::ofstream raw(dir / "raw.jsonl");
    raw << R"({"text": "fine", "rating": 5})" << "\n";
  }
  CHECK_THROWS_AS(ingest_file(dir / "raw.jsonl", dir / "out", IngestOptions{}, nullptr,
                              [](std::span<const TokenId>, Sentiment) { return 1.0; }),
                  ValidationError);
}

TEST_CASE("fifty-review fixture yields the hand-computed survivors and drop counts") {
  const auto check = testing::check_ingest_fixture(CYCLETRANS_FIXTURES,
                                                   fs::temp_directory_path() / "cycletrans_ingest50");
  CHECK_MESSAGE(check.stats_match, check.detail);
  CHECK_MESSAGE(check.survivors_match, check.detail);
}
