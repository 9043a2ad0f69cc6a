#include "commands.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cycletrans/corpus.hpp"
#include "cycletrans/cycle_trainer.hpp"
#include "cycletrans/error.hpp"
#include "cycletrans/evalkit.hpp"
#include "cycletrans/synth.hpp"

namespace cycletrans::cli {
namespace {

namespace fs = std::filesystem;

/// A required input is absent; names the subcommand that produces it.
class MissingArtifact : public std::runtime_error {
 public:
  MissingArtifact(const fs::path& path, const std::string& producer)
      : std::runtime_error("missing " + path.string() + "; run `cycletrans " + producer +
                           "` first") {}
};

void require(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path)) throw MissingArtifact(path, producer);
}

struct Dataset {
  Vocabulary vocab;
  DatasetSplits splits;
};

Dataset load_dataset(const RunConfig& rc) {
  const auto vocab_path = rc.data_dir / "vocab.txt";
  require(vocab_path, "ingest");
  for (const char* name : {"train.jsonl", "valid.jsonl", "test.jsonl"}) {
    require(rc.data_dir / name, "ingest");
  }
  Dataset d{load_vocabulary(vocab_path), {}};
  d.splits = load_splits(rc.data_dir, d.vocab);
  return d;
}

void check_fingerprint(const fs::path& path, std::uint64_t stored, const Vocabulary& vocab) {
  if (stored != vocab.fingerprint()) {
    throw FormatError(path.string() + " was trained with a different vocabulary than " +
                      "the current dataset");
  }
}

fs::path classifier_path(const RunConfig& rc) { return rc.checkpoint_dir / "classifier.ckpt"; }
fs::path neutralizer_path(const RunConfig& rc) { return rc.checkpoint_dir / "neutralizer.ckpt"; }
fs::path emotionalizer_path(const RunConfig& rc) {
  return rc.checkpoint_dir / "emotionalizer.ckpt";
}
fs::path textcnn_path(const RunConfig& rc) { return rc.checkpoint_dir / "textcnn.ckpt"; }

AttnClassifier load_classifier(const RunConfig& rc, const Vocabulary& vocab) {
  const auto path = classifier_path(rc);
  require(path, "pretrain-classifier");
  std::uint64_t fp = 0;
  auto model = AttnClassifier::load(path, &fp);
  check_fingerprint(path, fp, vocab);
  return model;
}

Neutralizer load_neutralizer(const RunConfig& rc, const Vocabulary& vocab) {
  const auto path = neutralizer_path(rc);
  require(path, "pretrain-neutralizer");
  std::uint64_t fp = 0;
  auto model = Neutralizer::load(path, &fp);
  check_fingerprint(path, fp, vocab);
  return model;
}

Emotionalizer load_emotionalizer(const RunConfig& rc, const Vocabulary& vocab) {
  const auto path = emotionalizer_path(rc);
  require(path, "pretrain-emotionalizer");
  std::uint64_t fp = 0;
  auto model = Emotionalizer::load(path, &fp);
  check_fingerprint(path, fp, vocab);
  return model;
}

TextCnn load_textcnn(const RunConfig& rc, const Vocabulary& vocab) {
  const auto path = textcnn_path(rc);
  require(path, "train-eval-classifier");
  std::uint64_t fp = 0;
  auto model = TextCnn::load(path, &fp);
  check_fingerprint(path, fp, vocab);
  return model;
}

ModelDims dims_for(const RunConfig& rc, const Vocabulary& vocab, std::uint64_t stream) {
  ModelDims d;
  d.vocab_size = static_cast<int>(vocab.size());
  d.embedding_size = rc.train.embedding_size;
  d.hidden_size = rc.train.hidden_size;
  d.seed = derive_seed(rc.train.seed, stream);
  return d;
}

std::vector<std::string> read_lines(const std::string& source) {
  std::vector<std::string> lines;
  std::string line;
  if (source == "-") {
    while (std::getline(std::cin, line)) lines.push_back(line);
    return lines;
  }
  std::ifstream in(source);
  if (!in) throw ValidationError("cannot read " + source);
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> gather_text(const std::vector<std::string>& texts,
                                     const std::string& input) {
  std::vector<std::string> lines = texts;
  if (!input.empty()) {
    auto more = read_lines(input);
    lines.insert(lines.end(), more.begin(), more.end());
  }
  if (lines.empty()) throw ValidationError("no input sentences; pass --text or --input");
  return lines;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

/// Greedy neutralize-then-emotionalize; blank input gives blank output.
std::string translate_sentence(const std::string& text, Sentiment target, const Vocabulary& vocab,
                               const Neutralizer& neutralizer, const Emotionalizer& emotionalizer,
                               int max_len) {
  std::vector<std::string> tokens;
  try {
    tokens = tokenize(text);
  } catch (const DegenerateInputError&) {
    return "";
  }
  if (tokens.size() > static_cast<std::size_t>(max_len)) tokens.resize(static_cast<std::size_t>(max_len));
  const auto ids = vocab.encode(tokens);
  const auto neutral = neutralizer.neutralize_greedy(ids);
  return vocab.detokenize(emotionalizer.generate(neutral.kept_tokens, target, max_len).tokens);
}

void print_epochs(std::ostream& out, const std::string& what, const std::vector<double>& losses) {
  for (std::size_t i = 0; i < losses.size(); ++i) {
    out << what << " epoch " << (i + 1) << " loss " << losses[i] << '\n';
  }
}

// ---------------------------------------------------------------------------
// Subcommands.

struct IngestArgs {
  std::string input;
  std::string classifier_vocab;
  bool confidence_filter = false;
};

int cmd_ingest(const RunConfig& rc, const IngestArgs& a, std::ostream& out) {
  if (!fs::exists(a.input)) throw ValidationError("cannot read " + a.input);
  IngestOptions options;
  options.vocab_cap = rc.train.vocab_cap;
  IngestStats stats;
  if (a.confidence_filter) {
    const fs::path vocab_path =
        a.classifier_vocab.empty() ? rc.checkpoint_dir / "vocab.txt" : fs::path(a.classifier_vocab);
    require(vocab_path, "pretrain-classifier");
    const auto vocab = load_vocabulary(vocab_path);
    const auto classifier = load_classifier(rc, vocab);
    stats = ingest_file(a.input, rc.data_dir, options, &vocab,
                        [&](std::span<const TokenId> t, Sentiment s) {
                          return classifier.confidence(t, s);
                        });
  } else {
    stats = ingest_file(a.input, rc.data_dir, options);
  }
  write_snapshot(rc, rc.data_dir);
  out << stats.to_json() << '\n';
  return kOk;
}

int cmd_synth(const RunConfig& rc, const std::string& spec_path, std::ostream& out) {
  TemplateSpec spec = default_template_spec();
  if (!spec_path.empty()) {
    std::ifstream in(spec_path);
    if (!in) throw ValidationError("cannot read template spec " + spec_path);
    std::stringstream buf;
    buf << in.rdbuf();
    spec = TemplateSpec::from_json(buf.str());
  }
  const auto corpus = synth_corpus(spec, spec.seed);
  save_splits(rc.data_dir, corpus.splits, corpus.vocab);
  save_vocabulary(rc.data_dir / "vocab.txt", corpus.vocab);
  {
    auto f = open_output(rc.data_dir / "synth_spec.json");
    f << spec.to_json() << '\n';
  }
  write_snapshot(rc, rc.data_dir);
  out << "wrote " << corpus.splits.train.size() << '/' << corpus.splits.valid.size() << '/'
      << corpus.splits.test.size() << " train/valid/test sentences, vocabulary "
      << corpus.vocab.size() << " to " << rc.data_dir.string() << '\n';
  return kOk;
}

void save_vocab_copy(const RunConfig& rc, const Vocabulary& vocab) {
  fs::create_directories(rc.checkpoint_dir);
  save_vocabulary(rc.checkpoint_dir / "vocab.txt", vocab);
}

int cmd_pretrain_classifier(const RunConfig& rc, std::ostream& out) {
  const auto data = load_dataset(rc);
  AttnClassifier model(dims_for(rc, data.vocab, 11));
  const auto losses = train_classifier(model, data.splits.train,
                                       pretrain_options(rc.train, rc.train.classifier_epochs, 1));
  print_epochs(out, "classifier", losses);
  fs::create_directories(rc.checkpoint_dir);
  model.save(classifier_path(rc), data.vocab.fingerprint());
  save_vocab_copy(rc, data.vocab);
  write_snapshot(rc, rc.checkpoint_dir);
  if (!data.splits.valid.empty()) {
    out << "validation accuracy " << classifier_accuracy(model, data.splits.valid) << '\n';
  }
  return kOk;
}

int cmd_pretrain_neutralizer(const RunConfig& rc, std::ostream& out) {
  const auto data = load_dataset(rc);
  const auto classifier = load_classifier(rc, data.vocab);
  Neutralizer model(dims_for(rc, data.vocab, 12));
  const auto losses = pretrain_neutralizer(
      model, classifier, data.splits.train,
      pretrain_options(rc.train, rc.train.neutralizer_epochs, 2));
  print_epochs(out, "neutralizer", losses);
  model.save(neutralizer_path(rc), data.vocab.fingerprint());
  write_snapshot(rc, rc.checkpoint_dir);
  if (!data.splits.valid.empty()) {
    out << "validation tagging agreement "
        << tagging_agreement(model, classifier, data.splits.valid) << '\n';
  }
  return kOk;
}

int cmd_pretrain_emotionalizer(const RunConfig& rc, std::ostream& out) {
  const auto data = load_dataset(rc);
  const auto classifier = load_classifier(rc, data.vocab);
  Emotionalizer model(dims_for(rc, data.vocab, 13));
  const auto losses = pretrain_emotionalizer(
      model, classifier, data.splits.train,
      pretrain_options(rc.train, rc.train.emotionalizer_epochs, 3));
  print_epochs(out, "emotionalizer", losses);
  model.save(emotionalizer_path(rc), data.vocab.fingerprint());
  write_snapshot(rc, rc.checkpoint_dir);
  return kOk;
}

int cmd_train(const RunConfig& rc, bool skip_pretraining, std::ostream& out) {
  const auto data = load_dataset(rc);
  TrainConfig config = rc.train;
  ModelBundle models = [&] {
    if (!skip_pretraining) return ModelBundle::create(config, static_cast<int>(data.vocab.size()));
    return ModelBundle{load_classifier(rc, data.vocab), load_neutralizer(rc, data.vocab),
                       load_emotionalizer(rc, data.vocab)};
  }();
  if (skip_pretraining) {
    config.classifier_epochs = 0;
    config.neutralizer_epochs = 0;
    config.emotionalizer_epochs = 0;
  }
  fs::create_directories(rc.log_dir);
  auto log = open_output(rc.log_dir / "rewards.jsonl");
  TrainHooks hooks;
  hooks.reward_log = &log;
  hooks.checkpoint_dir = rc.checkpoint_dir;
  hooks.vocab_fingerprint = data.vocab.fingerprint();
  hooks.progress = [&](const std::string& msg) { out << msg << std::endl; };
  train(models, data.splits.train, config, hooks);
  save_vocab_copy(rc, data.vocab);
  write_snapshot(rc, rc.checkpoint_dir);
  write_snapshot(rc, rc.log_dir);
  return kOk;
}

int cmd_train_eval_classifier(const RunConfig& rc, std::ostream& out) {
  const auto data = load_dataset(rc);
  TextCnnConfig tc;
  tc.vocab_size = static_cast<int>(data.vocab.size());
  tc.embedding_size = rc.train.embedding_size;
  tc.seed = derive_seed(rc.train.seed, 21);
  TextCnn model(tc);
  const auto losses =
      train_eval_classifier(model, data.splits.train, pretrain_options(rc.train, rc.eval_epochs, 22));
  print_epochs(out, "textcnn", losses);
  fs::create_directories(rc.checkpoint_dir);
  model.save(textcnn_path(rc), data.vocab.fingerprint());
  save_vocab_copy(rc, data.vocab);
  write_snapshot(rc, rc.checkpoint_dir);
  if (!data.splits.valid.empty()) {
    out << "validation accuracy " << eval_classifier_accuracy(model, data.splits.valid) << '\n';
  }
  return kOk;
}

struct TranslateArgs {
  std::vector<std::string> texts;
  std::string input;
  std::string to;
  std::string output;
};

int cmd_translate(const RunConfig& rc, const TranslateArgs& a, std::ostream& out) {
  const auto target = parse_sentiment(a.to);
  const auto vocab_path = rc.checkpoint_dir / "vocab.txt";
  require(vocab_path, "train");
  const auto vocab = load_vocabulary(vocab_path);
  const auto neutralizer = load_neutralizer(rc, vocab);
  const auto emotionalizer = load_emotionalizer(rc, vocab);
  const auto lines = gather_text(a.texts, a.input);
  std::ofstream file;
  if (!a.output.empty()) file = open_output(a.output);
  std::ostream& sink = a.output.empty() ? out : file;
  for (const auto& line : lines) {
    sink << translate_sentence(line, target, vocab, neutralizer, emotionalizer,
                               rc.train.max_decode_length)
         << '\n';
  }
  if (!a.output.empty()) write_snapshot(rc, fs::path(a.output).parent_path().empty()
                                                ? fs::path(".")
                                                : fs::path(a.output).parent_path());
  return kOk;
}

struct EvaluateArgs {
  std::string source;
  std::string generated;
  std::string targets;
  std::string report;
  std::string system = "cycletrans";
};

int cmd_evaluate(const RunConfig& rc, const EvaluateArgs& a, std::ostream& out) {
  const auto vocab_path = rc.checkpoint_dir / "vocab.txt";
  require(vocab_path, "train-eval-classifier");
  const auto vocab = load_vocabulary(vocab_path);
  const auto cnn = load_textcnn(rc, vocab);

  std::vector<std::string> sources;
  std::vector<std::string> generated;
  std::vector<Sentiment> targets;
  if (a.source.empty() && a.generated.empty() && a.targets.empty()) {
    // Translate the test split of the dataset to the opposite sentiment.
    const auto data = load_dataset(rc);
    const auto neutralizer = load_neutralizer(rc, vocab);
    const auto emotionalizer = load_emotionalizer(rc, vocab);
    fs::create_directories(rc.log_dir);
    auto gen_file = open_output(rc.log_dir / "generated.txt");
    for (const auto& ex : data.splits.test) {
      sources.push_back(ex.raw_text);
      targets.push_back(opposite(ex.sentiment));
      generated.push_back(translate_sentence(ex.raw_text, targets.back(), vocab, neutralizer,
                                             emotionalizer, rc.train.max_decode_length));
      gen_file << generated.back() << '\n';
    }
  } else {
    if (a.source.empty() || a.generated.empty() || a.targets.empty()) {
      throw ValidationError("evaluate needs --source, --generated and --targets together");
    }
    sources = read_lines(a.source);
    generated = read_lines(a.generated);
    for (const auto& t : read_lines(a.targets)) targets.push_back(parse_sentiment(t));
  }
  const auto report = evaluate(sources, generated, targets, cnn, vocab);
  const fs::path report_path = a.report.empty() ? rc.log_dir / "eval_report.json" : fs::path(a.report);
  {
    auto f = open_output(report_path);
    f << report.to_json() << '\n';
  }
  write_snapshot(rc, report_path.parent_path().empty() ? fs::path(".") : report_path.parent_path());
  out << report.to_table(a.system);
  return kOk;
}

struct InspectArgs {
  std::vector<std::string> texts;
  std::string input;
};

int cmd_inspect_attention(const RunConfig& rc, const InspectArgs& a, std::ostream& out) {
  const auto vocab_path = rc.checkpoint_dir / "vocab.txt";
  require(vocab_path, "pretrain-classifier");
  const auto vocab = load_vocabulary(vocab_path);
  const auto classifier = load_classifier(rc, vocab);
  for (const auto& line : gather_text(a.texts, a.input)) {
    std::vector<std::string> tokens;
    try {
      tokens = tokenize(line);
    } catch (const DegenerateInputError&) {
      out << '\n';
      continue;
    }
    const auto result = classifier.classify(vocab.encode(tokens));
    const auto& att = result.attention;
    out << to_string(result.label()) << ' ' << std::fixed << std::setprecision(3)
        << result.prob(result.label()) << " |";
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      out << ' ' << (att.mask[i] ? "" : "[") << tokens[i] << (att.mask[i] ? "" : "]") << '/'
          << att.weights[i];
    }
    out << std::defaultfloat << '\n';
  }
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& env) {
  CLI::App app{"Unpaired sentiment-to-sentiment translation with cycled reinforcement learning",
               "cycletrans"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file;
  app.add_option("--config", config_file, "JSON config file (also CYCLETRANS_CONFIG)");
  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option*> flag_options;
  const RunConfig defaults = preset("yelp");
  for (const auto& key : config_keys()) {
    auto* opt = app.add_option(flag_name(key.name), flag_values[key.name], key.description);
    opt->type_name(key.type)->default_str(get_key(defaults, key.name));
    flag_options[key.name] = opt;
  }
  auto* no_baseline = app.add_flag("--no-baseline", "plain REINFORCE without the reward baseline");

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "filter raw reviews into train/valid/test sentences");
  c_ingest->add_option("--input", ingest.input, "raw reviews, JSON lines or rating<TAB>text")->required();
  c_ingest->add_flag("--confidence-filter", ingest.confidence_filter,
                     "drop sentences the trained classifier labels with confidence below 0.8");
  c_ingest->add_option("--classifier-vocab", ingest.classifier_vocab,
                       "vocabulary of the classifier (default <checkpoint-dir>/vocab.txt)");

  std::string synth_spec;
  auto* c_synth = app.add_subcommand("synth", "generate the template corpus");
  c_synth->add_option("--spec", synth_spec, "template spec JSON (default: built-in templates)");

  auto* c_pc = app.add_subcommand("pretrain-classifier", "train the attention classifier");
  auto* c_pn = app.add_subcommand("pretrain-neutralizer", "pre-train the neutralization tagger");
  auto* c_pe = app.add_subcommand("pretrain-emotionalizer", "pre-train the encoder and decoders");

  bool skip_pretraining = false;
  auto* c_train = app.add_subcommand("train", "pre-train all modules, then cycled training");
  c_train->add_flag("--skip-pretraining", skip_pretraining,
                    "start from the checkpoints in the checkpoint directory");

  auto* c_tec = app.add_subcommand("train-eval-classifier", "train the TextCNN used by evaluate");

  TranslateArgs translate;
  auto* c_translate = app.add_subcommand("translate", "rewrite sentences with a target sentiment");
  c_translate->add_option("--to", translate.to, "target sentiment: positive or negative")->required();
  c_translate->add_option("--text", translate.texts, "sentence to translate (repeatable)");
  c_translate->add_option("--input", translate.input, "file with one sentence per line, - for stdin");
  c_translate->add_option("--output", translate.output, "output file (default stdout)");

  EvaluateArgs evaluate_args;
  auto* c_eval = app.add_subcommand(
      "evaluate", "score transfers: ACC, BLEU and G-score (default: translate the test split)");
  c_eval->add_option("--source", evaluate_args.source, "source sentences, one per line");
  c_eval->add_option("--generated", evaluate_args.generated, "generated sentences, one per line");
  c_eval->add_option("--targets", evaluate_args.targets, "target sentiment per line");
  c_eval->add_option("--report", evaluate_args.report,
                     "JSON report path (default <log-dir>/eval_report.json)");
  c_eval->add_option("--system", evaluate_args.system, "system name in the table");

  InspectArgs inspect;
  auto* c_inspect = app.add_subcommand("inspect-attention",
                                       "show attention weights; removed words in brackets");
  c_inspect->add_option("--text", inspect.texts, "sentence (repeatable)");
  c_inspect->add_option("--input", inspect.input, "file with one sentence per line, - for stdin");

  std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    ConfigSources sources;
    sources.env = env;
    if (!config_file.empty()) {
      sources.file = config_file;
    } else if (env) {
      if (auto f = env("CYCLETRANS_CONFIG")) sources.file = *f;
    }
    for (const auto& [key, opt] : flag_options) {
      if (opt->count() > 0) sources.flags[key] = flag_values[key];
    }
    if (no_baseline->count() > 0) sources.flags["baseline"] = "false";
    const RunConfig rc = resolve_config(sources);

    if (c_ingest->parsed()) return cmd_ingest(rc, ingest, out);
    if (c_synth->parsed()) return cmd_synth(rc, synth_spec, out);
    if (c_pc->parsed()) return cmd_pretrain_classifier(rc, out);
    if (c_pn->parsed()) return cmd_pretrain_neutralizer(rc, out);
    if (c_pe->parsed()) return cmd_pretrain_emotionalizer(rc, out);
    if (c_train->parsed()) return cmd_train(rc, skip_pretraining, out);
    if (c_tec->parsed()) return cmd_train_eval_classifier(rc, out);
    if (c_translate->parsed()) return cmd_translate(rc, translate, out);
    if (c_eval->parsed()) return cmd_evaluate(rc, evaluate_args, out);
    if (c_inspect->parsed()) return cmd_inspect_attention(rc, inspect, out);
    err << "error[usage]: no subcommand\n";
    return kUsage;
  } catch (const MissingArtifact& e) {
    err << "error[missing-artifact]: " << e.what() << '\n';
    return kMissingArtifact;
  } catch (const ValidationError& e) {
    err << "error[invalid-argument]: " << e.what() << '\n';
    return kUsage;
  } catch (const FormatError& e) {
    err << "error[bad-data]: " << e.what() << '\n';
    return kBadData;
  } catch (const DegenerateInputError& e) {
    err << "error[bad-data]: " << e.what() << '\n';
    return kBadData;
  } catch (const TrainingError& e) {
    err << "error[training]: " << e.what() << '\n';
    return kTrainingFailed;
  } catch (const PreconditionError& e) {
    err << "error[precondition]: " << e.what() << '\n';
    return kFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace cycletrans::cli
