#include "skillex/cli.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <unordered_set>

#include <CLI11.hpp>
#include <json.hpp>

#include "skillex/classifier.h"
#include "skillex/embeddings.h"
#include "skillex/evaluation.h"
#include "skillex/matcher.h"
#include "skillex/ranking.h"
#include "skillex/related.h"
#include "skillex/sampler.h"
#include "skillex/taxonomy.h"

namespace skillex::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const std::vector<double> kDefaultGrid = {0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty()) {
    out << content;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorKind::kIo, "cannot write '" + path + "'");
  file << content;
  if (!file) throw Error(ErrorKind::kIo, "write failed for '" + path + "'");
}

std::string fixed(double value, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  return buf;
}

std::string short_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", value);
  return buf;
}

// key = value lines; '#' starts a comment. Keys name long flags of the
// subcommand, with or without the leading dashes.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + " line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    while (!key.empty() && key.front() == '-') key.erase(0, 1);
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
        value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) throw UsageError(path + " line " + std::to_string(line_no) + ": empty key");
    entries.emplace_back(std::move(key), std::move(value));
  }
  return entries;
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == flag || a.rfind(flag + "=", 0) == 0;
  });
}

// Appends config entries for flags the command line does not already set.
void merge_config(CLI::App& sub, std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return;
  const auto entries = read_config(path);
  std::vector<std::string> extra;
  for (const auto& [key, value] : entries) {
    const std::string flag = "--" + key;
    if (key == "config") throw UsageError("config files cannot nest");
    const CLI::Option* opt = sub.get_option_no_throw(flag);
    if (!opt) throw UsageError(path + ": unknown key '" + key + "' for " + sub.get_name());
    if (given_on_command_line(args, flag)) continue;
    if (opt->get_expected_max() == 0) {
      if (value == "true" || value == "1" || value == "yes") extra.push_back(flag);
      else if (!(value == "false" || value == "0" || value == "no")) {
        throw UsageError(path + ": '" + key + "' expects true or false");
      }
      continue;
    }
    extra.push_back(flag);
    extra.push_back(value);
  }
  args.insert(args.end(), extra.begin(), extra.end());
}

std::vector<Strategy> parse_strategies(const std::vector<std::string>& names) {
  std::vector<Strategy> out;
  for (const auto& name : names) {
    if (name == "all") {
      out.assign(std::begin(kAllStrategies), std::end(kAllStrategies));
      continue;
    }
    const Strategy s = parse_strategy(name);
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<Split> parse_split_filter(const std::string& name) {
  if (name == "all") return std::nullopt;
  return parse_split(name);
}

std::vector<GoldSentence> filter_split(std::vector<GoldSentence> bench,
                                       std::optional<Split> split) {
  if (!split) return bench;
  std::erase_if(bench, [&](const GoldSentence& s) { return s.split != *split; });
  return bench;
}

// Options shared by everything that trains.
struct TrainFlags {
  std::string taxonomy;
  std::string positives;
  std::string corpus;
  std::string embeddings;
  std::string label_embeddings;
  std::vector<std::string> index_files;
  std::uint32_t hash_dim = 256;
  std::size_t negatives_per_positive = 10;
  std::uint64_t seed = 0;
  double inverse_reg_c = 0.1;
  std::size_t max_iterations = 500;
  double grad_tolerance = 1e-6;
  std::vector<double> strategy_weights;
  int workers = 1;
};

void add_train_flags(CLI::App* sub, TrainFlags& f) {
  sub->add_option("--taxonomy", f.taxonomy, "Taxonomy JSONL")->required()->check(CLI::ExistingFile);
  sub->add_option("--positives", f.positives, "Positive sets JSONL from 'label'")
      ->required()
      ->check(CLI::ExistingFile);
  auto* corpus = sub->add_option("--corpus", f.corpus,
                                 "Corpus JSONL; sentences are hash-encoded")
                     ->check(CLI::ExistingFile);
  auto* store = sub->add_option("--embeddings", f.embeddings,
                                "Sentence embedding store (replaces hash encoding)")
                    ->check(CLI::ExistingFile);
  corpus->excludes(store);
  sub->add_option("--hash-dim", f.hash_dim, "Hash encoder dimension")
      ->capture_default_str()
      ->check(CLI::Range(8u, 1u << 24));
  sub->add_option("--label-embeddings", f.label_embeddings,
                  "Skill label store for the embedding strategy (default: hash-encoded labels)")
      ->check(CLI::ExistingFile);
  sub->add_option("--index", f.index_files,
                  "Prebuilt related-skill index; strategies without one are built on the fly")
      ->delimiter(',')
      ->check(CLI::ExistingFile);
  sub->add_option("--negatives-per-positive,-k", f.negatives_per_positive,
                  "Negatives drawn per positive")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--seed", f.seed, "Sampling seed")->capture_default_str();
  sub->add_option("--C", f.inverse_reg_c, "Inverse L2 regularization strength")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--max-iter", f.max_iterations, "Gradient descent iteration cap")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--tol", f.grad_tolerance, "Stop when the gradient max-norm falls below")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--strategy-weights", f.strategy_weights,
                  "Hard budget weights for siblings,levenshtein,embedding (default equal)")
      ->delimiter(',')
      ->expected(3);
  sub->add_option("--workers", f.workers, "Worker threads")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

struct TrainData {
  Taxonomy taxonomy;
  PositiveSets positives;
  EmbeddingStore sentences;
  bool hashed = true;
  std::map<Strategy, RelatedIndex> indices;
};

TrainData load_train_data(const TrainFlags& f) {
  if (f.corpus.empty() && f.embeddings.empty()) {
    throw UsageError("one of --corpus or --embeddings is required");
  }
  TrainData d;
  d.taxonomy = load_taxonomy(f.taxonomy);
  d.positives = read_positive_sets(f.positives);
  if (!f.embeddings.empty()) {
    d.hashed = false;
    d.sentences = read_store(f.embeddings);
  } else {
    const SamplingContext context(d.positives);
    std::vector<Sentence> corpus = read_corpus(f.corpus);
    std::erase_if(corpus, [&](const Sentence& s) {
      return !std::binary_search(context.sentence_ids().begin(), context.sentence_ids().end(),
                                 s.id);
    });
    std::vector<Vector> vectors(corpus.size());
    parallel_for(corpus.size(), f.workers,
                 [&](std::size_t i) { vectors[i] = hash_encode(corpus[i].text, f.hash_dim); });
    d.sentences = EmbeddingStore(f.hash_dim);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      d.sentences.add(corpus[i].id, std::move(vectors[i]));
    }
  }
  for (const auto& path : f.index_files) {
    RelatedIndex index = read_related_index(path);
    const Strategy s = index.strategy;
    d.indices.insert_or_assign(s, std::move(index));
  }
  return d;
}

EmbeddingStore label_store(const Taxonomy& taxonomy, const std::string& path,
                           std::uint32_t hash_dim) {
  if (!path.empty()) return read_store(path);
  EmbeddingStore store(hash_dim);
  for (const auto& skill : taxonomy.skills()) {
    store.add(skill.id, hash_encode(skill.preferred_label, hash_dim));
  }
  return store;
}

void ensure_indices(TrainData& d, const TrainFlags& f, const std::vector<Strategy>& strategies) {
  for (Strategy s : strategies) {
    if (d.indices.count(s)) continue;
    IndexOptions options;
    options.workers = f.workers;
    std::optional<EmbeddingStore> labels;
    if (s == Strategy::kEmbedding) {
      if (f.label_embeddings.empty() && !d.hashed) {
        throw UsageError("the embedding strategy needs --label-embeddings or a prebuilt --index");
      }
      labels = label_store(d.taxonomy, f.label_embeddings, f.hash_dim);
    }
    d.indices.emplace(s, build_related_index(d.taxonomy, s, labels ? &*labels : nullptr, options));
  }
}

SamplingConfig sampling_config(const TrainFlags& f, double hard_fraction,
                               std::vector<Strategy> strategies) {
  SamplingConfig c;
  c.negatives_per_positive = f.negatives_per_positive;
  c.hard_fraction = hard_fraction;
  c.strategies = hard_fraction > 0.0 ? std::move(strategies) : std::vector<Strategy>{};
  c.seed = f.seed;
  if (!f.strategy_weights.empty()) {
    c.strategy_weights = {f.strategy_weights[0], f.strategy_weights[1], f.strategy_weights[2]};
  }
  return c;
}

TrainConfig train_config(const TrainFlags& f, const TrainData& d) {
  TrainConfig c;
  c.inverse_reg_c = f.inverse_reg_c;
  c.max_iterations = f.max_iterations;
  c.grad_tolerance = f.grad_tolerance;
  c.dim = d.sentences.dim();
  c.encoder = d.hashed ? "hash" : "store";
  return c;
}

ModelSet train_with(TrainData& d, const TrainFlags& f, double hard_fraction,
                    const std::vector<Strategy>& strategies, const std::string& dump_path = {}) {
  const SamplingConfig sampling = sampling_config(f, hard_fraction, strategies);
  std::vector<const RelatedIndex*> indices;
  if (hard_fraction > 0.0) {
    ensure_indices(d, f, sampling.strategies);
    for (Strategy s : sampling.strategies) indices.push_back(&d.indices.at(s));
  }
  TrainAllOptions options;
  options.workers = f.workers;
  options.training_dump_path = dump_path;
  return train_all(d.taxonomy, d.positives, d.sentences, indices, sampling, train_config(f, d),
                   options);
}

// Encodes benchmark sentences the same way the models were trained.
std::unique_ptr<SentenceEncoder> benchmark_encoder(const std::string& encoder_name,
                                                   std::uint32_t dim,
                                                   const std::string& store_path,
                                                   std::optional<EmbeddingStore>& holder,
                                                   bool hash_fallback = false) {
  if (!store_path.empty()) {
    holder = read_store(store_path);
    if (hash_fallback && (encoder_name != "hash" || holder->dim() != dim)) {
      throw UsageError("--hash-fallback needs models trained on hash vectors of the store's dim");
    }
    return std::make_unique<StoreEncoder>(*holder, hash_fallback);
  }
  if (encoder_name != "hash") {
    throw UsageError("models were trained on stored embeddings; pass --embeddings");
  }
  return std::make_unique<HashEncoder>(dim);
}

std::string metric_cells(const GroupMetrics& g) {
  return fixed(g.mrr) + "," + fixed(100.0 * g.rp5) + "," + fixed(100.0 * g.rp10);
}

struct Commands {
  // import-esco
  std::string esco_skills, esco_relations;
  // shared paths
  std::string taxonomy, corpus, positives, stoplist, models, benchmark, embeddings, out;
  std::string dump_training, label_embeddings, text;
  std::size_t cap = 1000;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string strategy;
  std::size_t limit = kDefaultNeighborLimit;
  std::uint32_t hash_dim = 256;
  std::size_t top_k = 10;
  bool hash_fallback = false;
  std::string split = "all";
  double hard_fraction = 0.0;
  std::vector<std::string> strategies;
  std::vector<double> fractions = kDefaultGrid;
  std::vector<std::string> inputs;
  TrainFlags train;
};

void cmd_import_esco(const Commands& c, std::ostream& out) {
  const EscoImport imported = import_esco_csv(c.esco_skills, c.esco_relations);
  write_taxonomy(imported.taxonomy, c.out);
  out << "skills " << imported.taxonomy.size() << ", skipped relations "
      << imported.skipped_relations << '\n';
}

void cmd_label(const Commands& c, std::ostream& out) {
  const Taxonomy taxonomy = load_taxonomy(c.taxonomy);
  std::vector<std::string> stoplist;
  if (!c.stoplist.empty()) stoplist = read_lines(c.stoplist);
  const Matcher matcher(taxonomy, stoplist);
  LabelOptions options;
  options.cap = c.cap;
  options.seed = c.seed;
  options.workers = c.workers;
  const PositiveSets positives = label_corpus_file(matcher, c.corpus, options);
  write_positive_sets(positives, c.out);
  out << "patterns " << matcher.pattern_count() << ", skills with positives "
      << positives.sets.size() << '\n';
}

void cmd_stats(const Commands& c, std::ostream& out) {
  const Taxonomy taxonomy = load_taxonomy(c.taxonomy);
  const PositiveSets positives = read_positive_sets(c.positives);
  const CorpusStats stats = corpus_stats(positives, taxonomy);
  nlohmann::ordered_json j;
  j["skills"] = stats.skills;
  j["nonempty_skills"] = stats.nonempty_skills;
  j["mean_positives_all_skills"] = stats.mean_positives_all_skills;
  j["mean_positives_nonempty"] = stats.mean_positives_nonempty;
  j["fraction_skills_le_10"] = stats.fraction_skills_le_10;
  j["cap"] = positives.cap;
  emit(c.out, j.dump() + "\n", out);
}

void cmd_build_index(const Commands& c, std::ostream& out) {
  const Taxonomy taxonomy = load_taxonomy(c.taxonomy);
  const Strategy strategy = parse_strategy(c.strategy);
  std::optional<EmbeddingStore> labels;
  if (strategy == Strategy::kEmbedding) {
    labels = label_store(taxonomy, c.label_embeddings, c.hash_dim);
  }
  IndexOptions options;
  options.limit = c.limit;
  options.workers = c.workers;
  const RelatedIndex index =
      build_related_index(taxonomy, strategy, labels ? &*labels : nullptr, options);
  write_related_index(index, c.out);
  out << "skills " << index.neighbors.size() << '\n';
}

void cmd_train(const Commands& c, std::ostream& out) {
  TrainData d = load_train_data(c.train);
  const auto strategies =
      parse_strategies(c.strategies.empty() ? std::vector<std::string>{"all"} : c.strategies);
  const ModelSet models = train_with(d, c.train, c.hard_fraction, strategies, c.dump_training);
  write_model_set(models, c.out);
  out << "trained " << models.classifiers.size() << ", untrained " << models.untrained.size()
      << ", fingerprint " << models.fingerprint << '\n';
}

EvalReport evaluate_models(const ModelSet& models, const std::vector<GoldSentence>& bench,
                           const std::string& store_path, int workers,
                           bool hash_fallback = false) {
  std::optional<EmbeddingStore> holder;
  const auto encoder =
      benchmark_encoder(models.encoder, models.dim, store_path, holder, hash_fallback);
  return evaluate(models, bench, *encoder, workers);
}

void cmd_sweep(const Commands& c, std::ostream& out) {
  TrainData d = load_train_data(c.train);
  const auto bench = filter_split(load_benchmark(c.benchmark), parse_split_filter(c.split));
  std::vector<std::vector<Strategy>> curves;
  std::vector<std::string> names = c.strategies.empty() ? std::vector<std::string>{"siblings"}
                                                         : c.strategies;
  for (const auto& name : names) curves.push_back(parse_strategies({name}));

  std::optional<EvalReport> baseline;
  std::string csv = "strategy,hard_fraction,dataset,split,mrr,rp5,rp10\n";
  for (std::size_t s = 0; s < curves.size(); ++s) {
    for (double fraction : c.fractions) {
      EvalReport report;
      if (fraction == 0.0) {
        if (!baseline) {
          baseline = evaluate_models(train_with(d, c.train, 0.0, {}), bench, c.embeddings,
                                     c.train.workers);
        }
        report = *baseline;
      } else {
        report = evaluate_models(train_with(d, c.train, fraction, curves[s]), bench,
                                 c.embeddings, c.train.workers);
      }
      for (const auto& [group, g] : report.groups) {
        csv += names[s] + "," + short_double(fraction) + "," + to_string(group.first) + "," +
               to_string(group.second) + "," + metric_cells(g) + "\n";
      }
    }
  }
  emit(c.out, csv, out);
}

void cmd_ablate(const Commands& c, std::ostream& out) {
  TrainData d = load_train_data(c.train);
  const auto bench = filter_split(load_benchmark(c.benchmark), parse_split_filter(c.split));
  std::vector<Split> splits;
  for (const auto& s : bench) {
    if (std::find(splits.begin(), splits.end(), s.split) == splits.end()) splits.push_back(s.split);
  }
  std::sort(splits.begin(), splits.end());

  const std::vector<Strategy> all(std::begin(kAllStrategies), std::end(kAllStrategies));
  std::vector<std::pair<std::string, std::vector<Strategy>>> variants = {{"all", all}};
  for (Strategy drop : all) {
    std::vector<Strategy> rest;
    for (Strategy s : all) {
      if (s != drop) rest.push_back(s);
    }
    variants.emplace_back(std::string("without_") + to_string(drop), rest);
  }

  std::string csv = "model,split,tech_mrr,tech_rp5,tech_rp10,house_mrr,house_rp5,house_rp10\n";
  for (const auto& [name, strategies] : variants) {
    const EvalReport report = evaluate_models(train_with(d, c.train, c.hard_fraction, strategies),
                                              bench, c.embeddings, c.train.workers);
    for (Split split : splits) {
      csv += name + "," + to_string(split);
      for (Dataset dataset : {Dataset::kTech, Dataset::kHouse}) {
        auto it = report.groups.find({dataset, split});
        csv += it == report.groups.end() ? std::string(",,,") : "," + metric_cells(it->second);
      }
      csv += "\n";
    }
  }
  emit(c.out, csv, out);
}

void cmd_evaluate(const Commands& c, std::ostream& out) {
  const ModelSet models = read_model_set(c.models);
  const auto bench = filter_split(load_benchmark(c.benchmark), parse_split_filter(c.split));
  const EvalReport report =
      evaluate_models(models, bench, c.embeddings, c.workers, c.hash_fallback);
  emit(c.out, report_json(report) + "\n", out);
}

void cmd_extract(const Commands& c, std::ostream& out) {
  const ModelSet models = read_model_set(c.models);
  std::optional<EmbeddingStore> holder;
  const auto encoder =
      benchmark_encoder(models.encoder, models.dim, c.embeddings, holder, c.hash_fallback);
  std::vector<Sentence> sentences;
  if (!c.corpus.empty()) sentences = read_corpus(c.corpus);
  else sentences.push_back({"text", c.text});
  std::vector<std::string> lines(sentences.size());
  parallel_for(sentences.size(), c.workers, [&](std::size_t i) {
    lines[i] = prediction_json(
        extract(sentences[i].id, sentences[i].text, *encoder, models, c.top_k));
  });
  std::string content;
  for (const auto& line : lines) content += line + "\n";
  emit(c.out, content, out);
}

void cmd_audit(const Commands& c, std::ostream& out) {
  const Taxonomy taxonomy = load_taxonomy(c.taxonomy);
  std::vector<std::string> stoplist;
  if (!c.stoplist.empty()) stoplist = read_lines(c.stoplist);
  const Matcher matcher(taxonomy, stoplist);
  const auto bench = load_benchmark(c.benchmark);
  std::vector<Sentence> sentences;
  sentences.reserve(bench.size());
  for (const auto& s : bench) sentences.push_back({s.sentence_id, s.text});
  LabelOptions options;
  options.cap = std::numeric_limits<std::size_t>::max();
  options.workers = c.workers;
  const PositiveSets labels = label_corpus(matcher, sentences, options);
  const SupervisionQuality q = supervision_quality(labels, bench);
  nlohmann::ordered_json j;
  j["sentences"] = bench.size();
  j["precision"] = q.precision;
  j["recall"] = q.recall;
  j["auto_pairs"] = q.auto_pairs;
  j["gold_pairs"] = q.gold_pairs;
  j["overlap"] = q.overlap;
  j["precision_undefined"] = q.precision_undefined;
  j["recall_undefined"] = q.recall_undefined;
  emit(c.out, j.dump() + "\n", out);
}

void cmd_convert(const Commands& c, std::ostream& out, std::ostream& err) {
  std::optional<Taxonomy> taxonomy;
  if (!c.taxonomy.empty()) taxonomy = load_taxonomy(c.taxonomy);
  std::vector<GoldSentence> all;
  for (const auto& input : c.inputs) {
    const auto first = input.find(':');
    const auto second = first == std::string::npos ? first : input.find(':', first + 1);
    if (second == std::string::npos) {
      throw UsageError("--input expects DATASET:SPLIT:PATH, got '" + input + "'");
    }
    const Dataset dataset = parse_dataset(input.substr(0, first));
    const Split split = parse_split(input.substr(first + 1, second - first - 1));
    const std::string path = input.substr(second + 1);
    ReleasedConversion conv =
        convert_released_benchmark(path, dataset, split, taxonomy ? &*taxonomy : nullptr);
    if (conv.unmapped_labels || conv.unlocated_spans) {
      err << path << ": " << conv.unmapped_labels << " unmapped labels, " << conv.unlocated_spans
          << " unlocated spans\n";
    }
    for (auto& s : conv.sentences) all.push_back(std::move(s));
  }
  std::unordered_set<std::string> seen;
  for (const auto& s : all) {
    if (!seen.insert(s.sentence_id).second) {
      throw Error(ErrorKind::kDuplicateId, "sentence id '" + s.sentence_id + "'");
    }
  }
  write_benchmark(all, c.out);
  out << "dataset,split,sentences,spans,labeled_spans\n";
  for (const auto& [group, n] : benchmark_counts(all)) {
    out << to_string(group.first) << ',' << to_string(group.second) << ',' << n.sentences << ','
        << n.spans << ',' << n.labeled_spans << '\n';
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Skill extraction trained from distantly supervised job-posting sentences"};
  app.name("skillex");
  app.require_subcommand(1);
  app.fallthrough(false);
  Commands c;
  std::string config_path;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path,
                    "key = value file of flags; command-line flags take precedence")
        ->check(CLI::ExistingFile);
  };
  auto add_out = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--out,-o", c.out,
                                required ? "Output path" : "Output path (default: stdout)");
    if (required) opt->required();
  };
  auto add_workers = [&](CLI::App* sub) {
    sub->add_option("--workers", c.workers, "Worker threads")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  };
  const auto strategy_names = std::vector<std::string>{"siblings", "levenshtein", "embedding"};
  auto strategy_list_names = strategy_names;
  strategy_list_names.push_back("all");

  auto* import_esco = app.add_subcommand("import-esco", "Convert ESCO CSV exports to taxonomy JSONL");
  import_esco->add_option("--skills", c.esco_skills, "ESCO skills CSV")
      ->required()
      ->check(CLI::ExistingFile);
  import_esco->add_option("--relations", c.esco_relations, "ESCO broader-relations CSV")
      ->required()
      ->check(CLI::ExistingFile);
  add_out(import_esco, true);
  add_config(import_esco);

  auto* label = app.add_subcommand("label", "Distantly label a corpus with taxonomy surface forms");
  label->add_option("--taxonomy", c.taxonomy, "Taxonomy JSONL")->required()->check(CLI::ExistingFile);
  label->add_option("--corpus", c.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  label->add_option("--stoplist", c.stoplist, "Surface forms to ignore, one per line")
      ->check(CLI::ExistingFile);
  label->add_option("--cap", c.cap, "Maximum positives per skill")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  label->add_option("--seed", c.seed, "Seed for subsampling capped skills")->capture_default_str();
  add_workers(label);
  add_out(label, true);
  add_config(label);

  auto* stats = app.add_subcommand("stats", "Positive-set statistics");
  stats->add_option("--taxonomy", c.taxonomy, "Taxonomy JSONL")->required()->check(CLI::ExistingFile);
  stats->add_option("--positives", c.positives, "Positive sets JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  add_out(stats, false);
  add_config(stats);

  auto* build_index = app.add_subcommand("build-index", "Build a related-skill index");
  build_index->add_option("--taxonomy", c.taxonomy, "Taxonomy JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  build_index->add_option("--strategy", c.strategy, "Relation strategy")
      ->required()
      ->check(CLI::IsMember(strategy_names));
  build_index->add_option("--limit", c.limit, "Neighbours kept per skill (0: unbounded)")
      ->capture_default_str();
  build_index->add_option("--label-embeddings", c.label_embeddings,
                          "Skill label store (embedding strategy; default: hash-encoded labels)")
      ->check(CLI::ExistingFile);
  build_index->add_option("--hash-dim", c.hash_dim, "Hash dimension for label vectors")
      ->capture_default_str()
      ->check(CLI::Range(8u, 1u << 24));
  add_workers(build_index);
  add_out(build_index, true);
  add_config(build_index);

  auto* train = app.add_subcommand("train", "Train one classifier per skill");
  add_train_flags(train, c.train);
  train->add_option("--hard-fraction", c.hard_fraction, "Share of negatives drawn hard")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  train->add_option("--strategy", c.strategies, "Hard negative strategies (default: all)")
      ->delimiter(',')
      ->check(CLI::IsMember(strategy_list_names));
  train->add_option("--dump-training", c.dump_training, "Write sampled training sets as JSONL");
  add_out(train, true);
  add_config(train);

  auto* sweep = app.add_subcommand("sweep", "Evaluate a grid of hard fractions per strategy");
  add_train_flags(sweep, c.train);
  sweep->add_option("--benchmark", c.benchmark, "Benchmark JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--benchmark-embeddings", c.embeddings,
                    "Store holding benchmark sentence vectors")
      ->check(CLI::ExistingFile);
  sweep->add_option("--fractions", c.fractions, "Hard fractions")
      ->delimiter(',')
      ->check(CLI::Range(0.0, 1.0));
  sweep->add_option("--strategy", c.strategies, "One curve per value (default: siblings)")
      ->delimiter(',')
      ->check(CLI::IsMember(strategy_list_names));
  sweep->add_option("--split", c.split, "Benchmark split")
      ->capture_default_str()
      ->check(CLI::IsMember({"all", "val", "test"}));
  add_out(sweep, false);
  add_config(sweep);

  auto* ablate = app.add_subcommand("ablate", "Train with all strategies and with each one left out");
  add_train_flags(ablate, c.train);
  ablate->add_option("--benchmark", c.benchmark, "Benchmark JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  ablate->add_option("--benchmark-embeddings", c.embeddings,
                     "Store holding benchmark sentence vectors")
      ->check(CLI::ExistingFile);
  c.hard_fraction = 0.0;
  double ablate_fraction = 0.05;
  ablate->add_option("--hard-fraction", ablate_fraction, "Share of negatives drawn hard")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  std::string ablate_split = "test";
  ablate->add_option("--split", ablate_split, "Benchmark split")
      ->capture_default_str()
      ->check(CLI::IsMember({"all", "val", "test"}));
  add_out(ablate, false);
  add_config(ablate);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Compute MRR and RP@5/10 on a benchmark");
  evaluate_cmd->add_option("--models", c.models, "Model set JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--benchmark", c.benchmark, "Benchmark JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--embeddings", c.embeddings,
                           "Store holding benchmark sentence vectors (default: hash encoding)")
      ->check(CLI::ExistingFile);
  evaluate_cmd->add_flag("--hash-fallback", c.hash_fallback,
                         "Hash-encode sentences missing from --embeddings");
  evaluate_cmd->add_option("--split", c.split, "Benchmark split")
      ->capture_default_str()
      ->check(CLI::IsMember({"all", "val", "test"}));
  add_workers(evaluate_cmd);
  add_out(evaluate_cmd, false);
  add_config(evaluate_cmd);

  auto* extract_cmd = app.add_subcommand("extract", "Rank skills for sentences");
  extract_cmd->add_option("--models", c.models, "Model set JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  auto* corpus_opt = extract_cmd->add_option("--corpus", c.corpus, "Corpus JSONL")
                         ->check(CLI::ExistingFile);
  auto* text_opt = extract_cmd->add_option("--text", c.text, "A single sentence");
  corpus_opt->excludes(text_opt);
  extract_cmd->add_option("--embeddings", c.embeddings,
                          "Store holding sentence vectors (default: hash encoding)")
      ->check(CLI::ExistingFile);
  extract_cmd->add_flag("--hash-fallback", c.hash_fallback,
                        "Hash-encode sentences missing from --embeddings");
  extract_cmd->add_option("--top-k,-K", c.top_k, "Skills per sentence")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  add_workers(extract_cmd);
  add_out(extract_cmd, false);
  add_config(extract_cmd);

  auto* audit = app.add_subcommand("audit-supervision",
                                   "Precision and recall of distant labels against gold");
  audit->add_option("--taxonomy", c.taxonomy, "Taxonomy JSONL")->required()->check(CLI::ExistingFile);
  audit->add_option("--benchmark", c.benchmark, "Benchmark JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  audit->add_option("--stoplist", c.stoplist, "Surface forms to ignore, one per line")
      ->check(CLI::ExistingFile);
  add_workers(audit);
  add_out(audit, false);
  add_config(audit);

  auto* convert = app.add_subcommand("convert-benchmark",
                                     "Convert released annotation CSVs to benchmark JSONL");
  convert->add_option("--input", c.inputs, "DATASET:SPLIT:PATH, e.g. TECH:val:tech_dev.csv")
      ->required();
  convert->add_option("--taxonomy", c.taxonomy, "Taxonomy used to map labels to ids")
      ->check(CLI::ExistingFile);
  add_out(convert, true);
  add_config(convert);

  std::vector<std::string> argv = args;
  try {
    for (std::size_t i = 0; i < argv.size(); ++i) {
      if (CLI::App* sub = app.get_subcommand_no_throw(argv[i])) {
        std::vector<std::string> tail(argv.begin() + static_cast<std::ptrdiff_t>(i) + 1,
                                      argv.end());
        merge_config(*sub, tail);
        argv.resize(i + 1);
        argv.insert(argv.end(), tail.begin(), tail.end());
        break;
      }
    }
    std::reverse(argv.begin(), argv.end());
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    err << "skillex: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*import_esco) cmd_import_esco(c, out);
    else if (*label) cmd_label(c, out);
    else if (*stats) cmd_stats(c, out);
    else if (*build_index) cmd_build_index(c, out);
    else if (*train) cmd_train(c, out);
    else if (*sweep) cmd_sweep(c, out);
    else if (*ablate) {
      c.hard_fraction = ablate_fraction;
      c.split = ablate_split;
      cmd_ablate(c, out);
    } else if (*evaluate_cmd) cmd_evaluate(c, out);
    else if (*extract_cmd) {
      if (c.corpus.empty() && text_opt->count() == 0) {
        throw UsageError("one of --corpus or --text is required");
      }
      cmd_extract(c, out);
    } else if (*audit) cmd_audit(c, out);
    else if (*convert) cmd_convert(c, out, err);
  } catch (const UsageError& e) {
    err << "skillex: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "skillex: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace skillex::cli
