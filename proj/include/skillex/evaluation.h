#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "skillex/classifier.h"
#include "skillex/embeddings.h"
#include "skillex/matcher.h"
#include "skillex/taxonomy.h"

namespace skillex {

enum class Dataset { kTech, kHouse };
enum class Split { kVal, kTest };

const char* to_string(Dataset dataset);
const char* to_string(Split split);
/// "TECH"/"HOUSE" and "val"/"test". Throws kParse.
Dataset parse_dataset(std::string_view name);
Split parse_split(std::string_view name);

inline constexpr std::string_view kUnderspecified = "UNDERSPECIFIED";
inline constexpr std::string_view kLabelNotPresent = "LABEL_NOT_PRESENT";

bool is_marker_label(std::string_view label);

struct Span {
  // Code point offsets into the sentence text, end exclusive.
  std::size_t start = 0;
  std::size_t end = 0;
  std::string label;

  friend bool operator==(const Span&, const Span&) = default;
};

struct GoldSentence {
  std::string sentence_id;
  std::string text;
  Dataset dataset = Dataset::kTech;
  Split split = Split::kTest;
  std::vector<Span> spans;
  // Sorted, deduplicated skill ids of the non-marker spans.
  std::vector<SkillId> gold_labels;

  friend bool operator==(const GoldSentence&, const GoldSentence&) = default;
};

using Group = std::pair<Dataset, Split>;

/// Reads benchmark JSONL. Throws kParse (bad JSON, unknown dataset/split,
/// span out of bounds), kDuplicateId, kIo.
std::vector<GoldSentence> load_benchmark(const std::string& path);
void write_benchmark(std::span<const GoldSentence> bench, const std::string& path);

/// Derives gold_labels from spans (markers dropped, union, sorted).
void assign_gold_labels(GoldSentence& sentence);

struct BenchmarkCounts {
  std::size_t sentences = 0;
  std::size_t spans = 0;
  std::size_t labeled_spans = 0;
};

/// Per (dataset, split): sentence, span and skill-labeled span counts.
std::map<Group, BenchmarkCounts> benchmark_counts(std::span<const GoldSentence> bench);

struct ReleasedConversion {
  std::vector<GoldSentence> sentences;
  // Labels that matched neither a skill id nor a (case-folded) label.
  std::size_t unmapped_labels = 0;
  // Spans whose text was not found in the sentence; they cover the sentence.
  std::size_t unlocated_spans = 0;
};

/// Converts one file of the released annotation format: CSV with a header
/// holding "sentence", "span" and "label" columns (optional "idx"), one row
/// per span; a row with an empty span is a sentence without spans. Labels are
/// mapped to skill ids through `taxonomy` when given ("LABEL NOT PRESENT"
/// and "UNDERSPECIFIED" map to the markers). Throws kMissingColumn, kIo.
ReleasedConversion convert_released_benchmark(const std::string& csv_path, Dataset dataset,
                                              Split split, const Taxonomy* taxonomy);

/// sum_{k<=K} rel(k) / min(K, |gold|). `gold` must be sorted. Throws
/// kEmptyGold, kInvalidArgument (K = 0).
double rp_at_k(std::span<const SkillId> ranked, std::span<const SkillId> gold, std::size_t k);

/// 1 / rank of the first gold item; 0 when none is ranked. Throws kEmptyGold.
double mrr(std::span<const SkillId> ranked, std::span<const SkillId> gold);

struct GroupMetrics {
  double mrr = 0.0;
  double rp5 = 0.0;
  double rp10 = 0.0;
  // Sentences with non-empty gold.
  std::size_t n = 0;
};

struct EvalReport {
  std::map<Group, GroupMetrics> groups;
};

/// Macro averages over sentences with non-empty gold, per (dataset, split).
/// Per-sentence values are summed in sentence-id order, so the report does
/// not depend on benchmark order.
EvalReport evaluate(const ModelSet& models, std::span<const GoldSentence> bench,
                    const SentenceEncoder& encoder, int workers = 1);

std::string report_json(const EvalReport& report);

struct SupervisionQuality {
  double precision = 1.0;
  double recall = 1.0;
  std::size_t auto_pairs = 0;
  std::size_t gold_pairs = 0;
  std::size_t overlap = 0;
  // Set when the matching denominator is 0 and the value is reported as 1.0.
  bool precision_undefined = false;
  bool recall_undefined = false;
};

/// Micro-averaged over (sentence, skill) pairs; auto labels on sentences not
/// in the benchmark are ignored.
SupervisionQuality supervision_quality(const PositiveSets& auto_labels,
                                       std::span<const GoldSentence> bench);

}  // namespace skillex
