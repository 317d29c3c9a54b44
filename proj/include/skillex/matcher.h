#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "skillex/common.h"
#include "skillex/taxonomy.h"

namespace skillex {

struct Sentence {
  std::string id;
  std::string text;
};

/// Reads corpus JSONL ({"id", "text"} per line). Throws kParse, kIo,
/// kDuplicateId.
std::vector<Sentence> read_corpus(const std::string& path);
void write_corpus(std::span<const Sentence> corpus, const std::string& path);

/// Distantly supervised positives per skill. Only skills with at least one
/// sentence are stored; sentence ids within a set are sorted.
struct PositiveSets {
  std::size_t cap = 1000;
  std::map<SkillId, std::vector<std::string>> sets;

  const std::vector<std::string>* find(const SkillId& id) const;
  std::size_t count(const SkillId& id) const;

  friend bool operator==(const PositiveSets&, const PositiveSets&) = default;
};

/// JSONL {"skill_id", "sentence_ids"} sorted by skill_id.
void write_positive_sets(const PositiveSets& positives, const std::string& path);
PositiveSets read_positive_sets(const std::string& path);

/// Token-level Aho-Corasick automaton over the normalized surface forms of
/// every skill. A pattern fires only on whole-token matches, so "art" never
/// matches inside "part".
class Matcher {
 public:
  /// `stoplist` holds surface forms (any casing) excluded from matching.
  explicit Matcher(const Taxonomy& taxonomy,
                   const std::vector<std::string>& stoplist = {});

  /// Sorted indices (taxonomy order) of every skill with a surface form
  /// occurring as a contiguous token subsequence of `text`.
  std::vector<std::size_t> match(std::string_view text) const;
  std::vector<std::size_t> match_tokens(std::span<const std::string> tokens) const;

  std::vector<SkillId> match_ids(std::string_view text) const;

  const std::vector<SkillId>& skill_ids() const { return skill_ids_; }
  std::size_t pattern_count() const { return pattern_skills_.size(); }
  /// Surface forms whose normalization had no tokens.
  std::size_t skipped_empty() const { return skipped_empty_; }
  std::size_t skipped_stoplisted() const { return skipped_stoplisted_; }

 private:
  struct Node {
    // Sorted by token id.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> next;
    std::uint32_t fail = 0;
    // Nearest proper suffix node (via fail links) that ends a pattern.
    std::uint32_t output_link = 0;
    std::int32_t pattern = -1;
  };

  std::uint32_t step(std::uint32_t state, std::uint32_t token) const;
  std::uint32_t child(std::uint32_t state, std::uint32_t token) const;

  std::vector<SkillId> skill_ids_;
  std::unordered_map<std::string, std::uint32_t> vocabulary_;
  std::vector<Node> nodes_;
  std::vector<std::vector<std::uint32_t>> pattern_skills_;
  std::size_t skipped_empty_ = 0;
  std::size_t skipped_stoplisted_ = 0;
};

struct LabelOptions {
  std::size_t cap = 1000;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Labels each sentence with every literally mentioned skill, then caps each
/// set with a seeded uniform sample that depends only on (seed, skill id,
/// set of matching ids). Throws kDuplicateId, kInvalidArgument (cap 0).
PositiveSets label_corpus(const Matcher& matcher,
                          std::span<const Sentence> corpus,
                          const LabelOptions& options);

/// Streams a corpus JSONL file in batches; same result as the in-memory form.
PositiveSets label_corpus_file(const Matcher& matcher, const std::string& path,
                               const LabelOptions& options);

struct CorpusStats {
  double mean_positives_all_skills = 0.0;
  double mean_positives_nonempty = 0.0;
  double fraction_skills_le_10 = 0.0;
  std::size_t skills = 0;
  std::size_t nonempty_skills = 0;
  std::map<SkillId, std::size_t> counts;
};

CorpusStats corpus_stats(const PositiveSets& positives, const Taxonomy& taxonomy);

}  // namespace skillex
