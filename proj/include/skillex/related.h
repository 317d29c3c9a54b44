#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skillex/common.h"
#include "skillex/embeddings.h"
#include "skillex/taxonomy.h"

namespace skillex {

enum class Strategy { kSiblings, kLevenshtein, kEmbedding };

inline constexpr Strategy kAllStrategies[] = {
    Strategy::kSiblings, Strategy::kLevenshtein, Strategy::kEmbedding};

const char* to_string(Strategy strategy);
/// Accepts "siblings", "levenshtein", "embedding". Throws kInvalidArgument.
Strategy parse_strategy(std::string_view name);

inline constexpr std::size_t kDefaultNeighborLimit = 100;

struct RelatedIndex {
  Strategy strategy = Strategy::kSiblings;
  // 0 means unbounded (siblings).
  std::size_t limit = 0;
  // Every taxonomy skill has an entry, possibly empty.
  std::map<SkillId, std::vector<SkillId>> neighbors;

  const std::vector<SkillId>& of(const SkillId& id) const;

  friend bool operator==(const RelatedIndex&, const RelatedIndex&) = default;
};

/// Unit-cost edit distance between the code point sequences of `a` and `b`.
std::size_t edit_distance(std::u32string_view a, std::u32string_view b);

/// Edit distance after NFKC + lowercase of both inputs.
std::size_t levenshtein(std::string_view a, std::string_view b);

struct IndexOptions {
  std::size_t limit = kDefaultNeighborLimit;
  int workers = 1;
};

/// Siblings: taxonomy sibling sets. Levenshtein: `limit` nearest preferred
/// labels by (distance, id). Embedding: `limit` most similar label vectors by
/// (-cosine, id); `label_vectors` must hold every skill id (kMissingVector).
RelatedIndex build_related_index(const Taxonomy& taxonomy, Strategy strategy,
                                 const EmbeddingStore* label_vectors = nullptr,
                                 const IndexOptions& options = {});

/// Header line {"strategy", "limit"} then {"skill_id", "neighbors"} per skill.
void write_related_index(const RelatedIndex& index, const std::string& path);
RelatedIndex read_related_index(const std::string& path);

}  // namespace skillex
