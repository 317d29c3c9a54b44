#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skillex/classifier.h"
#include "skillex/embeddings.h"

namespace skillex {

struct ScoredSkill {
  SkillId skill;
  double score = 0.0;

  friend bool operator==(const ScoredSkill&, const ScoredSkill&) = default;
};

struct RankedPrediction {
  std::string sentence_id;
  std::vector<ScoredSkill> top;
};

/// Scores every classifier, orders by (score desc, id asc) and appends the
/// untrained skills (score 0, by id) after all trained ones. Returns the first
/// K entries. Throws kInvalidArgument (K = 0), kEmptyModelSet,
/// kDimensionMismatch.
RankedPrediction rank_skills(const ModelSet& models, std::span<const float> x,
                             std::size_t k);

/// Encodes `text` and ranks. Throws kDimensionMismatch when the encoder and
/// model dims differ.
RankedPrediction extract(const std::string& sentence_id, std::string_view text,
                         const SentenceEncoder& encoder, const ModelSet& models,
                         std::size_t k);

/// JSONL {"sentence_id", "top": [{"skill_id", "score"}...]}.
std::string prediction_json(const RankedPrediction& prediction);

}  // namespace skillex
