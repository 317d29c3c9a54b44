#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "skillex/common.h"
#include "skillex/matcher.h"
#include "skillex/related.h"

namespace skillex {

struct SamplingConfig {
  // k: negatives drawn per positive sentence.
  std::size_t negatives_per_positive = 10;
  // Share of negatives drawn from related-skill pools instead of uniformly.
  double hard_fraction = 0.0;
  std::vector<Strategy> strategies;
  std::uint64_t seed = 0;
  // Relative share of the hard budget per strategy (siblings, levenshtein,
  // embedding). Unset means an equal split.
  std::optional<std::array<double, 3>> strategy_weights;

  /// Throws kInvalidArgument when an invariant is violated.
  void validate() const;
};

/// Dense index over every sentence that is positive for some skill. The
/// uniform negative pool of a skill is this universe minus its positives.
class SamplingContext {
 public:
  explicit SamplingContext(const PositiveSets& positives);

  std::size_t universe_size() const { return sentence_ids_.size(); }
  const std::string& sentence_id(std::uint32_t index) const { return sentence_ids_[index]; }
  const std::vector<std::string>& sentence_ids() const { return sentence_ids_; }

  /// Sorted universe indices of the skill's positives; empty if unknown.
  const std::vector<std::uint32_t>& positives(const SkillId& skill) const;
  bool has_positives(const SkillId& skill) const;

 private:
  std::vector<std::string> sentence_ids_;
  std::unordered_map<SkillId, std::vector<std::uint32_t>> positives_;
  std::vector<std::uint32_t> empty_;
};

struct Provenance {
  std::size_t uniform = 0;
  // Hard negatives actually drawn, by strategy.
  std::array<std::size_t, 3> hard{};

  std::size_t total() const { return uniform + hard[0] + hard[1] + hard[2]; }
};

struct TrainingSet {
  SkillId skill;
  // Universe indices into the SamplingContext that produced the set.
  std::vector<std::uint32_t> positives;
  // Draw order, with multiplicity.
  std::vector<std::uint32_t> negatives;
  Provenance provenance;
};

/// Hard budget per strategy for `total` hard negatives: equal (or weighted)
/// shares rounded down, remainder handed out in siblings, levenshtein,
/// embedding order among enabled strategies.
std::array<std::size_t, 3> split_hard_budget(std::size_t total,
                                             const SamplingConfig& config);

/// All positives of `skill` plus k negatives per positive. Hard pools are the
/// positives of the skill's neighbors under each enabled strategy, minus the
/// skill's own positives; hard draws are without replacement and any shortfall
/// moves to the uniform budget. Uniform draws are without replacement until
/// the pool is exhausted, then with replacement. Randomness is seeded from
/// (config.seed, skill). Throws kUnknownSkill, kEmptyPool, kInvalidArgument.
TrainingSet sample_negatives(const SkillId& skill, const SamplingContext& context,
                             const std::vector<const RelatedIndex*>& indices,
                             const SamplingConfig& config);

/// JSONL audit record {"skill_id", "positives", "negatives", "provenance"}.
std::string training_set_json(const TrainingSet& set, const SamplingContext& context);

}  // namespace skillex
