#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skillex/evaluation.h"
#include "skillex/matcher.h"
#include "skillex/related.h"
#include "skillex/taxonomy.h"

namespace skillex::synthetic {

// Skills come in sibling groups. Each skill owns a two-token name and a few
// signature tokens; siblings share confusor tokens. Training sentences name
// their skill (so the matcher labels them); test sentences never do, and mix
// in confusors of one unrelated group.
struct Params {
  std::size_t groups = 12;
  std::size_t skills_per_group = 5;
  std::size_t signature_tokens = 5;
  std::size_t confusors_per_group = 10;
  std::size_t filler_vocabulary = 300;
  std::size_t stem_length = 5;
  std::size_t train_per_skill = 200;
  std::size_t test_per_skill = 50;

  // [min, max] token counts drawn per sentence.
  std::size_t train_signature_min = 1, train_signature_max = 2;
  std::size_t train_confusor_min = 2, train_confusor_max = 4;
  std::size_t train_filler_min = 3, train_filler_max = 6;
  // Specific test sentences carry the skill's signature but more confusors
  // of an unrelated group than of their own.
  std::size_t test_signature_min = 1, test_signature_max = 1;
  std::size_t test_confusor_min = 2, test_confusor_max = 2;
  std::size_t test_distractor_min = 3, test_distractor_max = 3;
  std::size_t test_filler_min = 3, test_filler_max = 6;
  // Generic test sentences only say which group they belong to.
  std::size_t generic_percent = 85;
  std::size_t generic_confusor_min = 2, generic_confusor_max = 4;
  std::size_t generic_distractor_min = 0, generic_distractor_max = 1;

  std::uint64_t seed = 1;
};

struct Data {
  Taxonomy taxonomy;
  std::vector<Sentence> train;
  std::vector<GoldSentence> test;
};

Data generate(const Params& params);

// Label -> hash-encode -> sample -> train -> evaluate on `data`, returning the
// mean RP@5 over the test sentences.
double pipeline_rp5(const Data& data, double hard_fraction, const std::vector<Strategy>& strategies,
                    std::uint32_t hash_dim, std::uint64_t seed, int workers = 1);

// Random lowercase pseudo-words, unique within one call.
std::vector<std::string> pseudo_words(std::size_t count, std::uint64_t seed,
                                      std::size_t min_len = 5, std::size_t max_len = 9);

}  // namespace skillex::synthetic
