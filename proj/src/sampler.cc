#include "skillex/sampler.h"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <json.hpp>

namespace skillex {

namespace {

std::size_t strategy_slot(Strategy s) { return static_cast<std::size_t>(s); }

// Partial Fisher-Yates: the first `count` entries of `pool` become a uniform
// sample without replacement, appended to `out` in draw order.
void draw_from(std::vector<std::uint32_t>& pool, std::size_t count, Rng& rng,
               std::vector<std::uint32_t>& out) {
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t pick = j + uniform_below(rng, pool.size() - j);
    std::swap(pool[j], pool[pick]);
    out.push_back(pool[j]);
  }
}

bool contains_sorted(const std::vector<std::uint32_t>& sorted, std::uint32_t v) {
  return std::binary_search(sorted.begin(), sorted.end(), v);
}

// Uniform pool = universe \ positives. Without replacement while it lasts,
// then with replacement.
void draw_uniform(std::size_t universe, const std::vector<std::uint32_t>& positives,
                  std::size_t count, Rng& rng, std::vector<std::uint32_t>& out) {
  const std::size_t pool_size = universe - positives.size();
  if (count == 0) return;
  if (pool_size == 0) throw Error(ErrorKind::kEmptyPool, "no sentences outside the positive set");

  const bool sparse = count * 4 <= pool_size && positives.size() * 2 <= universe;
  if (sparse) {
    // Rejection against the universe avoids materializing a large pool.
    std::unordered_set<std::uint32_t> chosen;
    chosen.reserve(count * 2);
    while (chosen.size() < count) {
      const auto r = static_cast<std::uint32_t>(uniform_below(rng, universe));
      if (contains_sorted(positives, r) || !chosen.insert(r).second) continue;
      out.push_back(r);
    }
    return;
  }

  std::vector<std::uint32_t> pool;
  pool.reserve(pool_size);
  std::size_t p = 0;
  for (std::uint32_t i = 0; i < universe; ++i) {
    if (p < positives.size() && positives[p] == i) {
      ++p;
      continue;
    }
    pool.push_back(i);
  }
  const std::size_t distinct = std::min(count, pool.size());
  draw_from(pool, distinct, rng, out);
  for (std::size_t j = distinct; j < count; ++j) {
    out.push_back(pool[uniform_below(rng, pool.size())]);
  }
}

}  // namespace

void SamplingConfig::validate() const {
  if (negatives_per_positive < 1) {
    throw Error(ErrorKind::kInvalidArgument, "negatives per positive must be >= 1");
  }
  if (!(hard_fraction >= 0.0 && hard_fraction <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "hard fraction must lie in [0, 1]");
  }
  if (hard_fraction > 0.0 && strategies.empty()) {
    throw Error(ErrorKind::kInvalidArgument,
                "a positive hard fraction needs at least one strategy");
  }
  if (strategy_weights) {
    double enabled_total = 0.0;
    for (Strategy s : strategies) {
      const double w = (*strategy_weights)[strategy_slot(s)];
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw Error(ErrorKind::kInvalidArgument, "strategy weights must be finite and >= 0");
      }
      enabled_total += w;
    }
    if (hard_fraction > 0.0 && enabled_total <= 0.0) {
      throw Error(ErrorKind::kInvalidArgument, "enabled strategy weights sum to 0");
    }
  }
}

SamplingContext::SamplingContext(const PositiveSets& positives) {
  std::vector<std::string> all;
  for (const auto& [skill, ids] : positives.sets) all.insert(all.end(), ids.begin(), ids.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  sentence_ids_ = std::move(all);
  for (const auto& [skill, ids] : positives.sets) {
    std::vector<std::uint32_t> idx;
    idx.reserve(ids.size());
    for (const auto& id : ids) {
      auto it = std::lower_bound(sentence_ids_.begin(), sentence_ids_.end(), id);
      idx.push_back(static_cast<std::uint32_t>(it - sentence_ids_.begin()));
    }
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    positives_.emplace(skill, std::move(idx));
  }
}

const std::vector<std::uint32_t>& SamplingContext::positives(const SkillId& skill) const {
  auto it = positives_.find(skill);
  return it == positives_.end() ? empty_ : it->second;
}

bool SamplingContext::has_positives(const SkillId& skill) const {
  return !positives(skill).empty();
}

std::array<std::size_t, 3> split_hard_budget(std::size_t total,
                                             const SamplingConfig& config) {
  std::array<std::size_t, 3> budget{};
  std::array<bool, 3> enabled{};
  for (Strategy s : config.strategies) enabled[strategy_slot(s)] = true;
  std::array<double, 3> weight{};
  double weight_sum = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    if (!enabled[i]) continue;
    weight[i] = config.strategy_weights ? (*config.strategy_weights)[i] : 1.0;
    weight_sum += weight[i];
  }
  if (total == 0 || weight_sum <= 0.0) return budget;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    if (!enabled[i]) continue;
    budget[i] = static_cast<std::size_t>(
        std::floor(static_cast<double>(total) * weight[i] / weight_sum));
    assigned += budget[i];
  }
  for (std::size_t i = 0; assigned < total; i = (i + 1) % 3) {
    if (enabled[i] && weight[i] > 0.0) {
      ++budget[i];
      ++assigned;
    }
  }
  return budget;
}

TrainingSet sample_negatives(const SkillId& skill, const SamplingContext& context,
                             const std::vector<const RelatedIndex*>& indices,
                             const SamplingConfig& config) {
  config.validate();
  const auto& positives = context.positives(skill);
  if (positives.empty()) {
    throw Error(ErrorKind::kUnknownSkill, "'" + skill + "' has no positive sentences");
  }
  TrainingSet set;
  set.skill = skill;
  set.positives = positives;
  const std::size_t total = config.negatives_per_positive * positives.size();
  const auto hard_total = static_cast<std::size_t>(
      std::llround(config.hard_fraction * static_cast<double>(total)));
  const auto budget = split_hard_budget(hard_total, config);

  Rng rng(mix_seed(config.seed, skill));
  set.negatives.reserve(total);
  std::size_t hard_drawn = 0;
  for (Strategy strategy : kAllStrategies) {
    const std::size_t want = budget[strategy_slot(strategy)];
    if (want == 0) continue;
    const RelatedIndex* index = nullptr;
    for (const RelatedIndex* candidate : indices) {
      if (candidate && candidate->strategy == strategy) index = candidate;
    }
    if (!index) {
      throw Error(ErrorKind::kInvalidArgument,
                  std::string("no related index supplied for strategy ") + to_string(strategy));
    }
    std::vector<std::uint32_t> pool;
    auto it = index->neighbors.find(skill);
    if (it != index->neighbors.end()) {
      for (const auto& neighbor : it->second) {
        if (neighbor == skill) continue;
        const auto& theirs = context.positives(neighbor);
        pool.insert(pool.end(), theirs.begin(), theirs.end());
      }
    }
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    std::vector<std::uint32_t> outside;
    outside.reserve(pool.size());
    std::set_difference(pool.begin(), pool.end(), positives.begin(), positives.end(),
                        std::back_inserter(outside));
    const std::size_t take = std::min(want, outside.size());
    draw_from(outside, take, rng, set.negatives);
    set.provenance.hard[strategy_slot(strategy)] = take;
    hard_drawn += take;
  }
  const std::size_t uniform = total - hard_drawn;
  draw_uniform(context.universe_size(), positives, uniform, rng, set.negatives);
  set.provenance.uniform = uniform;
  return set;
}

std::string training_set_json(const TrainingSet& set, const SamplingContext& context) {
  nlohmann::ordered_json obj;
  obj["skill_id"] = set.skill;
  auto ids = [&](const std::vector<std::uint32_t>& idx) {
    std::vector<std::string> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(context.sentence_id(i));
    return out;
  };
  obj["positives"] = ids(set.positives);
  obj["negatives"] = ids(set.negatives);
  nlohmann::ordered_json provenance;
  provenance["uniform"] = set.provenance.uniform;
  for (Strategy s : kAllStrategies) {
    provenance[to_string(s)] = set.provenance.hard[strategy_slot(s)];
  }
  obj["provenance"] = provenance;
  return obj.dump();
}

}  // namespace skillex
