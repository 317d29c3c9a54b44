// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "files.h"
#include "synthetic.h"
#include "skillex/classifier.h"
#include "skillex/cli.h"
#include "skillex/common.h"
#include "skillex/embeddings.h"
#include "skillex/evaluation.h"
#include "skillex/matcher.h"
#include "skillex/ranking.h"
#include "skillex/related.h"
#include "skillex/sampler.h"
#include "skillex/text.h"

using namespace skillex;
using skillex::testing::read_file;
using skillex::testing::TempDir;
using skillex::testing::write_file;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, value);
  return buf;
}

int cli_run(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (out) *out = o.str();
  if (code != 0) std::fprintf(stderr, "cli %s failed: %s\n", args[0].c_str(), e.str().c_str());
  return code;
}

// ---------------------------------------------------------------------------
// Metric oracle

std::vector<SkillId> oracle_ranking(const ModelSet& models, const Vector& x) {
  std::vector<std::pair<double, SkillId>> scored;
  for (const auto& [id, c] : models.classifiers) scored.push_back({predict(c, x), id});
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<SkillId> out;
  for (const auto& s : scored) out.push_back(s.second);
  std::vector<SkillId> untrained = models.untrained;
  std::sort(untrained.begin(), untrained.end());
  out.insert(out.end(), untrained.begin(), untrained.end());
  return out;
}

double oracle_rp(const std::vector<SkillId>& ranked, const std::set<SkillId>& gold, std::size_t k) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k && i < ranked.size(); ++i) hits += gold.count(ranked[i]);
  return static_cast<double>(hits) / static_cast<double>(std::min(k, gold.size()));
}

double oracle_mrr(const std::vector<SkillId>& ranked, const std::set<SkillId>& gold) {
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (gold.count(ranked[i])) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

Outcome metric_oracle() {
  const auto start = Clock::now();
  constexpr std::uint32_t dim = 8;
  const HashEncoder encoder(dim);
  Rng rng(2024);
  double max_diff = 0.0;
  std::size_t compared = 0;
  for (int instance = 0; instance < 200; ++instance) {
    const std::size_t skills = 1 + uniform_below(rng, 20);
    // Half the instances score by a coarse bias alone, which forces ties.
    const bool ties = instance % 2 == 0;
    ModelSet models;
    models.dim = dim;
    std::vector<SkillId> ids;
    for (std::size_t s = 0; s < skills; ++s) {
      const SkillId id = "k" + std::to_string(uniform_below(rng, 1000));
      if (std::find(ids.begin(), ids.end(), id) != ids.end()) continue;
      ids.push_back(id);
      if (s > 0 && uniform_below(rng, 6) == 0) {
        models.untrained.push_back(id);
        continue;
      }
      BinaryClassifier c;
      c.skill = id;
      for (std::uint32_t j = 0; j < dim; ++j) {
        c.weights.push_back(ties ? 0.0 : static_cast<double>(uniform_below(rng, 2001)) / 500.0 - 2.0);
      }
      c.bias = static_cast<double>(uniform_below(rng, 5)) - 2.0;
      models.classifiers[id] = c;
    }
    std::sort(models.untrained.begin(), models.untrained.end());
    if (models.classifiers.empty()) continue;

    const std::size_t sentences = 1 + uniform_below(rng, 50);
    std::vector<GoldSentence> bench;
    for (std::size_t i = 0; i < sentences; ++i) {
      GoldSentence g;
      g.sentence_id = "s" + std::to_string(i);
      g.text = "sentence number " + std::to_string(uniform_below(rng, 100000));
      g.dataset = uniform_below(rng, 2) ? Dataset::kTech : Dataset::kHouse;
      g.split = uniform_below(rng, 2) ? Split::kVal : Split::kTest;
      for (std::size_t n = uniform_below(rng, 4); n > 0; --n) {
        const std::size_t pick = uniform_below(rng, ids.size() + 2);
        std::string label = pick < ids.size()          ? ids[pick]
                            : pick == ids.size()       ? std::string(kLabelNotPresent)
                                                       : std::string("unknown-skill");
        g.spans.push_back({0, 1, label});
      }
      assign_gold_labels(g);
      bench.push_back(std::move(g));
    }

    std::map<Group, std::array<double, 3>> sums;
    std::map<Group, std::size_t> counts;
    for (const auto& g : bench) {
      const Group group{g.dataset, g.split};
      counts[group];
      std::set<SkillId> gold;
      for (const auto& span : g.spans) {
        if (span.label != kLabelNotPresent && span.label != kUnderspecified) gold.insert(span.label);
      }
      if (gold.empty()) continue;
      const auto ranked = oracle_ranking(models, encoder.encode(g.sentence_id, g.text));
      const double o_mrr = oracle_mrr(ranked, gold);
      const double o_rp5 = oracle_rp(ranked, gold, 5);
      const double o_rp10 = oracle_rp(ranked, gold, 10);
      max_diff = std::max({max_diff, std::abs(o_mrr - mrr(ranked, g.gold_labels)),
                           std::abs(o_rp5 - rp_at_k(ranked, g.gold_labels, 5)),
                           std::abs(o_rp10 - rp_at_k(ranked, g.gold_labels, 10))});
      sums[group][0] += o_mrr;
      sums[group][1] += o_rp5;
      sums[group][2] += o_rp10;
      ++counts[group];
      compared += 3;
    }
    const EvalReport report = evaluate(models, bench, encoder);
    if (report.groups.size() != counts.size()) {
      return {false, "group set differs on instance " + std::to_string(instance)};
    }
    for (const auto& [group, n] : counts) {
      const GroupMetrics& m = report.groups.at(group);
      if (m.n != n) return {false, "sentence count differs on instance " + std::to_string(instance)};
      if (n == 0) continue;
      const double dn = static_cast<double>(n);
      max_diff = std::max({max_diff, std::abs(m.mrr - sums[group][0] / dn),
                           std::abs(m.rp5 - sums[group][1] / dn),
                           std::abs(m.rp10 - sums[group][2] / dn)});
      compared += 3;
    }
  }
  const double elapsed = seconds_since(start);
  return {max_diff <= 1e-12 && elapsed < 5.0,
          "max |diff| " + fmt("%.3g", max_diff) + " over " + std::to_string(compared) +
              " values (<= 1e-12), " + fmt("%.2f", elapsed) + " s (< 5 s)"};
}

// ---------------------------------------------------------------------------

Outcome hand_anchored() {
  const std::vector<SkillId> ranking{"A", "C", "B"};
  const std::vector<SkillId> gold{"A", "B"};
  const double rp2 = rp_at_k(ranking, gold, 2);
  const double rr = mrr(std::vector<SkillId>{"C", "A", "B"}, std::vector<SkillId>{"A"});
  return {rp2 == 0.5 && rr == 0.5,
          "RP@2 " + fmt("%g", rp2) + " (want 0.5), MRR " + fmt("%g", rr) + " (want 0.5)"};
}

// ---------------------------------------------------------------------------
// Matcher

std::vector<SkillId> scan_surface_forms(const Taxonomy& t, const std::vector<std::string>& tokens) {
  std::vector<SkillId> out;
  for (const auto& skill : t.skills()) {
    bool hit = false;
    for (const auto& form : t.surface_forms(skill.id)) {
      const auto pattern = text::normalize(form);
      if (pattern.empty() || pattern.size() > tokens.size()) continue;
      for (std::size_t i = 0; i + pattern.size() <= tokens.size() && !hit; ++i) {
        hit = std::equal(pattern.begin(), pattern.end(), tokens.begin() + i);
      }
      if (hit) break;
    }
    if (hit) out.push_back(skill.id);
  }
  return out;
}

struct MatcherWorld {
  Taxonomy taxonomy;
  std::vector<std::string> sentences;
};

MatcherWorld matcher_world(std::size_t skills, std::size_t sentences, std::size_t vocabulary,
                           std::uint64_t seed) {
  const auto words = synthetic::pseudo_words(vocabulary, seed, 2, 7);
  Rng rng(seed + 1);
  std::vector<Skill> list;
  std::set<std::string> seen;
  std::vector<std::string> labels;
  while (list.size() < skills) {
    std::string label;
    for (std::size_t n = 1 + uniform_below(rng, 3); n > 0; --n) {
      label += (label.empty() ? "" : " ") + words[uniform_below(rng, words.size())];
    }
    if (!seen.insert(label).second) continue;
    Skill s{"k" + std::to_string(list.size()), label, {}, {}};
    if (uniform_below(rng, 4) == 0) {
      std::string alt = words[uniform_below(rng, words.size())] + " " + label;
      if (seen.insert(alt).second) s.alt_labels.push_back(alt);
    }
    labels.push_back(label);
    list.push_back(std::move(s));
  }
  MatcherWorld world{Taxonomy(std::move(list)), {}};
  for (std::size_t i = 0; i < sentences; ++i) {
    std::string s;
    for (std::size_t n = 8 + uniform_below(rng, 17); n > 0; --n) {
      // Splice in a whole label now and then so matches are common.
      const std::string& piece = uniform_below(rng, 6) == 0 ? labels[uniform_below(rng, labels.size())]
                                                            : words[uniform_below(rng, words.size())];
      s += piece + (uniform_below(rng, 8) == 0 ? ", " : " ");
    }
    if (uniform_below(rng, 3) == 0) s[0] = static_cast<char>(std::toupper(s[0]));
    world.sentences.push_back(std::move(s));
  }
  return world;
}

Outcome matcher_equivalence() {
  const MatcherWorld small = matcher_world(100, 1000, 150, 11);
  const Matcher m(small.taxonomy);
  std::size_t mismatches = 0, matched = 0;
  for (const auto& s : small.sentences) {
    const auto got = m.match_ids(s);
    matched += !got.empty();
    if (got != scan_surface_forms(small.taxonomy, text::normalize(s))) ++mismatches;
  }

  const MatcherWorld big = matcher_world(1000, 20000, 3000, 12);
  const Matcher fast(big.taxonomy);
  std::size_t sink = 0;
  const auto start = Clock::now();
  for (const auto& s : big.sentences) sink += fast.match(s).size();
  const double rate = static_cast<double>(big.sentences.size()) / seconds_since(start);
  return {mismatches == 0 && matched > 0 && rate >= 1e4,
          std::to_string(mismatches) + " mismatches on 100 skills x 1000 sentences (" +
              std::to_string(matched) + " with matches); " + fmt("%.0f", rate) +
              " sentences/s with " + std::to_string(fast.pattern_count()) +
              " patterns (>= 1e4); " + std::to_string(sink) + " matches"};
}

// ---------------------------------------------------------------------------
// Related-skill indices

std::size_t oracle_edit_distance(const std::u32string& a, const std::u32string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[a.size()][b.size()];
}

template <typename Key>
std::map<SkillId, std::vector<SkillId>> oracle_top(const Taxonomy& t, std::size_t limit,
                                                   const std::function<Key(std::size_t, std::size_t)>& key) {
  std::map<SkillId, std::vector<SkillId>> out;
  const auto& skills = t.skills();
  for (std::size_t i = 0; i < skills.size(); ++i) {
    std::vector<std::pair<Key, SkillId>> all;
    for (std::size_t j = 0; j < skills.size(); ++j) {
      if (j != i) all.push_back({key(i, j), skills[j].id});
    }
    std::sort(all.begin(), all.end());
    auto& list = out[skills[i].id];
    for (std::size_t n = 0; n < std::min(limit, all.size()); ++n) list.push_back(all[n].second);
  }
  return out;
}

Outcome index_oracles() {
  // Labels over a small alphabet so equal distances and duplicate labels (equal
  // cosines) are common.
  Rng rng(77);
  std::vector<Skill> skills;
  for (int i = 0; i < 500; ++i) {
    std::string label;
    const std::size_t len = 3 + uniform_below(rng, 6);
    for (std::size_t c = 0; c < len; ++c) label += "abcde "[uniform_below(rng, 5)];
    if (uniform_below(rng, 10) == 0) label += "\xC3\xA9";
    char id[16];
    std::snprintf(id, sizeof id, "s%03llu", static_cast<unsigned long long>(uniform_below(rng, 1000)));
    if (std::any_of(skills.begin(), skills.end(), [&](const Skill& s) { return s.id == id; })) {
      --i;
      continue;
    }
    skills.push_back({id, label, {}, {}});
  }
  const Taxonomy t(skills);
  std::vector<std::u32string> folded;
  for (const auto& s : t.skills()) folded.push_back(text::to_code_points(text::fold_case(s.preferred_label)));

  const RelatedIndex lev = build_related_index(t, Strategy::kLevenshtein);
  const auto lev_oracle = oracle_top<std::size_t>(
      t, kDefaultNeighborLimit,
      [&](std::size_t i, std::size_t j) { return oracle_edit_distance(folded[i], folded[j]); });

  EmbeddingStore labels(32);
  for (const auto& s : t.skills()) labels.add(s.id, hash_encode(s.preferred_label, 32));
  const RelatedIndex emb = build_related_index(t, Strategy::kEmbedding, &labels);
  const auto emb_oracle = oracle_top<double>(t, kDefaultNeighborLimit, [&](std::size_t i, std::size_t j) {
    return -cosine(labels.at(t.skills()[i].id), labels.at(t.skills()[j].id));
  });

  const std::size_t kitten = levenshtein("kitten", "sitting");
  const bool lev_ok = lev.neighbors == lev_oracle;
  const bool emb_ok = emb.neighbors == emb_oracle;
  return {lev_ok && emb_ok && kitten == 3,
          std::string("levenshtein top-100 ") + (lev_ok ? "equal" : "DIFFERENT") +
              ", embedding top-100 " + (emb_ok ? "equal" : "DIFFERENT") +
              " on 500 skills; kitten/sitting = " + std::to_string(kitten)};
}

// ---------------------------------------------------------------------------

Outcome gradient_check() {
  Rng rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double h = 1e-5;
  double worst = 0.0;
  for (int config = 0; config < 100; ++config) {
    const std::uint32_t dim = 1 + static_cast<std::uint32_t>(uniform_below(rng, 32));
    const std::size_t n = 1 + uniform_below(rng, 40);
    std::vector<Vector> xs(n, Vector(dim));
    Examples ex;
    ex.dim = dim;
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : xs[i]) v = static_cast<float>(normal(rng));
      ex.add(xs[i], uniform_below(rng, 2) == 1);
    }
    TrainConfig cfg;
    cfg.dim = dim;
    cfg.inverse_reg_c = std::pow(10.0, normal(rng));
    std::vector<double> w(dim);
    for (auto& v : w) v = 0.5 * normal(rng);
    const double b = normal(rng);

    const LossGradient lg = loss_and_gradient(w, b, ex, cfg);
    double diff2 = 0.0, a2 = 0.0, f2 = 0.0;
    for (std::size_t j = 0; j <= dim; ++j) {
      auto wp = w, wm = w;
      double bp = b, bm = b;
      if (j < dim) {
        wp[j] += h;
        wm[j] -= h;
      } else {
        bp += h;
        bm -= h;
      }
      const double fd =
          (loss_and_gradient(wp, bp, ex, cfg).loss - loss_and_gradient(wm, bm, ex, cfg).loss) / (2 * h);
      diff2 += (fd - lg.grad[j]) * (fd - lg.grad[j]);
      a2 += lg.grad[j] * lg.grad[j];
      f2 += fd * fd;
    }
    const double rel = std::sqrt(diff2) / std::max(std::max(std::sqrt(a2), std::sqrt(f2)), 1e-12);
    worst = std::max(worst, rel);
  }
  return {worst <= 1e-5, "max relative error " + fmt("%.3g", worst) + " over 100 configs (<= 1e-5)"};
}

// ---------------------------------------------------------------------------
// Sampler

// Upper 0.001 quantile of chi-square with 49 degrees of freedom.
constexpr double kChiSquare49At001 = 85.351;

Outcome sampler_contracts() {
  // Goodness of fit: skill A has one positive and a uniform pool of 50
  // sentences; 10^4 seeds x 10 draws = 10^5 draws.
  PositiveSets one;
  one.sets["A"] = {"a"};
  for (int i = 0; i < 50; ++i) {
    char id[8];
    std::snprintf(id, sizeof id, "u%02d", i);
    one.sets["B"].push_back(id);
  }
  const SamplingContext ctx(one);
  std::map<std::uint32_t, std::size_t> counts;
  std::size_t draws = 0;
  bool ratio_ok = true;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    SamplingConfig cfg;
    cfg.seed = seed;
    const TrainingSet set = sample_negatives("A", ctx, {}, cfg);
    ratio_ok &= set.negatives.size() == 10 * set.positives.size();
    for (auto n : set.negatives) ++counts[n];
    draws += set.negatives.size();
  }
  const double expected = static_cast<double>(draws) / 50.0;
  double chi2 = 0.0;
  for (std::uint32_t i = 0; i < ctx.universe_size(); ++i) {
    if (ctx.sentence_id(i) == "a") {
      if (counts.count(i)) return {false, "positive drawn as negative"};
      continue;
    }
    const double d = static_cast<double>(counts[i]) - expected;
    chi2 += d * d / expected;
  }

  // Randomized worlds: overlapping positives, random hard fractions and
  // neighbor lists.
  Rng rng(99);
  std::size_t trials = 0, violations = 0;
  while (trials < 10000) {
    const std::size_t n_skills = 2 + uniform_below(rng, 12);
    const std::size_t n_sentences = 2 + uniform_below(rng, 60);
    PositiveSets p;
    for (std::size_t s = 0; s < n_sentences; ++s) {
      for (std::size_t m = 1 + uniform_below(rng, 3); m > 0; --m) {
        p.sets["k" + std::to_string(uniform_below(rng, n_skills))].push_back("x" + std::to_string(s));
      }
    }
    for (auto& [id, ids] : p.sets) {
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    }
    std::vector<RelatedIndex> built;
    for (Strategy strategy : kAllStrategies) {
      RelatedIndex idx;
      idx.strategy = strategy;
      for (std::size_t s = 0; s < n_skills; ++s) {
        auto& list = idx.neighbors["k" + std::to_string(s)];
        for (std::size_t o = 0; o < n_skills; ++o) {
          if (o != s && uniform_below(rng, 3) == 0) list.push_back("k" + std::to_string(o));
        }
      }
      built.push_back(std::move(idx));
    }
    std::vector<const RelatedIndex*> indices{&built[0], &built[1], &built[2]};
    const SamplingContext c(p);
    SamplingConfig cfg;
    cfg.seed = trials;
    cfg.hard_fraction = static_cast<double>(uniform_below(rng, 101)) / 100.0;
    cfg.strategies = {kAllStrategies, kAllStrategies + 1 + uniform_below(rng, 3)};
    const SkillId skill = p.sets.begin()->first;
    if (c.positives(skill).size() == c.universe_size()) continue;
    const TrainingSet set = sample_negatives(skill, c, indices, cfg);
    ++trials;
    ratio_ok &= set.negatives.size() == 10 * set.positives.size();
    const auto& pos = c.positives(skill);
    for (auto n : set.negatives) violations += std::binary_search(pos.begin(), pos.end(), n);
  }

  return {chi2 <= kChiSquare49At001 && ratio_ok && violations == 0,
          "chi-square " + fmt("%.2f", chi2) + " (df 49, critical " + fmt("%.3f", kChiSquare49At001) +
              ") over " + std::to_string(draws) + " draws; ratio " +
              (ratio_ok ? "exactly 10" : "NOT 10") + "; " + std::to_string(violations) +
              " negatives in P over " + std::to_string(trials) + " trials"};
}

// ---------------------------------------------------------------------------

Outcome synthetic_trend() {
  const auto start = Clock::now();
  double base = 0.0, small = 0.0, full = 0.0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    synthetic::Params params;
    params.seed = seed;
    const synthetic::Data data = synthetic::generate(params);
    const std::vector<Strategy> siblings{Strategy::kSiblings};
    const double b = synthetic::pipeline_rp5(data, 0.0, siblings, 256, seed);
    const double s = synthetic::pipeline_rp5(data, 0.05, siblings, 256, seed);
    const double f = synthetic::pipeline_rp5(data, 1.0, siblings, 256, seed);
    base += b / 5;
    small += s / 5;
    full += f / 5;
    per_seed += " [" + fmt("%.4f", b) + " " + fmt("%.4f", s) + " " + fmt("%.4f", f) + "]";
  }
  const double elapsed = seconds_since(start);
  return {base >= 0.60 && small > base && full < small && elapsed <= 600.0,
          "mean RP@5 rho=0 " + fmt("%.4f", base) + " (>= 0.60), rho=0.05 " + fmt("%.4f", small) +
              " (> rho=0), rho=1 " + fmt("%.4f", full) + " (< rho=0.05); " + fmt("%.1f", elapsed) +
              " s (<= 600); per seed" + per_seed};
}

// ---------------------------------------------------------------------------

Outcome determinism() {
  TempDir dir;
  synthetic::Params params;
  params.train_per_skill = 40;
  params.test_per_skill = 10;
  params.seed = 3;
  const synthetic::Data data = synthetic::generate(params);
  write_taxonomy(data.taxonomy, dir.file("tax.jsonl"));
  write_corpus(data.train, dir.file("corpus.jsonl"));
  write_benchmark(data.test, dir.file("bench.jsonl"));

  auto pipeline = [&](const std::string& tag, int workers) -> std::vector<std::string> {
    const std::string w = std::to_string(workers);
    const std::string pos = dir.file(tag + "-pos.jsonl");
    const std::string models = dir.file(tag + "-models.jsonl");
    const std::string report = dir.file(tag + "-report.json");
    const std::string dump = dir.file(tag + "-dump.jsonl");
    if (cli_run({"label", "--taxonomy", dir.file("tax.jsonl"), "--corpus", dir.file("corpus.jsonl"),
                 "--cap", "30", "--seed", "5", "--workers", w, "--out", pos}) != 0 ||
        cli_run({"train", "--taxonomy", dir.file("tax.jsonl"), "--positives", pos, "--corpus",
                 dir.file("corpus.jsonl"), "--hash-dim", "64", "--hard-fraction", "0.1",
                 "--strategy", "all", "--seed", "5", "--workers", w, "--dump-training", dump,
                 "--out", models}) != 0 ||
        cli_run({"evaluate", "--models", models, "--benchmark", dir.file("bench.jsonl"),
                 "--workers", w, "--out", report}) != 0) {
      return {};
    }
    return {read_file(pos), read_file(dump), read_file(models), read_file(report)};
  };
  const auto first = pipeline("w1", 1);
  const auto again = pipeline("w1b", 1);
  const auto four = pipeline("w4", 4);
  if (first.empty() || again.empty() || four.empty()) return {false, "pipeline command failed"};
  const char* names[] = {"positives", "training dump", "models", "report"};
  std::string differing;
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (first[i] != again[i] || first[i] != four[i]) differing += std::string(" ") + names[i];
  }
  return {differing.empty(),
          differing.empty()
              ? "positives, training dump, models (" + std::to_string(first[2].size()) +
                    " bytes) and report byte-identical across reruns and --workers 1/4"
              : "differs:" + differing};
}

// ---------------------------------------------------------------------------

Outcome benchmark_plumbing() {
  TempDir dir;
  const std::string fixtures = SKILLEX_FIXTURE_DIR "/released/";
  std::string counts_csv;
  if (cli_run({"convert-benchmark", "--taxonomy", fixtures + "taxonomy.jsonl", "--input",
               "TECH:val:" + fixtures + "tech_val.csv", "--input",
               "TECH:test:" + fixtures + "tech_test.csv", "--input",
               "HOUSE:val:" + fixtures + "house_val.csv", "--input",
               "HOUSE:test:" + fixtures + "house_test.csv", "--out", dir.file("bench.jsonl")},
              &counts_csv) != 0) {
    return {false, "convert-benchmark failed"};
  }
  const auto bench = load_benchmark(dir.file("bench.jsonl"));
  const auto counts = benchmark_counts(bench);
  // Hand-counted from the fixture files.
  const std::map<Group, std::array<std::size_t, 3>> want{
      {{Dataset::kTech, Split::kVal}, {4, 5, 3}},
      {{Dataset::kTech, Split::kTest}, {2, 1, 1}},
      {{Dataset::kHouse, Split::kVal}, {2, 3, 2}},
      {{Dataset::kHouse, Split::kTest}, {3, 2, 1}},
  };
  bool exact = counts.size() == want.size();
  for (const auto& [group, w] : want) {
    const auto it = counts.find(group);
    exact &= it != counts.end() && it->second.sentences == w[0] && it->second.spans == w[1] &&
             it->second.labeled_spans == w[2];
  }
  bool mapped = true;
  for (const auto& g : bench) {
    for (const auto& l : g.gold_labels) mapped &= l.rfind("esco:", 0) == 0;
  }
  std::string detail = std::string("fixture counts ") + (exact ? "exact" : "WRONG") +
                       (mapped ? "" : ", unmapped labels") + " for 4 dataset/split groups";

  const char* tax = std::getenv("SKILLEX_ESCO_TAXONOMY");
  const char* real = std::getenv("SKILLEX_BENCHMARK");
  bool audit_ok = true;
  if (tax && real) {
    if (cli_run({"audit-supervision", "--taxonomy", tax, "--benchmark", real, "--out",
                 dir.file("audit.json")}) != 0) {
      return {false, detail + "; audit-supervision failed"};
    }
    const std::string json = read_file(dir.file("audit.json"));
    auto field = [&](const std::string& name) {
      const auto at = json.find("\"" + name + "\":");
      return at == std::string::npos ? -1.0 : std::atof(json.c_str() + at + name.size() + 3);
    };
    const double precision = field("precision");
    const double recall = field("recall");
    audit_ok = std::abs(precision - 0.79) <= 0.05 && std::abs(recall - 0.146) <= 0.03;
    detail += "; real-data audit precision " + fmt("%.4f", precision) + " (0.79 +- 0.05), recall " +
              fmt("%.4f", recall) + " (0.146 +- 0.03)";
  } else {
    detail += "; real-data audit skipped (set SKILLEX_ESCO_TAXONOMY and SKILLEX_BENCHMARK)";
  }
  return {exact && mapped && audit_ok, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"metric_oracle", metric_oracle},
      {"hand_anchored_metrics", hand_anchored},
      {"matcher_equivalence", matcher_equivalence},
      {"index_oracles", index_oracles},
      {"gradient_check", gradient_check},
      {"sampler_contracts", sampler_contracts},
      {"synthetic_trend", synthetic_trend},
      {"determinism", determinism},
      {"benchmark_plumbing", benchmark_plumbing},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
