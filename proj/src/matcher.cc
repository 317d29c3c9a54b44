#include "skillex/matcher.h"

#include <algorithm>
#include <deque>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "skillex/text.h"

namespace skillex {

namespace {

Sentence parse_sentence(const std::string& line, const std::string& path,
                        std::size_t line_no) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kParse,
                path + " line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string() ||
      !obj.contains("text") || !obj["text"].is_string()) {
    throw Error(ErrorKind::kParse, path + " line " + std::to_string(line_no) +
                                       ": expected {\"id\": str, \"text\": str}");
  }
  Sentence s{obj["id"].get<std::string>(), obj["text"].get<std::string>()};
  if (s.id.empty() || s.text.empty()) {
    throw Error(ErrorKind::kParse, path + " line " + std::to_string(line_no) +
                                       ": empty id or text");
  }
  return s;
}

// Collects per-skill matches across batches, then applies the cap.
class LabelAccumulator {
 public:
  LabelAccumulator(const Matcher& matcher, const LabelOptions& options)
      : matcher_(matcher), options_(options),
        matches_(matcher.skill_ids().size()) {
    if (options.cap == 0) {
      throw Error(ErrorKind::kInvalidArgument, "positive cap must be >= 1");
    }
  }

  void add_batch(std::span<const Sentence> batch) {
    for (const auto& s : batch) {
      if (!seen_.insert(s.id).second) {
        throw Error(ErrorKind::kDuplicateId, "sentence id '" + s.id + "'");
      }
    }
    std::vector<std::vector<std::size_t>> hits(batch.size());
    parallel_for(batch.size(), options_.workers,
                 [&](std::size_t i) { hits[i] = matcher_.match(batch[i].text); });
    for (std::size_t i = 0; i < batch.size(); ++i) {
      for (std::size_t skill : hits[i]) matches_[skill].push_back(batch[i].id);
    }
  }

  PositiveSets finish() {
    PositiveSets out;
    out.cap = options_.cap;
    const auto& ids = matcher_.skill_ids();
    for (std::size_t k = 0; k < matches_.size(); ++k) {
      auto& found = matches_[k];
      if (found.empty()) continue;
      std::sort(found.begin(), found.end());
      if (found.size() > options_.cap) {
        Rng rng(mix_seed(options_.seed, ids[k]));
        for (std::size_t j = 0; j < options_.cap; ++j) {
          const std::size_t pick = j + uniform_below(rng, found.size() - j);
          std::swap(found[j], found[pick]);
        }
        found.resize(options_.cap);
        std::sort(found.begin(), found.end());
      }
      out.sets.emplace(ids[k], std::move(found));
    }
    return out;
  }

 private:
  const Matcher& matcher_;
  LabelOptions options_;
  std::vector<std::vector<std::string>> matches_;
  std::unordered_set<std::string> seen_;
};

}  // namespace

std::vector<Sentence> read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open corpus '" + path + "'");
  std::vector<Sentence> out;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Sentence s = parse_sentence(line, path, line_no);
    if (!ids.insert(s.id).second) {
      throw Error(ErrorKind::kDuplicateId, "sentence id '" + s.id + "' on line " +
                                               std::to_string(line_no));
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_corpus(std::span<const Sentence> corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path + "'");
  for (const auto& s : corpus) {
    nlohmann::ordered_json obj;
    obj["id"] = s.id;
    obj["text"] = s.text;
    out << obj.dump() << '\n';
  }
}

const std::vector<std::string>* PositiveSets::find(const SkillId& id) const {
  auto it = sets.find(id);
  return it == sets.end() ? nullptr : &it->second;
}

std::size_t PositiveSets::count(const SkillId& id) const {
  const auto* set = find(id);
  return set ? set->size() : 0;
}

void write_positive_sets(const PositiveSets& positives, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path + "'");
  for (const auto& [skill, ids] : positives.sets) {
    nlohmann::ordered_json obj;
    obj["skill_id"] = skill;
    obj["sentence_ids"] = ids;
    out << obj.dump() << '\n';
  }
}

PositiveSets read_positive_sets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open positives '" + path + "'");
  PositiveSets out;
  out.cap = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
      auto skill = obj.at("skill_id").get<std::string>();
      auto ids = obj.at("sentence_ids").get<std::vector<std::string>>();
      std::sort(ids.begin(), ids.end());
      if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw Error(ErrorKind::kParse, path + " line " + std::to_string(line_no) +
                                           ": repeated sentence id");
      }
      out.cap = std::max(out.cap, ids.size());
      if (!out.sets.emplace(skill, std::move(ids)).second) {
        throw Error(ErrorKind::kDuplicateId, "skill '" + skill + "' on line " +
                                                 std::to_string(line_no));
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParse,
                  path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  // The file does not record the cap; the largest set is a valid lower bound.
  out.cap = std::max<std::size_t>(out.cap, 1);
  return out;
}

Matcher::Matcher(const Taxonomy& taxonomy,
                 const std::vector<std::string>& stoplist) {
  std::unordered_set<std::string> stopped;
  for (const auto& form : stoplist) stopped.insert(text::normalized_form(form));

  nodes_.emplace_back();
  skill_ids_ = taxonomy.ids();
  for (std::uint32_t k = 0; k < skill_ids_.size(); ++k) {
    for (const auto& form : taxonomy.surface_forms(skill_ids_[k])) {
      const auto tokens = text::normalize(form);
      if (tokens.empty()) {
        ++skipped_empty_;
        continue;
      }
      if (!stopped.empty() && stopped.count(text::normalized_form(form))) {
        ++skipped_stoplisted_;
        continue;
      }
      std::uint32_t state = 0;
      for (const auto& token : tokens) {
        auto [it, inserted] = vocabulary_.emplace(
            token, static_cast<std::uint32_t>(vocabulary_.size()));
        const std::uint32_t id = it->second;
        std::uint32_t next = child(state, id);
        if (next == 0) {
          next = static_cast<std::uint32_t>(nodes_.size());
          auto& edges = nodes_[state].next;
          edges.insert(std::lower_bound(edges.begin(), edges.end(),
                                        std::make_pair(id, std::uint32_t{0})),
                       {id, next});
          nodes_.emplace_back();
        }
        state = next;
      }
      if (nodes_[state].pattern < 0) {
        nodes_[state].pattern = static_cast<std::int32_t>(pattern_skills_.size());
        pattern_skills_.emplace_back();
      }
      auto& owners = pattern_skills_[static_cast<std::size_t>(nodes_[state].pattern)];
      if (std::find(owners.begin(), owners.end(), k) == owners.end()) {
        owners.push_back(k);
      }
    }
  }

  // Breadth-first failure links; root children fail to the root.
  std::deque<std::uint32_t> queue;
  for (const auto& [token, next] : nodes_[0].next) queue.push_back(next);
  while (!queue.empty()) {
    const std::uint32_t u = queue.front();
    queue.pop_front();
    for (const auto& [token, v] : nodes_[u].next) {
      std::uint32_t f = nodes_[u].fail;
      std::uint32_t target = 0;
      while (true) {
        const std::uint32_t c = child(f, token);
        if (c != 0 && c != v) {
          target = c;
          break;
        }
        if (f == 0) break;
        f = nodes_[f].fail;
      }
      nodes_[v].fail = target;
      nodes_[v].output_link =
          nodes_[target].pattern >= 0 ? target : nodes_[target].output_link;
      queue.push_back(v);
    }
  }
}

std::uint32_t Matcher::child(std::uint32_t state, std::uint32_t token) const {
  const auto& edges = nodes_[state].next;
  auto it = std::lower_bound(edges.begin(), edges.end(),
                             std::make_pair(token, std::uint32_t{0}));
  return (it != edges.end() && it->first == token) ? it->second : 0;
}

std::uint32_t Matcher::step(std::uint32_t state, std::uint32_t token) const {
  while (true) {
    const std::uint32_t next = child(state, token);
    if (next != 0) return next;
    if (state == 0) return 0;
    state = nodes_[state].fail;
  }
}

std::vector<std::size_t> Matcher::match_tokens(
    std::span<const std::string> tokens) const {
  std::vector<std::size_t> out;
  std::uint32_t state = 0;
  for (const auto& token : tokens) {
    auto it = vocabulary_.find(token);
    if (it == vocabulary_.end()) {
      // No pattern contains this token, so no match can span it.
      state = 0;
      continue;
    }
    state = step(state, it->second);
    for (std::uint32_t node = state; node != 0; node = nodes_[node].output_link) {
      const auto pattern = nodes_[node].pattern;
      if (pattern >= 0) {
        for (std::uint32_t k : pattern_skills_[static_cast<std::size_t>(pattern)]) {
          out.push_back(k);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::size_t> Matcher::match(std::string_view text) const {
  const auto tokens = text::normalize(text);
  return match_tokens(tokens);
}

std::vector<SkillId> Matcher::match_ids(std::string_view text) const {
  std::vector<SkillId> out;
  for (std::size_t k : match(text)) out.push_back(skill_ids_[k]);
  return out;
}

PositiveSets label_corpus(const Matcher& matcher,
                          std::span<const Sentence> corpus,
                          const LabelOptions& options) {
  LabelAccumulator acc(matcher, options);
  acc.add_batch(corpus);
  return acc.finish();
}

PositiveSets label_corpus_file(const Matcher& matcher, const std::string& path,
                               const LabelOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open corpus '" + path + "'");
  LabelAccumulator acc(matcher, options);
  constexpr std::size_t kBatch = 16384;
  std::vector<Sentence> batch;
  batch.reserve(kBatch);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    batch.push_back(parse_sentence(line, path, line_no));
    if (batch.size() == kBatch) {
      acc.add_batch(batch);
      batch.clear();
    }
  }
  if (in.bad()) throw Error(ErrorKind::kIo, "read failed for '" + path + "'");
  acc.add_batch(batch);
  return acc.finish();
}

CorpusStats corpus_stats(const PositiveSets& positives, const Taxonomy& taxonomy) {
  CorpusStats stats;
  stats.skills = taxonomy.size();
  std::size_t total = 0;
  std::size_t le_10 = 0;
  for (const auto& skill : taxonomy.skills()) {
    const std::size_t n = positives.count(skill.id);
    stats.counts.emplace(skill.id, n);
    total += n;
    if (n > 0) ++stats.nonempty_skills;
    if (n <= 10) ++le_10;
  }
  if (stats.skills > 0) {
    stats.mean_positives_all_skills =
        static_cast<double>(total) / static_cast<double>(stats.skills);
    stats.fraction_skills_le_10 =
        static_cast<double>(le_10) / static_cast<double>(stats.skills);
  } else {
    stats.fraction_skills_le_10 = 1.0;
  }
  if (stats.nonempty_skills > 0) {
    stats.mean_positives_nonempty =
        static_cast<double>(total) / static_cast<double>(stats.nonempty_skills);
  }
  return stats;
}

}  // namespace skillex
