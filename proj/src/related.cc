#include "skillex/related.h"

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>

#include <json.hpp>

#include "skillex/text.h"

namespace skillex {

namespace {

// Pattern preprocessed for Myers/Hyyro bit-parallel edit distance
// (patterns up to 64 code points).
class BitPattern {
 public:
  explicit BitPattern(std::u32string_view pattern) : length_(pattern.size()) {
    ascii_.fill(0);
    for (std::size_t i = 0; i < pattern.size() && i < 64; ++i) {
      const char32_t c = pattern[i];
      const std::uint64_t bit = std::uint64_t{1} << i;
      if (c < 128) {
        ascii_[c] |= bit;
      } else {
        auto it = std::lower_bound(other_.begin(), other_.end(), c,
                                   [](const auto& e, char32_t v) { return e.first < v; });
        if (it != other_.end() && it->first == c) {
          it->second |= bit;
        } else {
          other_.insert(it, {c, bit});
        }
      }
    }
  }

  std::size_t length() const { return length_; }

  std::uint64_t mask(char32_t c) const {
    if (c < 128) return ascii_[c];
    auto it = std::lower_bound(other_.begin(), other_.end(), c,
                               [](const auto& e, char32_t v) { return e.first < v; });
    return (it != other_.end() && it->first == c) ? it->second : 0;
  }

  std::size_t distance(std::u32string_view text) const {
    if (length_ == 0) return text.size();
    std::uint64_t pv = ~std::uint64_t{0};
    std::uint64_t mv = 0;
    std::size_t score = length_;
    const std::uint64_t last = std::uint64_t{1} << (length_ - 1);
    for (char32_t c : text) {
      const std::uint64_t eq = mask(c);
      const std::uint64_t xv = eq | mv;
      const std::uint64_t xh = (((eq & pv) + pv) ^ pv) | eq;
      std::uint64_t ph = mv | ~(xh | pv);
      std::uint64_t mh = pv & xh;
      if (ph & last) {
        ++score;
      } else if (mh & last) {
        --score;
      }
      // The first row of the DP table grows by one per text character.
      ph = (ph << 1) | 1;
      mh <<= 1;
      pv = mh | ~(xv | ph);
      mv = ph & xv;
    }
    return score;
  }

 private:
  std::size_t length_;
  std::array<std::uint64_t, 128> ascii_;
  std::vector<std::pair<char32_t, std::uint64_t>> other_;
};

std::size_t distance(const BitPattern* pattern, std::u32string_view a,
                     std::u32string_view b) {
  if (pattern && a.size() <= 64) return pattern->distance(b);
  return edit_distance(a, b);
}

std::vector<std::vector<std::size_t>> nearest_by_label(
    const Taxonomy& taxonomy, const IndexOptions& options) {
  const auto& skills = taxonomy.skills();
  const std::size_t n = skills.size();
  std::vector<std::u32string> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = text::to_code_points(text::fold_case(skills[i].preferred_label));
  }
  std::vector<std::vector<std::size_t>> result(n);
  parallel_for(n, options.workers, [&](std::size_t i) {
    const BitPattern pattern(labels[i]);
    std::vector<std::pair<std::size_t, std::size_t>> scored;
    scored.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      scored.emplace_back(distance(&pattern, labels[i], labels[j]), j);
    }
    const std::size_t keep = std::min(options.limit, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                      scored.end());
    result[i].reserve(keep);
    for (std::size_t r = 0; r < keep; ++r) result[i].push_back(scored[r].second);
  });
  return result;
}

std::vector<std::vector<std::size_t>> nearest_by_vector(
    const Taxonomy& taxonomy, const EmbeddingStore& vectors,
    const IndexOptions& options) {
  const auto& skills = taxonomy.skills();
  const std::size_t n = skills.size();
  std::vector<const Vector*> rows(n);
  std::vector<double> norms(n);
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < n; ++i) {
    rows[i] = vectors.find(skills[i].id);
    if (!rows[i]) {
      missing.push_back(skills[i].id);
      continue;
    }
    norms[i] = l2_norm(*rows[i]);
    if (norms[i] == 0.0) {
      throw Error(ErrorKind::kZeroNorm, "label vector for '" + skills[i].id + "'");
    }
  }
  if (!missing.empty()) {
    std::string msg = std::to_string(missing.size()) + " skills lack label vectors:";
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i) msg += " " + missing[i];
    throw Error(ErrorKind::kMissingVector, msg);
  }
  std::vector<std::vector<std::size_t>> result(n);
  parallel_for(n, options.workers, [&](std::size_t i) {
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      // Same arithmetic as cosine(), with the norms hoisted out of the loop.
      const double sim = std::clamp(dot(*rows[i], *rows[j]) / (norms[i] * norms[j]), -1.0, 1.0);
      scored.emplace_back(-sim, j);
    }
    const std::size_t keep = std::min(options.limit, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                      scored.end());
    result[i].reserve(keep);
    for (std::size_t r = 0; r < keep; ++r) result[i].push_back(scored[r].second);
  });
  return result;
}

}  // namespace

const char* to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::kSiblings: return "siblings";
    case Strategy::kLevenshtein: return "levenshtein";
    case Strategy::kEmbedding: return "embedding";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : kAllStrategies) {
    if (name == to_string(s)) return s;
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown strategy '" + std::string(name) + "'");
}

const std::vector<SkillId>& RelatedIndex::of(const SkillId& id) const {
  auto it = neighbors.find(id);
  if (it == neighbors.end()) throw Error(ErrorKind::kUnknownSkill, "'" + id + "' not in index");
  return it->second;
}

std::size_t edit_distance(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  const auto ca = text::to_code_points(text::fold_case(a));
  const auto cb = text::to_code_points(text::fold_case(b));
  if (ca.size() <= 64) return BitPattern(ca).distance(cb);
  return edit_distance(ca, cb);
}

RelatedIndex build_related_index(const Taxonomy& taxonomy, Strategy strategy,
                                 const EmbeddingStore* label_vectors,
                                 const IndexOptions& options) {
  RelatedIndex index;
  index.strategy = strategy;
  const auto& skills = taxonomy.skills();
  if (strategy == Strategy::kSiblings) {
    index.limit = 0;
    for (const auto& skill : skills) {
      index.neighbors.emplace(skill.id, taxonomy.siblings(skill.id));
    }
    return index;
  }
  if (options.limit == 0) {
    throw Error(ErrorKind::kInvalidArgument, "neighbor limit must be >= 1");
  }
  index.limit = options.limit;
  std::vector<std::vector<std::size_t>> nearest;
  if (strategy == Strategy::kLevenshtein) {
    nearest = nearest_by_label(taxonomy, options);
  } else {
    if (!label_vectors) {
      throw Error(ErrorKind::kMissingVector, "embedding strategy needs label vectors");
    }
    nearest = nearest_by_vector(taxonomy, *label_vectors, options);
  }
  for (std::size_t i = 0; i < skills.size(); ++i) {
    std::vector<SkillId> ids;
    ids.reserve(nearest[i].size());
    for (std::size_t j : nearest[i]) ids.push_back(skills[j].id);
    index.neighbors.emplace(skills[i].id, std::move(ids));
  }
  return index;
}

void write_related_index(const RelatedIndex& index, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path + "'");
  nlohmann::ordered_json header;
  header["strategy"] = to_string(index.strategy);
  if (index.limit == 0) {
    header["limit"] = nullptr;
  } else {
    header["limit"] = index.limit;
  }
  out << header.dump() << '\n';
  for (const auto& [skill, neighbors] : index.neighbors) {
    nlohmann::ordered_json obj;
    obj["skill_id"] = skill;
    obj["neighbors"] = neighbors;
    out << obj.dump() << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed for '" + path + "'");
}

RelatedIndex read_related_index(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open index '" + path + "'");
  RelatedIndex index;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = nlohmann::json::parse(line);
      if (!have_header) {
        index.strategy = parse_strategy(obj.at("strategy").get<std::string>());
        const auto& limit = obj.at("limit");
        index.limit = limit.is_null() ? 0 : limit.get<std::size_t>();
        have_header = true;
        continue;
      }
      auto skill = obj.at("skill_id").get<std::string>();
      auto neighbors = obj.at("neighbors").get<std::vector<std::string>>();
      if (std::find(neighbors.begin(), neighbors.end(), skill) != neighbors.end()) {
        throw Error(ErrorKind::kParse, "skill lists itself as a neighbor");
      }
      if (!index.neighbors.emplace(skill, std::move(neighbors)).second) {
        throw Error(ErrorKind::kDuplicateId, "skill '" + skill + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParse,
                  path + " line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kDuplicateId) throw;
      throw Error(ErrorKind::kParse,
                  path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw Error(ErrorKind::kParse, path + ": missing header line");
  return index;
}

}  // namespace skillex
