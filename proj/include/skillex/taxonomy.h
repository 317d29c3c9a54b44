#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "skillex/common.h"

namespace skillex {

struct Skill {
  SkillId id;
  std::string preferred_label;
  std::vector<std::string> alt_labels;
  // Parent concept ids. Parents are often skill groups that are not
  // themselves skills, so they are kept as opaque strings.
  std::vector<std::string> broader;

  friend bool operator==(const Skill&, const Skill&) = default;
};

/// Immutable skill label space. Skills are held sorted by id.
class Taxonomy {
 public:
  Taxonomy() = default;

  /// Validates and indexes the skills. Throws kDuplicateId, kEmptyLabel or
  /// kInvalidArgument (a skill listed as its own parent). Alternate labels
  /// that normalize to an earlier surface form are dropped.
  explicit Taxonomy(std::vector<Skill> skills);

  std::size_t size() const { return skills_.size(); }
  bool empty() const { return skills_.empty(); }
  bool contains(const SkillId& id) const { return index_.count(id) != 0; }

  /// Throws kUnknownSkill.
  const Skill& at(const SkillId& id) const;
  std::size_t index_of(const SkillId& id) const;

  const std::vector<Skill>& skills() const { return skills_; }
  std::vector<SkillId> ids() const;

  /// Skills other than `id` sharing at least one parent, sorted by id.
  std::vector<SkillId> siblings(const SkillId& id) const;

  /// Preferred label first, then alternates; duplicates under the matcher's
  /// normalization removed, first occurrence wins.
  std::vector<std::string> surface_forms(const SkillId& id) const;

  friend bool operator==(const Taxonomy& a, const Taxonomy& b) {
    return a.skills_ == b.skills_;
  }

 private:
  std::vector<Skill> skills_;
  std::unordered_map<SkillId, std::size_t> index_;
  std::map<std::string, std::vector<std::size_t>> children_;
};

/// Reads the canonical JSONL form. Throws kParse (with line number),
/// kDuplicateId, kEmptyLabel, kIo.
Taxonomy load_taxonomy(const std::string& path);
void write_taxonomy(const Taxonomy& taxonomy, const std::string& path);

struct EscoImport {
  Taxonomy taxonomy;
  // Relation rows whose child concept is not a known skill, or which point a
  // skill at itself.
  std::size_t skipped_relations = 0;
};

/// Converts the public ESCO CSV distribution (skills file plus a broader
/// relations file). Throws kMissingColumn, kIo.
EscoImport import_esco_csv(const std::string& skills_path,
                           const std::string& relations_path);

}  // namespace skillex
