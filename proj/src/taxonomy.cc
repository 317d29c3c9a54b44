#include "skillex/taxonomy.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "skillex/csv.h"
#include "skillex/text.h"

namespace skillex {

namespace {

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r';
  });
}

std::vector<std::string> string_list(const nlohmann::json& value,
                                     const char* field, std::size_t line) {
  if (value.is_null()) return {};
  if (!value.is_array()) {
    throw Error(ErrorKind::kParse, "line " + std::to_string(line) + ": '" +
                                       field + "' must be an array");
  }
  std::vector<std::string> out;
  for (const auto& item : value) {
    if (!item.is_string()) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(line) + ": '" +
                                         field + "' must hold strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

Taxonomy::Taxonomy(std::vector<Skill> skills) {
  std::sort(skills.begin(), skills.end(),
            [](const Skill& a, const Skill& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < skills.size(); ++i) {
    Skill& skill = skills[i];
    if (skill.id.empty()) {
      throw Error(ErrorKind::kInvalidArgument, "skill with empty id");
    }
    if (i > 0 && skills[i - 1].id == skill.id) {
      throw Error(ErrorKind::kDuplicateId, "skill id '" + skill.id + "'");
    }
    if (is_blank(skill.preferred_label)) {
      throw Error(ErrorKind::kEmptyLabel,
                  "skill '" + skill.id + "' has an empty preferred label");
    }
    if (std::find(skill.broader.begin(), skill.broader.end(), skill.id) !=
        skill.broader.end()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "skill '" + skill.id + "' lists itself as a parent");
    }
    std::unordered_set<std::string> seen{
        text::normalized_form(skill.preferred_label)};
    std::vector<std::string> alts;
    for (auto& alt : skill.alt_labels) {
      if (is_blank(alt)) continue;
      if (seen.insert(text::normalized_form(alt)).second) {
        alts.push_back(std::move(alt));
      }
    }
    skill.alt_labels = std::move(alts);
    std::vector<std::string> parents;
    std::unordered_set<std::string> seen_parents;
    for (auto& parent : skill.broader) {
      if (seen_parents.insert(parent).second) parents.push_back(std::move(parent));
    }
    skill.broader = std::move(parents);
  }
  skills_ = std::move(skills);
  for (std::size_t i = 0; i < skills_.size(); ++i) {
    index_.emplace(skills_[i].id, i);
    for (const auto& parent : skills_[i].broader) children_[parent].push_back(i);
  }
}

const Skill& Taxonomy::at(const SkillId& id) const {
  return skills_[index_of(id)];
}

std::size_t Taxonomy::index_of(const SkillId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorKind::kUnknownSkill, "'" + id + "'");
  return it->second;
}

std::vector<SkillId> Taxonomy::ids() const {
  std::vector<SkillId> out;
  out.reserve(skills_.size());
  for (const auto& s : skills_) out.push_back(s.id);
  return out;
}

std::vector<SkillId> Taxonomy::siblings(const SkillId& id) const {
  const std::size_t self = index_of(id);
  std::set<std::size_t> found;
  for (const auto& parent : skills_[self].broader) {
    for (std::size_t child : children_.at(parent)) {
      if (child != self) found.insert(child);
    }
  }
  // Indices are in id order, so the output is sorted by id.
  std::vector<SkillId> out;
  out.reserve(found.size());
  for (std::size_t i : found) out.push_back(skills_[i].id);
  return out;
}

std::vector<std::string> Taxonomy::surface_forms(const SkillId& id) const {
  const Skill& skill = at(id);
  std::vector<std::string> out{skill.preferred_label};
  out.insert(out.end(), skill.alt_labels.begin(), skill.alt_labels.end());
  return out;
}

Taxonomy load_taxonomy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open taxonomy '" + path + "'");
  std::vector<Skill> skills;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::kParse,
                  path + " line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string() ||
        !obj.contains("preferred_label") || !obj["preferred_label"].is_string()) {
      throw Error(ErrorKind::kParse, path + " line " + std::to_string(line_no) +
                                         ": expected {\"id\", \"preferred_label\", ...}");
    }
    Skill skill;
    skill.id = obj["id"].get<std::string>();
    skill.preferred_label = obj["preferred_label"].get<std::string>();
    skill.alt_labels = string_list(obj.value("alt_labels", nlohmann::json()),
                                   "alt_labels", line_no);
    skill.broader =
        string_list(obj.value("broader", nlohmann::json()), "broader", line_no);
    if (!ids.insert(skill.id).second) {
      throw Error(ErrorKind::kDuplicateId, "skill id '" + skill.id + "' on line " +
                                               std::to_string(line_no));
    }
    if (is_blank(skill.preferred_label)) {
      throw Error(ErrorKind::kEmptyLabel, "skill '" + skill.id + "' on line " +
                                              std::to_string(line_no));
    }
    skills.push_back(std::move(skill));
  }
  return Taxonomy(std::move(skills));
}

void write_taxonomy(const Taxonomy& taxonomy, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path + "'");
  for (const auto& skill : taxonomy.skills()) {
    nlohmann::ordered_json obj;
    obj["id"] = skill.id;
    obj["preferred_label"] = skill.preferred_label;
    obj["alt_labels"] = skill.alt_labels;
    obj["broader"] = skill.broader;
    out << obj.dump() << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed for '" + path + "'");
}

EscoImport import_esco_csv(const std::string& skills_path,
                           const std::string& relations_path) {
  auto open = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path + "'");
    return in;
  };
  auto require = [](const std::vector<std::string>& header,
                    const std::string& name, const std::string& path) {
    auto col = csv::column(header, name);
    if (!col) {
      throw Error(ErrorKind::kMissingColumn, "'" + name + "' in " + path);
    }
    return *col;
  };

  std::vector<Skill> skills;
  std::unordered_map<std::string, std::size_t> by_uri;
  {
    std::ifstream in = open(skills_path);
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header) throw Error(ErrorKind::kMissingColumn, "empty file " + skills_path);
    const std::size_t uri_col = require(*header, "conceptUri", skills_path);
    const std::size_t pref_col = require(*header, "preferredLabel", skills_path);
    const std::size_t alt_col = require(*header, "altLabels", skills_path);
    while (auto row = reader.next()) {
      if (row->size() == 1 && (*row)[0].empty()) continue;
      if (row->size() <= std::max({uri_col, pref_col, alt_col})) {
        throw Error(ErrorKind::kParse, skills_path + " record on line " +
                                           std::to_string(reader.line()) +
                                           " has too few columns");
      }
      Skill skill;
      skill.id = (*row)[uri_col];
      skill.preferred_label = (*row)[pref_col];
      const std::string& alts = (*row)[alt_col];
      std::size_t start = 0;
      while (start <= alts.size()) {
        std::size_t end = alts.find('\n', start);
        if (end == std::string::npos) end = alts.size();
        std::string alt = alts.substr(start, end - start);
        if (!alt.empty() && alt.back() == '\r') alt.pop_back();
        if (!is_blank(alt)) skill.alt_labels.push_back(std::move(alt));
        start = end + 1;
      }
      if (by_uri.count(skill.id)) {
        throw Error(ErrorKind::kDuplicateId, "conceptUri '" + skill.id + "'");
      }
      by_uri.emplace(skill.id, skills.size());
      skills.push_back(std::move(skill));
    }
  }

  EscoImport result;
  {
    std::ifstream in = open(relations_path);
    csv::Reader reader(in);
    auto header = reader.next();
    if (header) {
      const std::size_t child_col = require(*header, "conceptUri", relations_path);
      const std::size_t parent_col = require(*header, "broaderUri", relations_path);
      while (auto row = reader.next()) {
        if (row->size() == 1 && (*row)[0].empty()) continue;
        if (row->size() <= std::max(child_col, parent_col)) {
          ++result.skipped_relations;
          continue;
        }
        const std::string& child = (*row)[child_col];
        const std::string& parent = (*row)[parent_col];
        auto it = by_uri.find(child);
        if (it == by_uri.end() || parent.empty() || parent == child) {
          ++result.skipped_relations;
          continue;
        }
        skills[it->second].broader.push_back(parent);
      }
    }
  }
  result.taxonomy = Taxonomy(std::move(skills));
  return result;
}

}  // namespace skillex
