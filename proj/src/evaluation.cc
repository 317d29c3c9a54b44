#include "skillex/evaluation.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "skillex/csv.h"
#include "skillex/ranking.h"
#include "skillex/text.h"

namespace skillex {

namespace {

struct SentenceMetrics {
  std::string sentence_id;
  double mrr = 0.0;
  double rp5 = 0.0;
  double rp10 = 0.0;
};

std::string upper_ascii(std::string s) {
  for (char& c : s) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return s;
}

// "label not present", "Label_Not_Present" -> marker; otherwise empty.
std::string marker_for(const std::string& label) {
  std::string key = upper_ascii(label);
  std::replace(key.begin(), key.end(), ' ', '_');
  const auto first = key.find_first_not_of('_');
  if (first == std::string::npos) return std::string(kLabelNotPresent);
  key = key.substr(first, key.find_last_not_of('_') - first + 1);
  if (key == kUnderspecified) return std::string(kUnderspecified);
  if (key == kLabelNotPresent) return std::string(kLabelNotPresent);
  return {};
}

std::optional<std::size_t> find_column(const std::vector<std::string>& header,
                                       std::initializer_list<const char*> names) {
  for (const char* name : names) {
    if (auto c = csv::column(header, name)) return c;
  }
  return std::nullopt;
}

}  // namespace

const char* to_string(Dataset dataset) {
  return dataset == Dataset::kTech ? "TECH" : "HOUSE";
}

const char* to_string(Split split) { return split == Split::kVal ? "val" : "test"; }

Dataset parse_dataset(std::string_view name) {
  if (name == "TECH") return Dataset::kTech;
  if (name == "HOUSE") return Dataset::kHouse;
  throw Error(ErrorKind::kParse, "unknown dataset '" + std::string(name) + "'");
}

Split parse_split(std::string_view name) {
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw Error(ErrorKind::kParse, "unknown split '" + std::string(name) + "'");
}

bool is_marker_label(std::string_view label) {
  return label == kUnderspecified || label == kLabelNotPresent;
}

void assign_gold_labels(GoldSentence& sentence) {
  std::set<SkillId> labels;
  for (const auto& span : sentence.spans) {
    if (!is_marker_label(span.label)) labels.insert(span.label);
  }
  sentence.gold_labels.assign(labels.begin(), labels.end());
}

std::vector<GoldSentence> load_benchmark(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open benchmark '" + path + "'");
  std::vector<GoldSentence> out;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + " line " + std::to_string(line_no);
    GoldSentence s;
    try {
      const auto obj = nlohmann::json::parse(line);
      s.dataset = parse_dataset(obj.at("dataset").get<std::string>());
      s.split = parse_split(obj.at("split").get<std::string>());
      s.sentence_id = obj.at("sentence_id").get<std::string>();
      s.text = obj.at("text").get<std::string>();
      const std::size_t length = text::code_point_length(s.text);
      for (const auto& span : obj.value("spans", nlohmann::json::array())) {
        Span sp;
        const auto start = span.at("start").get<long long>();
        const auto end = span.at("end").get<long long>();
        sp.label = span.at("label").get<std::string>();
        if (start < 0 || end < start || static_cast<std::size_t>(end) > length) {
          throw Error(ErrorKind::kParse, "span [" + std::to_string(start) + ", " +
                                             std::to_string(end) + ") outside text of length " +
                                             std::to_string(length));
        }
        sp.start = static_cast<std::size_t>(start);
        sp.end = static_cast<std::size_t>(end);
        s.spans.push_back(std::move(sp));
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParse, where + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorKind::kParse, where + ": " + e.what());
    }
    if (!ids.insert(s.sentence_id).second) {
      throw Error(ErrorKind::kDuplicateId, where + ": sentence id '" + s.sentence_id + "'");
    }
    assign_gold_labels(s);
    out.push_back(std::move(s));
  }
  return out;
}

void write_benchmark(std::span<const GoldSentence> bench, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path + "'");
  for (const auto& s : bench) {
    nlohmann::ordered_json obj;
    obj["dataset"] = to_string(s.dataset);
    obj["split"] = to_string(s.split);
    obj["sentence_id"] = s.sentence_id;
    obj["text"] = s.text;
    obj["spans"] = nlohmann::ordered_json::array();
    for (const auto& sp : s.spans) {
      nlohmann::ordered_json span;
      span["start"] = sp.start;
      span["end"] = sp.end;
      span["label"] = sp.label;
      obj["spans"].push_back(span);
    }
    out << obj.dump() << '\n';
  }
}

std::map<Group, BenchmarkCounts> benchmark_counts(std::span<const GoldSentence> bench) {
  std::map<Group, BenchmarkCounts> out;
  for (const auto& s : bench) {
    auto& c = out[{s.dataset, s.split}];
    ++c.sentences;
    c.spans += s.spans.size();
    for (const auto& sp : s.spans) {
      if (!is_marker_label(sp.label)) ++c.labeled_spans;
    }
  }
  return out;
}

ReleasedConversion convert_released_benchmark(const std::string& csv_path, Dataset dataset,
                                              Split split, const Taxonomy* taxonomy) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + csv_path + "'");
  csv::Reader reader(in);
  const auto header = reader.next();
  if (!header) throw Error(ErrorKind::kMissingColumn, "empty file " + csv_path);
  const auto sentence_col = find_column(*header, {"sentence", "text"});
  const auto span_col = find_column(*header, {"span", "span_text"});
  const auto label_col = find_column(*header, {"label", "esco_label"});
  const auto idx_col = find_column(*header, {"idx", "sentence_id", "id"});
  if (!sentence_col) throw Error(ErrorKind::kMissingColumn, "'sentence' in " + csv_path);
  if (!span_col) throw Error(ErrorKind::kMissingColumn, "'span' in " + csv_path);
  if (!label_col) throw Error(ErrorKind::kMissingColumn, "'label' in " + csv_path);

  std::unordered_map<std::string, SkillId> by_label;
  if (taxonomy) {
    // Preferred labels win over alternates when both collide.
    for (const auto& skill : taxonomy->skills()) {
      for (const auto& alt : skill.alt_labels) by_label.emplace(text::fold_case(alt), skill.id);
    }
    for (const auto& skill : taxonomy->skills()) {
      by_label[text::fold_case(skill.preferred_label)] = skill.id;
    }
  }

  ReleasedConversion out;
  std::unordered_map<std::string, std::size_t> position;
  const std::string prefix = std::string(to_string(dataset)) + "-" + to_string(split) + "-";
  while (auto row = reader.next()) {
    if (row->size() == 1 && (*row)[0].empty()) continue;
    auto cell = [&](std::optional<std::size_t> col) -> std::string {
      return col && *col < row->size() ? (*row)[*col] : std::string();
    };
    const std::string sentence = cell(sentence_col);
    const std::string key = idx_col ? cell(idx_col) : sentence;
    auto [it, inserted] = position.emplace(key, out.sentences.size());
    if (inserted) {
      GoldSentence s;
      s.dataset = dataset;
      s.split = split;
      s.sentence_id = prefix + (idx_col ? key : std::to_string(out.sentences.size()));
      s.text = sentence;
      out.sentences.push_back(std::move(s));
    }
    GoldSentence& s = out.sentences[it->second];
    const std::string span_text = cell(span_col);
    if (span_text.empty()) continue;

    Span sp;
    const auto byte_pos = s.text.find(span_text);
    if (byte_pos == std::string::npos) {
      ++out.unlocated_spans;
      sp.start = 0;
      sp.end = text::code_point_length(s.text);
    } else {
      sp.start = text::code_point_length(std::string_view(s.text).substr(0, byte_pos));
      sp.end = sp.start + text::code_point_length(span_text);
    }
    const std::string label = cell(label_col);
    const std::string marker = marker_for(label);
    if (!marker.empty()) {
      sp.label = marker;
    } else if (taxonomy && taxonomy->contains(label)) {
      sp.label = label;
    } else if (auto found = by_label.find(text::fold_case(label)); found != by_label.end()) {
      sp.label = found->second;
    } else {
      ++out.unmapped_labels;
      sp.label = label;
    }
    s.spans.push_back(std::move(sp));
  }
  for (auto& s : out.sentences) assign_gold_labels(s);
  return out;
}

double rp_at_k(std::span<const SkillId> ranked, std::span<const SkillId> gold, std::size_t k) {
  if (gold.empty()) throw Error(ErrorKind::kEmptyGold, "RP@K needs at least one gold label");
  if (k == 0) throw Error(ErrorKind::kInvalidArgument, "K must be >= 1");
  std::size_t hits = 0;
  const std::size_t depth = std::min(k, ranked.size());
  for (std::size_t i = 0; i < depth; ++i) {
    if (std::binary_search(gold.begin(), gold.end(), ranked[i])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(std::min(k, gold.size()));
}

double mrr(std::span<const SkillId> ranked, std::span<const SkillId> gold) {
  if (gold.empty()) throw Error(ErrorKind::kEmptyGold, "MRR needs at least one gold label");
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (std::binary_search(gold.begin(), gold.end(), ranked[i])) {
      return 1.0 / static_cast<double>(i + 1);
    }
  }
  return 0.0;
}

EvalReport evaluate(const ModelSet& models, std::span<const GoldSentence> bench,
                    const SentenceEncoder& encoder, int workers) {
  if (encoder.dim() != models.dim) {
    throw Error(ErrorKind::kDimensionMismatch,
                "encoder dim " + std::to_string(encoder.dim()) + ", model dim " +
                    std::to_string(models.dim));
  }
  const std::size_t all_skills = models.classifiers.size() + models.untrained.size();
  std::vector<std::size_t> evaluated;
  for (std::size_t i = 0; i < bench.size(); ++i) {
    if (!bench[i].gold_labels.empty()) evaluated.push_back(i);
  }
  std::vector<SentenceMetrics> metrics(evaluated.size());
  parallel_for(evaluated.size(), workers, [&](std::size_t e) {
    const GoldSentence& s = bench[evaluated[e]];
    const Vector x = encoder.encode(s.sentence_id, s.text);
    const RankedPrediction ranking = rank_skills(models, x, std::max<std::size_t>(all_skills, 1));
    std::vector<SkillId> ids;
    ids.reserve(ranking.top.size());
    for (const auto& entry : ranking.top) ids.push_back(entry.skill);
    metrics[e] = {s.sentence_id, mrr(ids, s.gold_labels), rp_at_k(ids, s.gold_labels, 5),
                  rp_at_k(ids, s.gold_labels, 10)};
  });

  std::map<Group, std::vector<SentenceMetrics>> grouped;
  for (const auto& s : bench) grouped[{s.dataset, s.split}];
  for (std::size_t e = 0; e < evaluated.size(); ++e) {
    const GoldSentence& s = bench[evaluated[e]];
    grouped[{s.dataset, s.split}].push_back(std::move(metrics[e]));
  }
  EvalReport report;
  for (auto& [group, rows] : grouped) {
    std::sort(rows.begin(), rows.end(), [](const SentenceMetrics& a, const SentenceMetrics& b) {
      if (a.sentence_id != b.sentence_id) return a.sentence_id < b.sentence_id;
      return std::tie(a.mrr, a.rp5, a.rp10) < std::tie(b.mrr, b.rp5, b.rp10);
    });
    GroupMetrics g;
    g.n = rows.size();
    for (const auto& r : rows) {
      g.mrr += r.mrr;
      g.rp5 += r.rp5;
      g.rp10 += r.rp10;
    }
    if (g.n > 0) {
      const double n = static_cast<double>(g.n);
      g.mrr /= n;
      g.rp5 /= n;
      g.rp10 /= n;
    }
    report.groups.emplace(group, g);
  }
  return report;
}

std::string report_json(const EvalReport& report) {
  std::string out = "{\"groups\":[";
  bool first = true;
  for (const auto& [group, g] : report.groups) {
    if (!first) out += ',';
    first = false;
    out += "{\"dataset\":" + json_string(to_string(group.first)) +
           ",\"split\":" + json_string(to_string(group.second)) + ",\"n\":" + std::to_string(g.n) +
           ",\"mrr\":" + format_double(g.mrr) + ",\"rp5\":" + format_double(g.rp5) +
           ",\"rp10\":" + format_double(g.rp10) + "}";
  }
  out += "]}";
  return out;
}

SupervisionQuality supervision_quality(const PositiveSets& auto_labels,
                                       std::span<const GoldSentence> bench) {
  std::set<std::pair<std::string, SkillId>> gold;
  std::unordered_set<std::string> in_bench;
  for (const auto& s : bench) {
    in_bench.insert(s.sentence_id);
    for (const auto& label : s.gold_labels) gold.emplace(s.sentence_id, label);
  }
  SupervisionQuality q;
  q.gold_pairs = gold.size();
  for (const auto& [skill, ids] : auto_labels.sets) {
    for (const auto& id : ids) {
      if (!in_bench.count(id)) continue;
      ++q.auto_pairs;
      if (gold.count({id, skill})) ++q.overlap;
    }
  }
  if (q.auto_pairs == 0) {
    q.precision = 1.0;
    q.precision_undefined = true;
  } else {
    q.precision = static_cast<double>(q.overlap) / static_cast<double>(q.auto_pairs);
  }
  if (q.gold_pairs == 0) {
    q.recall = 1.0;
    q.recall_undefined = true;
  } else {
    q.recall = static_cast<double>(q.overlap) / static_cast<double>(q.gold_pairs);
  }
  return q;
}

}  // namespace skillex
