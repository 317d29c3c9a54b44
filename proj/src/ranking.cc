#include "skillex/ranking.h"

#include <algorithm>

#include "skillex/common.h"

namespace skillex {

RankedPrediction rank_skills(const ModelSet& models, std::span<const float> x,
                             std::size_t k) {
  if (k == 0) throw Error(ErrorKind::kInvalidArgument, "K must be >= 1");
  if (models.classifiers.empty() && models.untrained.empty()) {
    throw Error(ErrorKind::kEmptyModelSet, "no skills to rank");
  }
  if (x.size() != models.dim) {
    throw Error(ErrorKind::kDimensionMismatch,
                "vector dim " + std::to_string(x.size()) + ", model dim " +
                    std::to_string(models.dim));
  }
  std::vector<ScoredSkill> scored;
  scored.reserve(models.classifiers.size());
  for (const auto& [skill, classifier] : models.classifiers) {
    scored.push_back({skill, predict(classifier, x)});
  }
  auto better = [](const ScoredSkill& a, const ScoredSkill& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.skill < b.skill;
  };
  RankedPrediction out;
  const std::size_t trained_k = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(trained_k),
                    scored.end(), better);
  scored.resize(trained_k);
  out.top = std::move(scored);
  if (out.top.size() < k) {
    std::vector<SkillId> rest = models.untrained;
    std::sort(rest.begin(), rest.end());
    for (const auto& skill : rest) {
      if (out.top.size() == k) break;
      if (models.classifiers.count(skill)) continue;
      out.top.push_back({skill, 0.0});
    }
  }
  return out;
}

RankedPrediction extract(const std::string& sentence_id, std::string_view text,
                         const SentenceEncoder& encoder, const ModelSet& models,
                         std::size_t k) {
  if (encoder.dim() != models.dim) {
    throw Error(ErrorKind::kDimensionMismatch,
                "encoder dim " + std::to_string(encoder.dim()) + ", model dim " +
                    std::to_string(models.dim));
  }
  const Vector x = encoder.encode(sentence_id, text);
  RankedPrediction out = rank_skills(models, x, k);
  out.sentence_id = sentence_id;
  return out;
}

std::string prediction_json(const RankedPrediction& prediction) {
  std::string line = "{\"sentence_id\":" + json_string(prediction.sentence_id) + ",\"top\":[";
  for (std::size_t i = 0; i < prediction.top.size(); ++i) {
    if (i) line += ',';
    line += "{\"skill_id\":" + json_string(prediction.top[i].skill) +
            ",\"score\":" + format_double(prediction.top[i].score) + "}";
  }
  line += "]}";
  return line;
}

}  // namespace skillex
