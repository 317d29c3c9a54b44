#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "skillex/common.h"
#include "skillex/embeddings.h"
#include "skillex/matcher.h"
#include "skillex/related.h"
#include "skillex/sampler.h"

namespace skillex {

struct TrainConfig {
  // Inverse L2 regularization strength.
  double inverse_reg_c = 0.1;
  std::size_t max_iterations = 500;
  double grad_tolerance = 1e-6;
  std::uint32_t dim = 0;
  // Which encoder produced the training vectors: "hash" or "external".
  std::string encoder = "hash";

  void validate() const;
};

/// Design matrix for one binary problem. Rows point into caller-owned vectors
/// and may repeat (negatives are drawn with multiplicity).
struct Examples {
  std::uint32_t dim = 0;
  std::vector<const float*> rows;
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return rows.size(); }
  void add(std::span<const float> x, bool positive);
};

struct LossGradient {
  double loss = 0.0;
  // Weight gradient followed by the bias gradient (size dim + 1).
  std::vector<double> grad;
};

/// Mean binary cross-entropy of sigmoid(w.x + b) plus |w|^2 / (2 C N).
/// The bias is not regularized.
LossGradient loss_and_gradient(std::span<const double> weights, double bias,
                               const Examples& examples, const TrainConfig& config);

struct BinaryClassifier {
  SkillId skill;
  std::vector<double> weights;
  double bias = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;

  friend bool operator==(const BinaryClassifier&, const BinaryClassifier&) = default;
};

/// Optimizer log: loss after each accepted step (index 0 is the start).
struct TrainTrace {
  std::vector<double> losses;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Full-batch gradient descent from w = 0, b = 0 with Armijo backtracking
/// (c = 1e-4, halving). The first trial step each iteration is the
/// Barzilai-Borwein step. Stops when max|grad| <= tolerance or at the
/// iteration cap. Throws kNonFiniteLoss, kInvalidArgument.
BinaryClassifier train_classifier(const Examples& examples, const TrainConfig& config,
                                  TrainTrace* trace = nullptr);

/// sigmoid(w.x + b). Throws kDimensionMismatch.
double predict(const BinaryClassifier& classifier, std::span<const float> x);

struct ModelSet {
  std::uint32_t dim = 0;
  std::string fingerprint;
  std::string encoder = "hash";
  std::map<SkillId, BinaryClassifier> classifiers;
  // Known skills that had no positives and therefore no classifier.
  std::vector<SkillId> untrained;

  friend bool operator==(const ModelSet&, const ModelSet&) = default;
};

/// Stable hash of every setting that influences training.
std::string config_fingerprint(const SamplingConfig& sampling, const TrainConfig& training);

struct TrainAllOptions {
  int workers = 1;
  // Optional JSONL dump of every sampled training set.
  std::string training_dump_path;
};

/// One classifier per skill with positives; taxonomy skills without
/// positives are listed in ModelSet::untrained. Throws kMissingVector naming
/// sentence ids absent from `store`.
ModelSet train_all(const Taxonomy& taxonomy, const PositiveSets& positives,
                   const EmbeddingStore& store,
                   const std::vector<const RelatedIndex*>& indices,
                   const SamplingConfig& sampling, const TrainConfig& training,
                   const TrainAllOptions& options = {});

/// Header {"dim", "count", "fingerprint", "encoder", "untrained"}, then one
/// {"skill_id", "bias", "weights", "n_pos", "n_neg"} line per skill sorted by
/// id, floats written with 17 significant digits.
void write_model_set(const ModelSet& models, const std::string& path);
ModelSet read_model_set(const std::string& path);

}  // namespace skillex
