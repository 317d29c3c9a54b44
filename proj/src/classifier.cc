#include "skillex/classifier.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace skillex {

namespace {

constexpr double kArmijoC = 1e-4;
constexpr int kMaxHalvings = 60;

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double row_dot(const float* x, std::span<const double> w) {
  double s = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) s += static_cast<double>(x[j]) * w[j];
  return s;
}

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

// Margins z_i = w.x_i + b for every row.
void margins(const Examples& ex, std::span<const double> w, double b,
             std::vector<double>& z) {
  z.resize(ex.size());
  for (std::size_t i = 0; i < ex.size(); ++i) z[i] = row_dot(ex.rows[i], w) + b;
}

double loss_from_margins(const Examples& ex, const std::vector<double>& z,
                         std::span<const double> w, const TrainConfig& config) {
  double sum = 0.0;
  for (std::size_t i = 0; i < ex.size(); ++i) {
    sum += softplus(z[i]) - (ex.labels[i] ? z[i] : 0.0);
  }
  const double n = static_cast<double>(ex.size());
  return sum / n + squared_norm(w) / (2.0 * config.inverse_reg_c * n);
}

void gradient_from_margins(const Examples& ex, const std::vector<double>& z,
                           std::span<const double> w, const TrainConfig& config,
                           std::vector<double>& grad) {
  const std::size_t dim = w.size();
  grad.assign(dim + 1, 0.0);
  for (std::size_t i = 0; i < ex.size(); ++i) {
    const double r = sigmoid(z[i]) - (ex.labels[i] ? 1.0 : 0.0);
    const float* x = ex.rows[i];
    for (std::size_t j = 0; j < dim; ++j) grad[j] += r * static_cast<double>(x[j]);
    grad[dim] += r;
  }
  const double n = static_cast<double>(ex.size());
  const double reg = 1.0 / (config.inverse_reg_c * n);
  for (std::size_t j = 0; j < dim; ++j) grad[j] = grad[j] / n + reg * w[j];
  grad[dim] /= n;
}

void check_examples(const Examples& ex, std::size_t dim) {
  if (ex.size() == 0) throw Error(ErrorKind::kInvalidArgument, "no training examples");
  if (ex.dim != dim) {
    throw Error(ErrorKind::kDimensionMismatch,
                "examples have dim " + std::to_string(ex.dim) + ", weights " +
                    std::to_string(dim));
  }
  if (ex.labels.size() != ex.rows.size()) {
    throw Error(ErrorKind::kInvalidArgument, "label count differs from row count");
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(inverse_reg_c > 0.0) || !std::isfinite(inverse_reg_c)) {
    throw Error(ErrorKind::kInvalidArgument, "C must be positive");
  }
  if (max_iterations == 0) throw Error(ErrorKind::kInvalidArgument, "max iterations must be >= 1");
  if (!(grad_tolerance > 0.0)) throw Error(ErrorKind::kInvalidArgument, "tolerance must be positive");
}

void Examples::add(std::span<const float> x, bool positive) {
  if (x.size() != dim) {
    throw Error(ErrorKind::kDimensionMismatch,
                "row has " + std::to_string(x.size()) + " values, expected " + std::to_string(dim));
  }
  rows.push_back(x.data());
  labels.push_back(positive ? 1 : 0);
}

LossGradient loss_and_gradient(std::span<const double> weights, double bias,
                               const Examples& examples, const TrainConfig& config) {
  check_examples(examples, weights.size());
  std::vector<double> z;
  margins(examples, weights, bias, z);
  LossGradient out;
  out.loss = loss_from_margins(examples, z, weights, config);
  gradient_from_margins(examples, z, weights, config, out.grad);
  return out;
}

BinaryClassifier train_classifier(const Examples& examples, const TrainConfig& config,
                                  TrainTrace* trace) {
  config.validate();
  const std::size_t dim = examples.dim;
  check_examples(examples, dim);

  std::vector<double> theta(dim + 1, 0.0);  // weights then bias
  auto weights = [&](std::vector<double>& t) { return std::span<const double>(t.data(), dim); };

  std::vector<double> z;
  margins(examples, weights(theta), theta[dim], z);
  double loss = loss_from_margins(examples, z, weights(theta), config);
  if (!std::isfinite(loss)) throw Error(ErrorKind::kNonFiniteLoss, "initial loss");
  std::vector<double> grad;
  gradient_from_margins(examples, z, weights(theta), config, grad);

  TrainTrace local;
  TrainTrace& log = trace ? *trace : local;
  log = TrainTrace{};
  log.losses.push_back(loss);

  std::vector<double> prev_theta;
  std::vector<double> prev_grad;
  std::vector<double> trial(dim + 1);
  std::vector<double> trial_z;
  double step = 1.0;

  for (std::size_t iter = 0; iter < config.max_iterations; ++iter) {
    double max_abs = 0.0;
    for (double g : grad) max_abs = std::max(max_abs, std::abs(g));
    if (max_abs <= config.grad_tolerance) {
      log.converged = true;
      break;
    }
    if (!prev_theta.empty()) {
      double sy = 0.0;
      double ss = 0.0;
      for (std::size_t j = 0; j <= dim; ++j) {
        const double s = theta[j] - prev_theta[j];
        sy += s * (grad[j] - prev_grad[j]);
        ss += s * s;
      }
      step = sy > 0.0 ? ss / sy : step * 2.0;
    }
    step = std::clamp(step, 1e-12, 1e12);
    const double g2 = squared_norm(grad);

    bool accepted = false;
    double trial_loss = loss;
    for (int h = 0; h < kMaxHalvings; ++h, step *= 0.5) {
      for (std::size_t j = 0; j <= dim; ++j) trial[j] = theta[j] - step * grad[j];
      margins(examples, weights(trial), trial[dim], trial_z);
      trial_loss = loss_from_margins(examples, trial_z, weights(trial), config);
      if (std::isfinite(trial_loss) && trial_loss < loss &&
          trial_loss <= loss - kArmijoC * step * g2) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // no representable decrease left

    prev_theta = theta;
    prev_grad = grad;
    theta.swap(trial);
    z.swap(trial_z);
    loss = trial_loss;
    gradient_from_margins(examples, z, weights(theta), config, grad);
    log.losses.push_back(loss);
    log.iterations = iter + 1;
  }
  if (!log.converged) {
    double max_abs = 0.0;
    for (double g : grad) max_abs = std::max(max_abs, std::abs(g));
    log.converged = max_abs <= config.grad_tolerance;
  }

  BinaryClassifier out;
  out.weights.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(dim));
  out.bias = theta[dim];
  for (auto label : examples.labels) (label ? out.n_pos : out.n_neg)++;
  for (double w : out.weights) {
    if (!std::isfinite(w)) throw Error(ErrorKind::kNonFiniteLoss, "non-finite weight after training");
  }
  return out;
}

double predict(const BinaryClassifier& classifier, std::span<const float> x) {
  if (x.size() != classifier.weights.size()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "vector dim " + std::to_string(x.size()) + ", classifier dim " +
                    std::to_string(classifier.weights.size()));
  }
  return sigmoid(row_dot(x.data(), classifier.weights) + classifier.bias);
}

std::string config_fingerprint(const SamplingConfig& sampling, const TrainConfig& training) {
  std::ostringstream canon;
  canon << "k=" << sampling.negatives_per_positive
        << ";rho=" << format_double(sampling.hard_fraction) << ";strategies=";
  std::vector<std::string> names;
  for (Strategy s : sampling.strategies) names.emplace_back(to_string(s));
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  for (const auto& n : names) canon << n << ',';
  canon << ";seed=" << sampling.seed;
  if (sampling.strategy_weights) {
    canon << ";weights=";
    for (double w : *sampling.strategy_weights) canon << format_double(w) << ',';
  }
  canon << ";C=" << format_double(training.inverse_reg_c)
        << ";max_iter=" << training.max_iterations
        << ";tol=" << format_double(training.grad_tolerance)
        << ";dim=" << training.dim << ";encoder=" << training.encoder;
  return hex64(fnv1a64(canon.str()));
}

ModelSet train_all(const Taxonomy& taxonomy, const PositiveSets& positives,
                   const EmbeddingStore& store,
                   const std::vector<const RelatedIndex*>& indices,
                   const SamplingConfig& sampling, const TrainConfig& training,
                   const TrainAllOptions& options) {
  sampling.validate();
  TrainConfig config = training;
  if (config.dim == 0) config.dim = store.dim();
  config.validate();
  if (config.dim != store.dim()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "training dim " + std::to_string(config.dim) + ", store dim " +
                    std::to_string(store.dim()));
  }

  const SamplingContext context(positives);
  std::vector<const Vector*> vectors(context.universe_size());
  std::vector<std::string> missing;
  for (std::uint32_t i = 0; i < context.universe_size(); ++i) {
    vectors[i] = store.find(context.sentence_id(i));
    if (!vectors[i]) missing.push_back(context.sentence_id(i));
  }
  if (!missing.empty()) {
    std::string msg = std::to_string(missing.size()) + " positive sentences lack vectors:";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg += " " + missing[i];
    if (missing.size() > 20) msg += " ...";
    throw Error(ErrorKind::kMissingVector, msg);
  }

  std::vector<SkillId> trainable;
  ModelSet models;
  models.dim = config.dim;
  models.encoder = config.encoder;
  models.fingerprint = config_fingerprint(sampling, config);
  for (const auto& [skill, ids] : positives.sets) {
    if (!taxonomy.contains(skill)) {
      throw Error(ErrorKind::kUnknownSkill, "positives reference '" + skill + "'");
    }
    if (!ids.empty()) trainable.push_back(skill);
  }
  for (const auto& skill : taxonomy.skills()) {
    if (!context.has_positives(skill.id)) models.untrained.push_back(skill.id);
  }

  std::vector<BinaryClassifier> trained(trainable.size());
  std::vector<std::string> dumps(options.training_dump_path.empty() ? 0 : trainable.size());
  parallel_for(trainable.size(), options.workers, [&](std::size_t t) {
    const TrainingSet set = sample_negatives(trainable[t], context, indices, sampling);
    Examples ex;
    ex.dim = config.dim;
    ex.rows.reserve(set.positives.size() + set.negatives.size());
    ex.labels.reserve(ex.rows.capacity());
    for (auto i : set.positives) ex.add(*vectors[i], true);
    for (auto i : set.negatives) ex.add(*vectors[i], false);
    trained[t] = train_classifier(ex, config);
    trained[t].skill = trainable[t];
    if (!dumps.empty()) dumps[t] = training_set_json(set, context);
  });
  for (auto& c : trained) models.classifiers.emplace(c.skill, std::move(c));

  if (!options.training_dump_path.empty()) {
    std::ofstream out(options.training_dump_path, std::ios::binary);
    if (!out) throw Error(ErrorKind::kIo, "cannot write '" + options.training_dump_path + "'");
    for (const auto& line : dumps) out << line << '\n';
  }
  return models;
}

void write_model_set(const ModelSet& models, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path + "'");
  nlohmann::ordered_json header;
  header["dim"] = models.dim;
  header["count"] = models.classifiers.size();
  header["fingerprint"] = models.fingerprint;
  header["encoder"] = models.encoder;
  header["untrained"] = models.untrained;
  out << header.dump() << '\n';
  std::string line;
  for (const auto& [skill, c] : models.classifiers) {
    if (c.weights.size() != models.dim) {
      throw Error(ErrorKind::kDimensionMismatch, "classifier '" + skill + "'");
    }
    line = "{\"skill_id\":" + nlohmann::json(skill).dump() + ",\"bias\":" + format_double(c.bias) +
           ",\"weights\":[";
    for (std::size_t j = 0; j < c.weights.size(); ++j) {
      if (j) line += ',';
      line += format_double(c.weights[j]);
    }
    line += "],\"n_pos\":" + std::to_string(c.n_pos) + ",\"n_neg\":" + std::to_string(c.n_neg) + "}";
    out << line << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed for '" + path + "'");
}

ModelSet read_model_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open models '" + path + "'");
  ModelSet models;
  std::string line;
  std::size_t line_no = 0;
  std::size_t declared = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = nlohmann::json::parse(line);
      if (!have_header) {
        models.dim = obj.at("dim").get<std::uint32_t>();
        declared = obj.at("count").get<std::size_t>();
        models.fingerprint = obj.at("fingerprint").get<std::string>();
        models.encoder = obj.value("encoder", std::string("external"));
        if (obj.contains("untrained")) {
          models.untrained = obj["untrained"].get<std::vector<std::string>>();
        }
        have_header = true;
        continue;
      }
      BinaryClassifier c;
      c.skill = obj.at("skill_id").get<std::string>();
      c.bias = obj.at("bias").get<double>();
      c.weights = obj.at("weights").get<std::vector<double>>();
      c.n_pos = obj.at("n_pos").get<std::size_t>();
      c.n_neg = obj.at("n_neg").get<std::size_t>();
      if (c.weights.size() != models.dim) {
        throw Error(ErrorKind::kDimensionMismatch,
                    path + " line " + std::to_string(line_no) + ": weight count " +
                        std::to_string(c.weights.size()));
      }
      const SkillId skill = c.skill;
      if (!models.classifiers.emplace(skill, std::move(c)).second) {
        throw Error(ErrorKind::kDuplicateId, "classifier '" + skill + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParse, path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw Error(ErrorKind::kParse, path + ": missing header line");
  if (declared != models.classifiers.size()) {
    throw Error(ErrorKind::kTruncatedRecord,
                path + ": header declares " + std::to_string(declared) + " classifiers, found " +
                    std::to_string(models.classifiers.size()));
  }
  return models;
}

}  // namespace skillex
