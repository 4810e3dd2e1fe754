#include "semhash/losses.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "semhash/error.hpp"

namespace semhash {

void CauchyConfig::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("cauchy: gamma must be > 0");
  if (!(epsilon > 0.0 && epsilon <= 1e-3)) throw ConfigError("cauchy: epsilon must be in (0, 1e-3]");
}

void StageWeights::validate() const {
  if (!(alpha1 >= 0.0) || !(alpha2 >= 0.0) || !(beta >= 0.0)) {
    throw ConfigError("stage weights must be >= 0");
  }
}

namespace {

double sq_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

// (K/2)(1 - cos) evaluated as (K/2)(|a||b| - a.b) / (|a||b|): for +-1 codes
// every intermediate is an integer and the result is the exact bit count.
double half_k_one_minus_cos(double half_k, double dot, double norms) {
  return std::clamp(half_k * (norms - dot) / norms, 0.0, 2.0 * half_k);
}

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("continuous_hamming: code lengths " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()));
  }
  if (a.empty()) throw ShapeError("continuous_hamming: empty codes");
}

double distance_grad(double d, int label, const CauchyConfig& cfg) {
  const double g = cfg.gamma;
  return label == 1 ? 1.0 / (g + d) : -g / (d * (g + d));
}

}  // namespace

double continuous_hamming(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b);
  const double saa = sq_norm(a);
  const double sbb = sq_norm(b);
  if (saa == 0.0 || sbb == 0.0) throw NumericError("continuous_hamming: zero-norm code");
  double dot = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
  return half_k_one_minus_cos(0.5 * static_cast<double>(a.size()), dot, std::sqrt(saa * sbb));
}

HammingGrad continuous_hamming_with_grad(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b);
  const double saa = sq_norm(a);
  const double sbb = sq_norm(b);
  if (saa == 0.0 || sbb == 0.0) throw NumericError("continuous_hamming: zero-norm code");
  double dot = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
  const double norms = std::sqrt(saa * sbb);
  const double inv = 1.0 / norms;
  const double cos = dot * inv;
  const double half_k = 0.5 * static_cast<double>(a.size());
  HammingGrad out;
  out.distance = half_k_one_minus_cos(half_k, dot, norms);
  out.d_first.resize(a.size());
  out.d_second.resize(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    out.d_first[k] = -half_k * (b[k] * inv - cos * a[k] / saa);
    out.d_second[k] = -half_k * (a[k] * inv - cos * b[k] / sbb);
  }
  return out;
}

double cauchy_similarity(double distance, const CauchyConfig& cfg) {
  return cfg.gamma / (cfg.gamma + distance);
}

double cauchy_ce_term(double distance, int label, const CauchyConfig& cfg) {
  const double s_hat = cauchy_similarity(distance, cfg);
  return label == 1 ? -std::log(s_hat) : -std::log1p(-s_hat);
}

double cauchy_ce_term_rewritten(double distance, int label, const CauchyConfig& cfg) {
  return static_cast<double>(label) * std::log(distance / cfg.gamma) +
         std::log1p(cfg.gamma / distance);
}

PairLoss cauchy_ce(const Matrix& codes, std::span<const LabeledPair> pairs,
                   const CauchyConfig& cfg) {
  if (pairs.empty()) throw UsageError("cauchy_ce: empty pair list");
  const double K = static_cast<double>(codes.cols());
  double weight_sum = 0.0;
  for (const auto& p : pairs) {
    if (p.label != 0 && p.label != 1) throw UsageError("cauchy_ce: labels must be 0 or 1");
    if (p.first >= codes.rows() || p.second >= codes.rows()) {
      throw ShapeError("cauchy_ce: pair row out of range");
    }
    if (!(p.weight >= 0.0)) throw UsageError("cauchy_ce: negative pair weight");
    weight_sum += p.weight;
  }
  PairLoss out{0.0, Matrix(codes.rows(), codes.cols())};
  if (weight_sum == 0.0) return out;
  for (const auto& p : pairs) {
    const double w = p.weight / weight_sum;
    const auto hg = continuous_hamming_with_grad(codes.row(p.first), codes.row(p.second));
    const double d = std::clamp(hg.distance, cfg.epsilon, K);
    out.loss += w * cauchy_ce_term(d, p.label, cfg);
    if (hg.distance <= cfg.epsilon || hg.distance >= K) continue;  // clamped: flat
    const double scale = w * distance_grad(d, p.label, cfg);
    auto ga = out.code_grad.row(p.first);
    auto gb = out.code_grad.row(p.second);
    for (std::size_t k = 0; k < codes.cols(); ++k) {
      ga[k] += scale * hg.d_first[k];
      gb[k] += scale * hg.d_second[k];
    }
  }
  return out;
}

Stage2Loss stage2_loss(const Matrix& codes, std::span<const TypedPair> pairs,
                       const Stage2Options& options) {
  if (pairs.empty()) throw UsageError("stage2_loss: empty batch");
  options.weights.validate();

  std::array<std::size_t, kPairTypeCount> counts{};
  for (const auto& p : pairs) counts[static_cast<std::size_t>(p.type)] += 1;
  auto type_weight = [&](PairType t) {
    return options.reweight_types ? 1.0 / static_cast<double>(counts[static_cast<std::size_t>(t)])
                                  : 1.0;
  };

  std::vector<LabeledPair> subjective;
  std::vector<LabeledPair> relational;
  subjective.reserve(pairs.size());
  for (const auto& p : pairs) {
    const PairLabels labels = labels_from_type(p.type);
    subjective.push_back({p.first, p.second, labels.subjective, type_weight(p.type)});
    if (labels.relational) {
      relational.push_back({p.first, p.second, *labels.relational, type_weight(p.type)});
    }
  }

  Stage2Loss out;
  out.code_grad = Matrix(codes.rows(), codes.cols());
  auto add = [&](const PairLoss& part, double alpha) {
    auto dst = out.code_grad.values();
    const auto src = part.code_grad.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += alpha * src[i];
  };

  const PairLoss j1 = cauchy_ce(codes, subjective, options.cauchy);
  out.subjective = j1.loss;
  out.total = options.weights.alpha1 * j1.loss;
  if (options.weights.alpha1 != 0.0) add(j1, options.weights.alpha1);

  if (options.relational && !relational.empty()) {
    const PairLoss j2 = cauchy_ce(codes, relational, options.cauchy);
    out.relational = j2.loss;
    out.relational_pairs = relational.size();
    out.total += options.weights.alpha2 * j2.loss;
    if (options.weights.alpha2 != 0.0) add(j2, options.weights.alpha2);
  }
  return out;
}

ClassLoss classification_ce(const ClassPrediction& prediction, int true_class) {
  const std::size_t n = prediction.probabilities.size();
  if (true_class < 0 || static_cast<std::size_t>(true_class) >= n) {
    throw UsageError("classification_ce: class " + std::to_string(true_class) +
                     " out of range [0, " + std::to_string(n) + ")");
  }
  ClassLoss out;
  out.logit_grad = prediction.probabilities;
  out.logit_grad[static_cast<std::size_t>(true_class)] -= 1.0;
  if (prediction.logits.size() == n) {
    // log-sum-exp from logits when available
    const double mx = *std::max_element(prediction.logits.begin(), prediction.logits.end());
    double sum = 0.0;
    for (double l : prediction.logits) sum += std::exp(l - mx);
    out.loss = std::log(sum) + mx - prediction.logits[static_cast<std::size_t>(true_class)];
  } else {
    out.loss = -std::log(prediction.probabilities[static_cast<std::size_t>(true_class)]);
  }
  return out;
}

ScalarLoss adversarial_bce(double probability, int label, double epsilon) {
  if (label != 0 && label != 1) throw UsageError("adversarial_bce: label must be 0 or 1");
  const double p = std::clamp(probability, epsilon, 1.0 - epsilon);
  ScalarLoss out;
  out.loss = label == 1 ? -std::log(p) : -std::log1p(-p);
  const bool clamped = probability <= epsilon || probability >= 1.0 - epsilon;
  out.grad = clamped ? 0.0 : (label == 1 ? -1.0 / p : 1.0 / (1.0 - p));
  return out;
}

}  // namespace semhash
