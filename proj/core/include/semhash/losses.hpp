#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "semhash/model.hpp"
#include "semhash/numerics.hpp"
#include "semhash/pairs.hpp"

namespace semhash {

struct CauchyConfig {
  double gamma = 3.0;
  double epsilon = 1e-6;  // distance clamp and probability clamp

  void validate() const;
  friend bool operator==(const CauchyConfig&, const CauchyConfig&) = default;
};

struct StageWeights {
  double alpha1 = 1.0;  // subjective Cauchy loss
  double alpha2 = 1.0;  // relational Cauchy loss
  double beta = 0.01;   // adversarial encoder update

  void validate() const;
  friend bool operator==(const StageWeights&, const StageWeights&) = default;
};

/// Continuous relaxation of the Hamming distance between two codes:
/// (K/4) * || a/|a| - b/|b| ||^2 = (K/2) * (1 - cos(a, b)), in [0, K].
double continuous_hamming(std::span<const double> a, std::span<const double> b);

struct HammingGrad {
  double distance = 0.0;
  std::vector<double> d_first;
  std::vector<double> d_second;
};

HammingGrad continuous_hamming_with_grad(std::span<const double> a, std::span<const double> b);

/// gamma / (gamma + d).
double cauchy_similarity(double distance, const CauchyConfig& cfg);

/// Per-pair Cauchy cross-entropy as a function of the (clamped) distance.
double cauchy_ce_term(double distance, int label, const CauchyConfig& cfg);
/// The same quantity in the rewritten form s*ln(d/gamma) + ln(1 + gamma/d).
double cauchy_ce_term_rewritten(double distance, int label, const CauchyConfig& cfg);

/// A pair of rows of a code matrix with a binary target.
struct LabeledPair {
  std::size_t first = 0;
  std::size_t second = 0;
  int label = 0;
  double weight = 1.0;
};

struct PairLoss {
  double loss = 0.0;
  Matrix code_grad;  // same shape as the code matrix
};

/// Weighted mean Cauchy cross-entropy over `pairs`; with unit weights this is
/// the plain mean. The distance is clamped to [epsilon, K] before the logs.
PairLoss cauchy_ce(const Matrix& codes, std::span<const LabeledPair> pairs,
                   const CauchyConfig& cfg);

/// Pair of code rows tagged with its relationship type.
struct TypedPair {
  std::size_t first = 0;
  std::size_t second = 0;
  PairType type = PairType::different_class;
};

struct Stage2Options {
  StageWeights weights;
  CauchyConfig cauchy;
  bool relational = true;       // false drops J_s2 (single-loss baseline)
  bool reweight_types = false;  // inverse-frequency weighting per pair type
};

struct Stage2Loss {
  double total = 0.0;
  double subjective = 0.0;  // J_s1, over all pairs
  double relational = 0.0;  // J_s2, over type 0/1 pairs; 0 when none
  std::size_t relational_pairs = 0;
  Matrix code_grad;
};

Stage2Loss stage2_loss(const Matrix& codes, std::span<const TypedPair> pairs,
                       const Stage2Options& options);

struct ScalarLoss {
  double loss = 0.0;
  double grad = 0.0;
};

struct ClassLoss {
  double loss = 0.0;
  std::vector<double> logit_grad;
};

/// -ln p[true_class]; gradient w.r.t. the logits is p - onehot.
ClassLoss classification_ce(const ClassPrediction& prediction, int true_class);

/// Binary cross-entropy of a probability against a {0,1} label; the
/// probability is clamped to [epsilon, 1 - epsilon]. Gradient is w.r.t. the
/// probability (zero inside the clamp region).
ScalarLoss adversarial_bce(double probability, int label, double epsilon = 1e-6);

}  // namespace semhash
