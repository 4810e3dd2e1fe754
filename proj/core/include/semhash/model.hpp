#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "semhash/numerics.hpp"

namespace semhash {

/// Layer widths of the four networks. The encoder is a relu MLP over vector
/// inputs; its last width is the feature width z. The classifier and
/// discriminator widths list hidden layers only: the classifier appends an
/// N-wide logit layer and the discriminator a single logit.
struct ModelConfig {
  std::size_t input_dim = 16;
  std::vector<std::size_t> encoder_widths{64, 32};
  std::size_t code_bits = 16;
  std::size_t num_classes = 5;
  std::vector<std::size_t> classifier_widths{256, 128};
  std::size_t discriminator_channels = 4;
  std::vector<std::size_t> discriminator_widths{128, 256, 128};

  void validate() const;
  std::size_t feature_dim() const { return encoder_widths.back(); }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct Layer {
  Matrix weights;  // fan_in x fan_out
  std::vector<double> bias;

  friend bool operator==(const Layer&, const Layer&) = default;
};

enum class Network { encoder, hash, classifier, discriminator };

const char* to_string(Network net) noexcept;

struct ModelParams {
  ModelConfig config;
  std::vector<Layer> encoder;
  Layer hash;
  std::vector<Layer> classifier;
  // discriminator[0] is the 1x1 cross-channel mixer: weights 2 x C, applied
  // identically at each of the K code positions.
  std::vector<Layer> discriminator;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Uniform init in +-sqrt(6 / (fan_in + fan_out)), zero biases.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

double init_bound(std::size_t fan_in, std::size_t fan_out);

/// Visits every parameter block as (name, values, network). Names look like
/// "encoder.0.weights" and are stable across versions of the checkpoint format.
void for_each_block(ModelParams& params,
                    const std::function<void(const std::string&, std::span<double>, Network)>& fn);
void for_each_block(const ModelParams& params,
                    const std::function<void(const std::string&, std::span<const double>, Network)>& fn);

/// FNV-1a over the raw bytes of one network's blocks.
std::uint64_t checksum(const ModelParams& params, Network net);

// Forward passes work on batches (one row per example) and record what the
// matching backward pass needs in a tape.

struct StackTape {
  std::vector<Matrix> inputs;
  std::vector<Matrix> outputs;  // post-activation
  bool empty() const noexcept { return inputs.empty(); }
};

struct EncoderForward {
  Matrix features;  // z
  StackTape tape;
};

struct HashForward {
  Matrix input;  // z
  Matrix codes;  // tanh output in (-1, 1)
};

struct ClassifierForward {
  Matrix logits;
  Matrix probabilities;
  StackTape tape;
};

struct DiscriminatorForward {
  Matrix first;   // channel 0 codes, B x K
  Matrix second;  // channel 1 codes, B x K
  Matrix mixed;   // relu of the 1x1 mixer, B x (K*C), position-major
  StackTape tape;
  std::vector<double> logits;
  std::vector<double> probabilities;
};

EncoderForward encoder_forward(const ModelParams& params, const Matrix& inputs);
HashForward hash_forward(const ModelParams& params, const Matrix& features);
ClassifierForward classifier_forward(const ModelParams& params, const Matrix& features);
DiscriminatorForward discriminator_forward(const ModelParams& params, const Matrix& first,
                                           const Matrix& second);

struct LayerGrad {
  Matrix weights;
  std::vector<double> bias;
};
using StackGrad = std::vector<LayerGrad>;

/// Gradients for the blocks a backward pass reached; untouched networks stay
/// empty so optimizers skip them.
struct ModelGrads {
  std::optional<StackGrad> encoder;
  std::optional<LayerGrad> hash;
  std::optional<StackGrad> classifier;
  std::optional<StackGrad> discriminator;

  bool has(Network net) const noexcept;
  /// Adds `other` into this, allocating absent networks.
  void accumulate(const ModelGrads& other);
  void scale(double factor);
};

void for_each_grad_block(const ModelGrads& grads,
                         const std::function<void(const std::string&, std::span<const double>)>& fn);

Matrix encoder_backward(const ModelParams& params, const StackTape& tape, const Matrix& upstream,
                        ModelGrads& grads);
Matrix hash_backward(const ModelParams& params, const HashForward& forward,
                     const Matrix& upstream, ModelGrads& grads);
Matrix classifier_backward(const ModelParams& params, const ClassifierForward& forward,
                           const Matrix& logit_grad, ModelGrads& grads);
/// Returns gradients w.r.t. (first, second). Pass `accumulate_params = false`
/// to get input gradients only (discriminator frozen).
std::pair<Matrix, Matrix> discriminator_backward(const ModelParams& params,
                                                 const DiscriminatorForward& forward,
                                                 std::span<const double> logit_grad,
                                                 ModelGrads& grads, bool accumulate_params = true);

// Single-example conveniences.

struct ClassPrediction {
  std::vector<double> logits;
  std::vector<double> probabilities;
};

std::vector<double> encode_features(std::span<const double> x, const ModelParams& params);
std::vector<double> hash_head(std::span<const double> z, const ModelParams& params);
ClassPrediction classify(std::span<const double> z, const ModelParams& params);
double discriminate(std::span<const double> first, std::span<const double> second,
                    const ModelParams& params);

struct ShuffledPair {
  std::vector<double> first;
  std::vector<double> second;
  int label;
};

/// bit 0 keeps the order {i, j}; bit 1 presents {j, i}. The label is the bit.
ShuffledPair shuffle_channels(std::span<const double> code_i, std::span<const double> code_j,
                              int shuffle_bit);

}  // namespace semhash
