#include "semhash/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "semhash/error.hpp"

namespace semhash {

namespace {

enum class LastActivation { relu, linear };

Layer make_layer(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double bound = init_bound(fan_in, fan_out);
  std::uniform_real_distribution<double> dist(-bound, bound);
  Layer layer{Matrix(fan_in, fan_out), std::vector<double>(fan_out, 0.0)};
  for (double& w : layer.weights.values()) w = dist(rng);
  return layer;
}

Matrix stack_forward(std::span<const Layer> layers, const Matrix& input, LastActivation last,
                     StackTape& tape) {
  tape.inputs.clear();
  tape.outputs.clear();
  Matrix x = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Matrix pre = affine_forward(x, layers[i].weights, layers[i].bias);
    const bool is_last = i + 1 == layers.size();
    Matrix out = (is_last && last == LastActivation::linear) ? std::move(pre) : relu_forward(pre);
    tape.inputs.push_back(std::move(x));
    tape.outputs.push_back(out);
    x = std::move(out);
  }
  return x;
}

Matrix stack_backward(std::span<const Layer> layers, const StackTape& tape,
                      const Matrix& upstream, LastActivation last, StackGrad* grads,
                      const char* who) {
  if (tape.inputs.size() != layers.size() || tape.outputs.size() != layers.size()) {
    throw UsageError(std::string(who) + " backward: missing forward cache");
  }
  if (grads != nullptr && grads->size() != layers.size()) {
    throw ShapeError(std::string(who) + " backward: gradient stack size mismatch");
  }
  Matrix g = upstream;
  for (std::size_t n = layers.size(); n-- > 0;) {
    const bool is_last = n + 1 == layers.size();
    if (!(is_last && last == LastActivation::linear)) g = relu_backward(g, tape.outputs[n]);
    AffineGrads ag = affine_backward(g, tape.inputs[n], layers[n].weights);
    if (grads != nullptr) {
      LayerGrad& dst = (*grads)[n];
      auto dw = dst.weights.values();
      const auto sw = ag.weights.values();
      for (std::size_t i = 0; i < dw.size(); ++i) dw[i] += sw[i];
      for (std::size_t i = 0; i < dst.bias.size(); ++i) dst.bias[i] += ag.bias[i];
    }
    g = std::move(ag.input);
  }
  return g;
}

StackGrad zero_stack(std::span<const Layer> layers) {
  StackGrad out;
  out.reserve(layers.size());
  for (const auto& l : layers) {
    out.push_back({Matrix(l.weights.rows(), l.weights.cols()),
                   std::vector<double>(l.bias.size(), 0.0)});
  }
  return out;
}

LayerGrad zero_layer(const Layer& l) {
  return {Matrix(l.weights.rows(), l.weights.cols()), std::vector<double>(l.bias.size(), 0.0)};
}

void add_into(LayerGrad& dst, const LayerGrad& src) {
  auto dw = dst.weights.values();
  const auto sw = src.weights.values();
  for (std::size_t i = 0; i < dw.size(); ++i) dw[i] += sw[i];
  for (std::size_t i = 0; i < dst.bias.size(); ++i) dst.bias[i] += src.bias[i];
}

void scale_layer(LayerGrad& g, double f) {
  for (double& v : g.weights.values()) v *= f;
  for (double& v : g.bias) v *= f;
}

template <typename Params, typename Fn>
void visit_blocks(Params& params, Fn&& fn) {
  auto stack = [&](auto& layers, const std::string& prefix, Network net) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const std::string base = prefix + "." + std::to_string(i);
      fn(base + ".weights", layers[i].weights.values(), net);
      fn(base + ".bias", std::span(layers[i].bias), net);
    }
  };
  stack(params.encoder, "encoder", Network::encoder);
  fn(std::string("hash.weights"), params.hash.weights.values(), Network::hash);
  fn(std::string("hash.bias"), std::span(params.hash.bias), Network::hash);
  stack(params.classifier, "classifier", Network::classifier);
  stack(params.discriminator, "discriminator", Network::discriminator);
}

void check_width(const Matrix& m, std::size_t expected, const char* what) {
  if (m.cols() != expected) {
    throw ShapeError(std::string(what) + ": width " + std::to_string(m.cols()) +
                     ", expected " + std::to_string(expected));
  }
}

}  // namespace

const char* to_string(Network net) noexcept {
  switch (net) {
    case Network::encoder: return "encoder";
    case Network::hash: return "hash";
    case Network::classifier: return "classifier";
    case Network::discriminator: return "discriminator";
  }
  return "?";
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string("model: ") + name + " must be > 0");
  };
  positive(input_dim, "input_dim");
  positive(code_bits, "code_bits");
  positive(discriminator_channels, "discriminator_channels");
  if (encoder_widths.empty()) throw ConfigError("model: encoder needs at least one layer");
  if (num_classes < 2) throw ConfigError("model: num_classes must be >= 2");
  for (auto w : encoder_widths) positive(w, "encoder width");
  for (auto w : classifier_widths) positive(w, "classifier width");
  for (auto w : discriminator_widths) positive(w, "discriminator width");
}

double init_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  ModelParams p;
  p.config = config;

  std::size_t width = config.input_dim;
  for (auto w : config.encoder_widths) {
    p.encoder.push_back(make_layer(width, w, rng));
    width = w;
  }
  p.hash = make_layer(width, config.code_bits, rng);

  std::size_t cw = width;
  for (auto w : config.classifier_widths) {
    p.classifier.push_back(make_layer(cw, w, rng));
    cw = w;
  }
  p.classifier.push_back(make_layer(cw, config.num_classes, rng));

  p.discriminator.push_back(make_layer(2, config.discriminator_channels, rng));
  std::size_t dw = config.code_bits * config.discriminator_channels;
  for (auto w : config.discriminator_widths) {
    p.discriminator.push_back(make_layer(dw, w, rng));
    dw = w;
  }
  p.discriminator.push_back(make_layer(dw, 1, rng));
  return p;
}

void for_each_block(ModelParams& params,
                    const std::function<void(const std::string&, std::span<double>, Network)>& fn) {
  visit_blocks(params, fn);
}

void for_each_block(
    const ModelParams& params,
    const std::function<void(const std::string&, std::span<const double>, Network)>& fn) {
  visit_blocks(params, fn);
}

std::uint64_t checksum(const ModelParams& params, Network net) {
  std::uint64_t h = 1469598103934665603ull;
  for_each_block(params, [&](const std::string&, std::span<const double> values, Network n) {
    if (n != net) return;
    for (double v : values) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof(double));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
      }
    }
  });
  return h;
}

EncoderForward encoder_forward(const ModelParams& params, const Matrix& inputs) {
  check_width(inputs, params.config.input_dim, "encoder input");
  EncoderForward f;
  f.features = stack_forward(params.encoder, inputs, LastActivation::relu, f.tape);
  return f;
}

HashForward hash_forward(const ModelParams& params, const Matrix& features) {
  check_width(features, params.hash.weights.rows(), "hash head input");
  HashForward f;
  f.input = features;
  f.codes = tanh_forward(affine_forward(features, params.hash.weights, params.hash.bias));
  // tanh rounds to exactly +-1 past |a| ~ 19; keep codes off the boundary
  const double edge = std::nextafter(1.0, 0.0);
  for (double& v : f.codes.values()) v = std::clamp(v, -edge, edge);
  return f;
}

ClassifierForward classifier_forward(const ModelParams& params, const Matrix& features) {
  check_width(features, params.config.feature_dim(), "classifier input");
  ClassifierForward f;
  f.logits = stack_forward(params.classifier, features, LastActivation::linear, f.tape);
  f.probabilities = softmax_rows(f.logits);
  return f;
}

DiscriminatorForward discriminator_forward(const ModelParams& params, const Matrix& first,
                                           const Matrix& second) {
  const std::size_t K = params.config.code_bits;
  const std::size_t C = params.config.discriminator_channels;
  check_width(first, K, "discriminator channel 0");
  check_width(second, K, "discriminator channel 1");
  if (first.rows() != second.rows()) throw ShapeError("discriminator: channel batch mismatch");
  if (params.discriminator.size() < 2) throw ShapeError("discriminator: missing layers");

  DiscriminatorForward f;
  f.first = first;
  f.second = second;
  const Layer& mixer = params.discriminator.front();
  f.mixed = Matrix(first.rows(), K * C);
  for (std::size_t r = 0; r < first.rows(); ++r) {
    const auto a = first.row(r);
    const auto b = second.row(r);
    auto out = f.mixed.row(r);
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t c = 0; c < C; ++c) {
        const double v = a[k] * mixer.weights(0, c) + b[k] * mixer.weights(1, c) + mixer.bias[c];
        out[k * C + c] = v > 0.0 ? v : 0.0;
      }
    }
  }
  const auto dense = std::span<const Layer>(params.discriminator).subspan(1);
  Matrix logits = stack_forward(dense, f.mixed, LastActivation::linear, f.tape);
  f.logits.resize(first.rows());
  f.probabilities.resize(first.rows());
  for (std::size_t r = 0; r < first.rows(); ++r) {
    f.logits[r] = logits(r, 0);
    f.probabilities[r] = sigmoid(logits(r, 0));
  }
  return f;
}

bool ModelGrads::has(Network net) const noexcept {
  switch (net) {
    case Network::encoder: return encoder.has_value();
    case Network::hash: return hash.has_value();
    case Network::classifier: return classifier.has_value();
    case Network::discriminator: return discriminator.has_value();
  }
  return false;
}

void ModelGrads::accumulate(const ModelGrads& other) {
  auto merge_stack = [](std::optional<StackGrad>& dst, const std::optional<StackGrad>& src) {
    if (!src) return;
    if (!dst) {
      dst = src;
      return;
    }
    if (dst->size() != src->size()) throw ShapeError("ModelGrads::accumulate: stack mismatch");
    for (std::size_t i = 0; i < dst->size(); ++i) add_into((*dst)[i], (*src)[i]);
  };
  merge_stack(encoder, other.encoder);
  merge_stack(classifier, other.classifier);
  merge_stack(discriminator, other.discriminator);
  if (other.hash) {
    if (!hash) {
      hash = other.hash;
    } else {
      add_into(*hash, *other.hash);
    }
  }
}

void ModelGrads::scale(double factor) {
  for (auto* stack : {&encoder, &classifier, &discriminator}) {
    if (*stack) {
      for (auto& g : **stack) scale_layer(g, factor);
    }
  }
  if (hash) scale_layer(*hash, factor);
}

void for_each_grad_block(const ModelGrads& grads,
                         const std::function<void(const std::string&, std::span<const double>)>& fn) {
  auto stack = [&](const std::optional<StackGrad>& s, const std::string& prefix) {
    if (!s) return;
    for (std::size_t i = 0; i < s->size(); ++i) {
      const std::string base = prefix + "." + std::to_string(i);
      fn(base + ".weights", (*s)[i].weights.values());
      fn(base + ".bias", std::span<const double>((*s)[i].bias));
    }
  };
  stack(grads.encoder, "encoder");
  if (grads.hash) {
    fn("hash.weights", grads.hash->weights.values());
    fn("hash.bias", std::span<const double>(grads.hash->bias));
  }
  stack(grads.classifier, "classifier");
  stack(grads.discriminator, "discriminator");
}

Matrix encoder_backward(const ModelParams& params, const StackTape& tape, const Matrix& upstream,
                        ModelGrads& grads) {
  if (!grads.encoder) grads.encoder = zero_stack(params.encoder);
  return stack_backward(params.encoder, tape, upstream, LastActivation::relu, &*grads.encoder,
                        "encoder");
}

Matrix hash_backward(const ModelParams& params, const HashForward& forward,
                     const Matrix& upstream, ModelGrads& grads) {
  if (forward.codes.empty() && upstream.rows() != 0) {
    throw UsageError("hash backward: missing forward cache");
  }
  const Matrix pre_grad = tanh_backward(upstream, forward.codes);
  AffineGrads ag = affine_backward(pre_grad, forward.input, params.hash.weights);
  if (!grads.hash) grads.hash = zero_layer(params.hash);
  add_into(*grads.hash, LayerGrad{std::move(ag.weights), std::move(ag.bias)});
  return std::move(ag.input);
}

Matrix classifier_backward(const ModelParams& params, const ClassifierForward& forward,
                           const Matrix& logit_grad, ModelGrads& grads) {
  if (!grads.classifier) grads.classifier = zero_stack(params.classifier);
  return stack_backward(params.classifier, forward.tape, logit_grad, LastActivation::linear,
                        &*grads.classifier, "classifier");
}

std::pair<Matrix, Matrix> discriminator_backward(const ModelParams& params,
                                                 const DiscriminatorForward& forward,
                                                 std::span<const double> logit_grad,
                                                 ModelGrads& grads, bool accumulate_params) {
  const std::size_t B = forward.first.rows();
  const std::size_t K = params.config.code_bits;
  const std::size_t C = params.config.discriminator_channels;
  if (forward.mixed.empty() || forward.tape.empty()) {
    throw UsageError("discriminator backward: missing forward cache");
  }
  if (logit_grad.size() != B) throw ShapeError("discriminator backward: logit grad length");

  const auto dense = std::span<const Layer>(params.discriminator).subspan(1);
  StackGrad dense_grads = zero_stack(dense);
  Matrix upstream(B, 1, std::vector<double>(logit_grad.begin(), logit_grad.end()));
  Matrix d_mixed = stack_backward(dense, forward.tape, upstream, LastActivation::linear,
                                  accumulate_params ? &dense_grads : nullptr, "discriminator");
  d_mixed = relu_backward(d_mixed, forward.mixed);

  const Layer& mixer = params.discriminator.front();
  LayerGrad mixer_grad = zero_layer(mixer);
  Matrix d_first(B, K);
  Matrix d_second(B, K);
  for (std::size_t r = 0; r < B; ++r) {
    const auto a = forward.first.row(r);
    const auto b = forward.second.row(r);
    const auto g = d_mixed.row(r);
    for (std::size_t k = 0; k < K; ++k) {
      double da = 0.0;
      double db = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        const double gv = g[k * C + c];
        if (gv == 0.0) continue;
        da += gv * mixer.weights(0, c);
        db += gv * mixer.weights(1, c);
        mixer_grad.weights(0, c) += gv * a[k];
        mixer_grad.weights(1, c) += gv * b[k];
        mixer_grad.bias[c] += gv;
      }
      d_first(r, k) = da;
      d_second(r, k) = db;
    }
  }
  if (accumulate_params) {
    if (!grads.discriminator) grads.discriminator = zero_stack(params.discriminator);
    add_into((*grads.discriminator)[0], mixer_grad);
    for (std::size_t i = 0; i < dense_grads.size(); ++i) {
      add_into((*grads.discriminator)[i + 1], dense_grads[i]);
    }
  }
  return {std::move(d_first), std::move(d_second)};
}

std::vector<double> encode_features(std::span<const double> x, const ModelParams& params) {
  auto f = encoder_forward(params, Matrix::from_row(x));
  const auto row = f.features.row(0);
  return {row.begin(), row.end()};
}

std::vector<double> hash_head(std::span<const double> z, const ModelParams& params) {
  auto f = hash_forward(params, Matrix::from_row(z));
  const auto row = f.codes.row(0);
  return {row.begin(), row.end()};
}

ClassPrediction classify(std::span<const double> z, const ModelParams& params) {
  auto f = classifier_forward(params, Matrix::from_row(z));
  const auto l = f.logits.row(0);
  const auto p = f.probabilities.row(0);
  return {{l.begin(), l.end()}, {p.begin(), p.end()}};
}

double discriminate(std::span<const double> first, std::span<const double> second,
                    const ModelParams& params) {
  return discriminator_forward(params, Matrix::from_row(first), Matrix::from_row(second))
      .probabilities.front();
}

ShuffledPair shuffle_channels(std::span<const double> code_i, std::span<const double> code_j,
                              int shuffle_bit) {
  if (code_i.size() != code_j.size()) {
    throw ShapeError("shuffle_channels: code lengths " + std::to_string(code_i.size()) +
                     " and " + std::to_string(code_j.size()));
  }
  if (shuffle_bit != 0 && shuffle_bit != 1) throw UsageError("shuffle_channels: bit must be 0 or 1");
  std::vector<double> a(code_i.begin(), code_i.end());
  std::vector<double> b(code_j.begin(), code_j.end());
  if (shuffle_bit == 1) std::swap(a, b);
  return {std::move(a), std::move(b), shuffle_bit};
}

}  // namespace semhash
