#include "semhash/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "semhash/error.hpp"

namespace semhash {

namespace {

std::string shape_of(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": " + shape_of(a) + " vs " + shape_of(b));
  }
}

}  // namespace

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::shape: return "shape error";
    case ErrorKind::usage: return "usage error";
    case ErrorKind::config: return "config error";
    case ErrorKind::validation: return "validation error";
    case ErrorKind::parse: return "parse error";
    case ErrorKind::incompatible: return "incompatible file";
    case ErrorKind::numeric: return "numeric error";
    case ErrorKind::io: return "I/O error";
  }
  return "error";
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw ShapeError("matrix data length " + std::to_string(values_.size()) + " != " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_row(std::span<const double> row) {
  return Matrix(1, row.size(), std::vector<double>(row.begin(), row.end()));
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Matrix affine_forward(const Matrix& input, const Matrix& weights, std::span<const double> bias) {
  if (input.cols() != weights.rows()) {
    throw ShapeError("affine_forward: input " + shape_of(input) + " vs weights " +
                     shape_of(weights));
  }
  if (bias.size() != weights.cols()) {
    throw ShapeError("affine_forward: bias length " + std::to_string(bias.size()) +
                     " vs weights " + shape_of(weights));
  }
  const std::size_t n = weights.cols();
  Matrix out(input.rows(), n);
  for (std::size_t r = 0; r < input.rows(); ++r) {
    auto out_row = out.row(r);
    std::copy(bias.begin(), bias.end(), out_row.begin());
    const auto in_row = input.row(r);
    for (std::size_t k = 0; k < input.cols(); ++k) {
      const double x = in_row[k];
      if (x == 0.0) continue;
      const auto w_row = weights.row(k);
      for (std::size_t c = 0; c < n; ++c) out_row[c] += x * w_row[c];
    }
  }
  return out;
}

AffineGrads affine_backward(const Matrix& upstream, const Matrix& cached_input,
                            const Matrix& weights) {
  if (cached_input.cols() != weights.rows() || upstream.cols() != weights.cols() ||
      upstream.rows() != cached_input.rows()) {
    throw ShapeError("affine_backward: upstream " + shape_of(upstream) + ", input " +
                     shape_of(cached_input) + ", weights " + shape_of(weights));
  }
  const std::size_t batch = upstream.rows();
  const std::size_t in = weights.rows();
  const std::size_t out = weights.cols();
  AffineGrads g{Matrix(batch, in), Matrix(in, out), std::vector<double>(out, 0.0)};
  for (std::size_t r = 0; r < batch; ++r) {
    const auto up = upstream.row(r);
    const auto x = cached_input.row(r);
    auto dx = g.input.row(r);
    for (std::size_t c = 0; c < out; ++c) g.bias[c] += up[c];
    for (std::size_t k = 0; k < in; ++k) {
      const auto w_row = weights.row(k);
      auto dw_row = g.weights.row(k);
      double acc = 0.0;
      for (std::size_t c = 0; c < out; ++c) {
        acc += up[c] * w_row[c];
        dw_row[c] += x[k] * up[c];
      }
      dx[k] = acc;
    }
  }
  return g;
}

Matrix tanh_forward(const Matrix& x) {
  Matrix y = x;
  for (double& v : y.values()) v = std::tanh(v);
  return y;
}

Matrix tanh_backward(const Matrix& upstream, const Matrix& cached_output) {
  require_same_shape(upstream, cached_output, "tanh_backward");
  Matrix g = upstream;
  auto gv = g.values();
  const auto y = cached_output.values();
  for (std::size_t i = 0; i < gv.size(); ++i) gv[i] *= 1.0 - y[i] * y[i];
  return g;
}

Matrix relu_forward(const Matrix& x) {
  Matrix y = x;
  for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

Matrix relu_backward(const Matrix& upstream, const Matrix& cached_output) {
  require_same_shape(upstream, cached_output, "relu_backward");
  Matrix g = upstream;
  auto gv = g.values();
  const auto y = cached_output.values();
  for (std::size_t i = 0; i < gv.size(); ++i) {
    if (!(y[i] > 0.0)) gv[i] = 0.0;
  }
  return g;
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p = logits;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    auto row = p.row(r);
    if (row.empty()) continue;
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
  return p;
}

SoftmaxCrossEntropy softmax_ce_forward_backward(const Matrix& logits,
                                                std::span<const int> labels) {
  if (labels.size() != logits.rows()) {
    throw ShapeError("softmax_ce: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(logits.rows()) + " rows");
  }
  if (logits.rows() == 0) throw UsageError("softmax_ce: empty batch");
  SoftmaxCrossEntropy out;
  out.probabilities = softmax_rows(logits);
  out.logit_grad = out.probabilities;
  const double inv_batch = 1.0 / static_cast<double>(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= logits.cols()) {
      throw UsageError("softmax_ce: class " + std::to_string(y) + " out of range [0, " +
                       std::to_string(logits.cols()) + ")");
    }
    // log-sum-exp form keeps the loss finite when p[y] underflows
    const auto row = logits.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - mx);
    out.loss += (std::log(sum) + mx - row[static_cast<std::size_t>(y)]) * inv_batch;
    auto g = out.logit_grad.row(r);
    g[static_cast<std::size_t>(y)] -= 1.0;
    for (double& v : g) v *= inv_batch;
  }
  return out;
}

void AdamConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("adam: lr must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("adam: beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam: beta2 must be in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("adam: eps must be > 0");
}

AdamState::AdamState(std::size_t parameter_count, AdamConfig cfg)
    : first_moment(parameter_count, 0.0), second_moment(parameter_count, 0.0), config(cfg) {
  config.validate();
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               std::string_view block) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw ShapeError("adam_step(" + std::string(block) + "): " +
                     std::to_string(params.size()) + " params, " +
                     std::to_string(grads.size()) + " grads, " +
                     std::to_string(state.first_moment.size()) + " moments");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericError("adam_step: non-finite gradient in block '" + std::string(block) +
                         "' at index " + std::to_string(i));
    }
  }
  const auto& cfg = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    if (g == 0.0) continue;
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
    params[i] -= cfg.lr * (m / c1) / (std::sqrt(v / c2) + cfg.eps);
  }
}

std::vector<double> finite_difference_grad(
    const std::function<double(std::span<const double>)>& f, std::span<const double> params,
    double epsilon) {
  if (!(epsilon > 0.0)) throw UsageError("finite_difference_grad: epsilon must be > 0");
  std::vector<double> x(params.begin(), params.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + epsilon;
    const double up = f(x);
    x[i] = saved - epsilon;
    const double down = f(x);
    x[i] = saved;
    grad[i] = (up - down) / (2.0 * epsilon);
  }
  return grad;
}

}  // namespace semhash
