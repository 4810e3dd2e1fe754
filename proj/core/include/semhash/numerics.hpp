#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace semhash {

/// Row-major dense matrix of doubles. Carrier for weights and batched
/// activations; a batch of B vectors of width W is a B x W matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix identity(std::size_t n);
  static Matrix from_row(std::span<const double> row);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {values_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// output = input * weights + bias (bias broadcast over rows)
Matrix affine_forward(const Matrix& input, const Matrix& weights, std::span<const double> bias);

struct AffineGrads {
  Matrix input;
  Matrix weights;
  std::vector<double> bias;
};

AffineGrads affine_backward(const Matrix& upstream, const Matrix& cached_input,
                            const Matrix& weights);

Matrix tanh_forward(const Matrix& x);
Matrix tanh_backward(const Matrix& upstream, const Matrix& cached_output);
Matrix relu_forward(const Matrix& x);
Matrix relu_backward(const Matrix& upstream, const Matrix& cached_output);

double sigmoid(double x) noexcept;

/// Row-wise softmax, computed with the max-subtraction trick.
Matrix softmax_rows(const Matrix& logits);

struct SoftmaxCrossEntropy {
  double loss = 0.0;  // mean over rows
  Matrix probabilities;
  Matrix logit_grad;  // d(mean loss)/d(logits)
};

SoftmaxCrossEntropy softmax_ce_forward_backward(const Matrix& logits,
                                                std::span<const int> labels);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

struct AdamState {
  AdamState() = default;
  AdamState(std::size_t parameter_count, AdamConfig config);

  std::uint64_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  AdamConfig config;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update. Coordinates whose gradient is exactly
/// zero keep both their value and their moments, so a zero gradient is a
/// no-op on the parameters regardless of accumulated momentum. `block` names
/// the parameter block in error messages.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               std::string_view block);

/// Central-difference gradient estimate of `f` at `params`.
std::vector<double> finite_difference_grad(
    const std::function<double(std::span<const double>)>& f, std::span<const double> params,
    double epsilon);

}  // namespace semhash
