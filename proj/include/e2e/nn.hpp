#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "e2e/matrix.hpp"
#include "e2e/rng.hpp"

namespace e2e::nn {

enum class Activation { ReLU, Tanh, Linear };

std::string_view to_string(Activation a) noexcept;
Activation activation_from_string(std::string_view name);

struct DenseLayer {
  Matrix weight;  // fan_in x fan_out
  std::vector<double> bias;
  Activation activation = Activation::Linear;

  [[nodiscard]] std::size_t fan_in() const noexcept { return weight.rows(); }
  [[nodiscard]] std::size_t fan_out() const noexcept { return weight.cols(); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Fixed-topology multilayer perceptron.
class DenseNet {
 public:
  DenseNet() = default;
  // Throws ShapeError if adjacent layers do not chain or a bias has the wrong length.
  explicit DenseNet(std::vector<DenseLayer> layers);

  // Glorot-uniform weights, zero biases. `hidden` activation on every hidden
  // layer, `output` on the last one.
  static DenseNet glorot(std::size_t input_dim, std::span<const std::size_t> hidden_sizes,
                         std::size_t output_dim, Activation hidden, Activation output,
                         RandomStream& rng);

  [[nodiscard]] std::size_t input_dim() const noexcept;
  [[nodiscard]] std::size_t output_dim() const noexcept;
  [[nodiscard]] std::size_t parameter_count() const noexcept;
  [[nodiscard]] const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  [[nodiscard]] std::vector<DenseLayer>& layers() noexcept { return layers_; }

  // FNV-1a over the raw bytes of every parameter. Used to assert that a
  // training phase left a frozen network untouched.
  [[nodiscard]] std::uint64_t checksum() const noexcept;

  friend bool operator==(const DenseNet&, const DenseNet&) = default;

 private:
  std::vector<DenseLayer> layers_;
};

// Activations cached by forward() for the matching backward() call.
struct Tape {
  std::vector<Matrix> inputs;           // input to layer i
  std::vector<Matrix> pre_activations;  // x_i * W_i + b_i
};

struct ForwardPass {
  Matrix output;
  Tape tape;
};

struct Gradients {
  std::vector<Matrix> weight;
  std::vector<std::vector<double>> bias;

  static Gradients zeros_like(const DenseNet& net);
  [[nodiscard]] double norm() const noexcept;
};

struct BackwardPass {
  Gradients grads;
  Matrix input_grad;
};

ForwardPass forward(const DenseNet& net, const Matrix& input);
// Forward without keeping the tape.
Matrix predict(const DenseNet& net, const Matrix& input);
// Gradients of a scalar loss whose gradient w.r.t. the network output is `upstream`.
BackwardPass backward(const DenseNet& net, const Tape& tape, const Matrix& upstream);

struct LossResult {
  double loss = 0.0;
  Matrix grad;  // d loss / d logits, same shape as the logits
};

// Row-wise softmax, computed with the max subtracted.
Matrix softmax(const Matrix& logits);

// Mean cross-entropy of softmax(logits) against one-hot rows. Throws
// ValidationError if a row of `onehot` is not one-hot.
LossResult softmax_cross_entropy(const Matrix& logits, const Matrix& onehot);
// Same loss with integer class labels.
LossResult softmax_cross_entropy(const Matrix& logits, std::span<const int> labels);

// Mean binary cross-entropy on logits (B x 1), targets in [0, 1].
LossResult sigmoid_bce(const Matrix& logits, std::span<const double> targets);

double sigmoid(double z) noexcept;

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamState {
 public:
  AdamState() = default;
  AdamState(const DenseNet& net, AdamConfig config);

  [[nodiscard]] const AdamConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::uint64_t step_count() const noexcept { return step_count_; }
  [[nodiscard]] const Gradients& first_moment() const noexcept { return m_; }
  [[nodiscard]] const Gradients& second_moment() const noexcept { return v_; }

  // Zeroes the moments and the step counter.
  void reset();
  // Keeps the moments; only later steps use the new rate.
  void set_learning_rate(double lr);

 private:
  friend void adam_step(DenseNet& net, const Gradients& grads, AdamState& state);

  AdamConfig config_;
  Gradients m_;
  Gradients v_;
  std::uint64_t step_count_ = 0;
};

// Bias-corrected Adam update. Throws NumericError naming the layer when a
// gradient entry is not finite; in that case nothing is modified.
void adam_step(DenseNet& net, const Gradients& grads, AdamState& state);

}  // namespace e2e::nn
