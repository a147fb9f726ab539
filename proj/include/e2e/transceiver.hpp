#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "e2e/matrix.hpp"
#include "e2e/nn.hpp"
#include "e2e/rng.hpp"

namespace e2e {

// One of M = 2^k messages.
struct Message {
  int index = 0;
  int alphabet = 2;

  Message(int index, int alphabet);
};

std::vector<double> to_onehot(const Message& msg);
Matrix onehot_batch(std::span<const int> messages, int alphabet);

// Anything that maps message indices to channel blocks (batch x 2n).
// The learned transmitter and the fixed 16-QAM mapper both implement it, so
// the GAN trainer can model the channel for either.
class Encoder {
 public:
  virtual ~Encoder() = default;
  [[nodiscard]] virtual Matrix encode(std::span<const int> messages) const = 0;
  [[nodiscard]] virtual int alphabet_size() const = 0;
  [[nodiscard]] virtual std::size_t uses() const = 0;
};

// Scales every row so that (1/n) * sum |x_i|^2 = 1 where n = cols / 2.
// `norms` receives the pre-normalization row norms. Throws NumericError when a
// row norm is below 1e-12.
Matrix normalize_power(const Matrix& raw, std::vector<double>& norms);
// Gradient w.r.t. the raw rows given the gradient w.r.t. the normalized rows.
Matrix normalize_power_backward(const Matrix& normalized, std::span<const double> norms,
                                const Matrix& grad_normalized);

struct TransmitterPass {
  Matrix x;  // normalized, batch x 2n
  std::vector<double> norms;
  nn::Tape tape;
};

// one-hot(M) -> dense net -> 2n reals -> per-block power normalization.
class Transmitter final : public Encoder {
 public:
  Transmitter() = default;
  Transmitter(nn::DenseNet net, std::size_t uses);

  static Transmitter create(int k, std::size_t uses, std::span<const std::size_t> hidden,
                            nn::Activation activation, RandomStream& rng);

  [[nodiscard]] Matrix encode(std::span<const int> messages) const override;
  [[nodiscard]] int alphabet_size() const override {
    return static_cast<int>(net_.input_dim());
  }
  [[nodiscard]] std::size_t uses() const override { return uses_; }

  [[nodiscard]] TransmitterPass forward(std::span<const int> messages) const;
  [[nodiscard]] nn::Gradients backward(const TransmitterPass& pass, const Matrix& grad_x) const;

  [[nodiscard]] const nn::DenseNet& net() const noexcept { return net_; }
  [[nodiscard]] nn::DenseNet& net() noexcept { return net_; }

 private:
  nn::DenseNet net_;
  std::size_t uses_ = 0;
};

// [y | y_p] -> dense net -> M logits. Pilots are fed raw; there is no explicit
// channel estimate.
class Receiver {
 public:
  Receiver() = default;
  Receiver(nn::DenseNet net, std::size_t uses, std::size_t pilot_uses);

  static Receiver create(int k, std::size_t uses, std::size_t pilot_uses,
                         std::span<const std::size_t> hidden, nn::Activation activation,
                         RandomStream& rng);

  [[nodiscard]] std::size_t uses() const noexcept { return uses_; }
  [[nodiscard]] std::size_t pilot_uses() const noexcept { return pilot_uses_; }
  [[nodiscard]] int alphabet_size() const noexcept { return static_cast<int>(net_.output_dim()); }

  // `pilot` has zero columns when absent. Throws ConfigError if pilot presence
  // does not match how the receiver was built.
  [[nodiscard]] Matrix input(const Matrix& y, const Matrix& pilot) const;
  [[nodiscard]] Matrix logits(const Matrix& y, const Matrix& pilot) const;
  // Softmax probabilities, one row per block.
  [[nodiscard]] Matrix decode(const Matrix& y, const Matrix& pilot) const;

  [[nodiscard]] const nn::DenseNet& net() const noexcept { return net_; }
  [[nodiscard]] nn::DenseNet& net() noexcept { return net_; }

 private:
  nn::DenseNet net_;
  std::size_t uses_ = 0;
  std::size_t pilot_uses_ = 0;
};

// argmax; ties go to the lowest index.
int hard_decision(std::span<const double> scores);
std::vector<int> hard_decisions(const Matrix& scores);

}  // namespace e2e
