#pragma once

#include <cstddef>
#include <span>

#include "e2e/matrix.hpp"
#include "e2e/nn.hpp"
#include "e2e/rng.hpp"

namespace e2e::gan {

// What the generator and discriminator see besides their main input:
// the encoded block x, plus the received pilot y_p on fading channels.
struct Conditioning {
  Matrix x;      // batch x 2n
  Matrix pilot;  // batch x 2*n_pilot, zero columns on AWGN

  [[nodiscard]] std::size_t batch() const noexcept { return x.rows(); }
  [[nodiscard]] std::size_t dim() const noexcept { return x.cols() + pilot.cols(); }
  // [x | y_p]; throws ShapeError if the batch sizes differ.
  [[nodiscard]] Matrix combined() const;
};

// Standard-normal noise, batch x z_dim.
Matrix sample_noise(std::size_t batch, std::size_t z_dim, RandomStream& rng);

// G(z | m): [z | m] -> fake channel output (batch x 2n), linear output layer.
class Generator {
 public:
  Generator() = default;
  Generator(nn::DenseNet net, std::size_t z_dim, std::size_t output_dim);

  static Generator create(std::size_t z_dim, std::size_t cond_dim, std::size_t output_dim,
                          std::span<const std::size_t> hidden, nn::Activation activation,
                          RandomStream& rng);

  [[nodiscard]] std::size_t z_dim() const noexcept { return z_dim_; }
  [[nodiscard]] std::size_t output_dim() const noexcept { return output_dim_; }
  [[nodiscard]] std::size_t cond_dim() const noexcept { return net_.input_dim() - z_dim_; }

  [[nodiscard]] Matrix input(const Matrix& z, const Conditioning& m) const;
  [[nodiscard]] Matrix generate(const Matrix& z, const Conditioning& m) const;

  [[nodiscard]] const nn::DenseNet& net() const noexcept { return net_; }
  [[nodiscard]] nn::DenseNet& net() noexcept { return net_; }

 private:
  nn::DenseNet net_;
  std::size_t z_dim_ = 0;
  std::size_t output_dim_ = 0;
};

// D(y | m): [y | m] -> one logit per sample.
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(nn::DenseNet net, std::size_t sample_dim);

  static Discriminator create(std::size_t sample_dim, std::size_t cond_dim,
                              std::span<const std::size_t> hidden, nn::Activation activation,
                              RandomStream& rng);

  [[nodiscard]] std::size_t sample_dim() const noexcept { return sample_dim_; }

  [[nodiscard]] Matrix input(const Matrix& y, const Conditioning& m) const;
  // batch x 1
  [[nodiscard]] Matrix discriminate(const Matrix& y, const Conditioning& m) const;

  [[nodiscard]] const nn::DenseNet& net() const noexcept { return net_; }
  [[nodiscard]] nn::DenseNet& net() noexcept { return net_; }

 private:
  nn::DenseNet net_;
  std::size_t sample_dim_ = 0;
};

struct DiscriminatorLoss {
  double loss = 0.0;
  nn::Gradients grads;
  // Fraction of real logits > 0 and fake logits < 0 over both batches.
  double accuracy = 0.0;
  double mean_real_prob = 0.0;
  double mean_fake_prob = 0.0;
};

// BCE(D(real|m), real_label) + BCE(D(fake|m), 0). The fake batch is a
// constant here; only the discriminator receives gradients.
DiscriminatorLoss d_loss(const Discriminator& d, const Matrix& real_y, const Matrix& fake_y,
                         const Conditioning& m, double real_label = 1.0);

struct GeneratorLoss {
  double loss = 0.0;
  nn::Gradients grads;
};

// Non-saturating generator objective: BCE(D(G(z|m)|m), 1). Gradients cross the
// (frozen) discriminator into the generator.
GeneratorLoss g_loss(const Generator& g, const Discriminator& d, const Matrix& z,
                     const Conditioning& m);

// The generator used as a differentiable channel stand-in: forward returns the
// fake output, backward returns d loss / d x (the encoded-signal part of the
// conditioning). Generator parameters are never touched.
class SurrogateChannel {
 public:
  explicit SurrogateChannel(const Generator& g) : g_(g) {}

  struct Pass {
    Matrix y;
    nn::Tape tape;
    std::size_t x_dim = 0;
  };

  [[nodiscard]] Pass forward(const Matrix& z, const Conditioning& m) const;
  [[nodiscard]] Matrix input_gradient(const Pass& pass, const Matrix& grad_y) const;

 private:
  const Generator& g_;
};

}  // namespace e2e::gan
