#include "e2e/gan.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "e2e/error.hpp"

namespace e2e::gan {

Matrix Conditioning::combined() const {
  if (pilot.cols() > 0 && pilot.rows() != x.rows()) {
    throw ShapeError("conditioning: x has " + std::to_string(x.rows()) + " rows, pilot has " +
                     std::to_string(pilot.rows()));
  }
  return hconcat(x, pilot);
}

Matrix sample_noise(std::size_t batch, std::size_t z_dim, RandomStream& rng) {
  Matrix z(batch, z_dim);
  for (auto& v : z.flat()) v = rng.gaussian();
  return z;
}

Generator::Generator(nn::DenseNet net, std::size_t z_dim, std::size_t output_dim)
    : net_(std::move(net)), z_dim_(z_dim), output_dim_(output_dim) {
  if (net_.input_dim() <= z_dim_ || net_.output_dim() != output_dim_) {
    throw ShapeError("generator network shape does not match z_dim/output_dim");
  }
}

Generator Generator::create(std::size_t z_dim, std::size_t cond_dim, std::size_t output_dim,
                            std::span<const std::size_t> hidden, nn::Activation activation,
                            RandomStream& rng) {
  return Generator(nn::DenseNet::glorot(z_dim + cond_dim, hidden, output_dim, activation,
                                        nn::Activation::Linear, rng),
                   z_dim, output_dim);
}

Matrix Generator::input(const Matrix& z, const Conditioning& m) const {
  if (z.cols() != z_dim_ || z.rows() != m.batch()) {
    throw ShapeError("generate: noise is " + std::to_string(z.rows()) + "x" +
                     std::to_string(z.cols()) + ", expected " + std::to_string(m.batch()) + "x" +
                     std::to_string(z_dim_));
  }
  if (m.dim() != cond_dim()) {
    throw ShapeError("generate: conditioning has " + std::to_string(m.dim()) + " columns, expected " +
                     std::to_string(cond_dim()));
  }
  return hconcat(z, m.combined());
}

Matrix Generator::generate(const Matrix& z, const Conditioning& m) const {
  return nn::predict(net_, input(z, m));
}

Discriminator::Discriminator(nn::DenseNet net, std::size_t sample_dim)
    : net_(std::move(net)), sample_dim_(sample_dim) {
  if (net_.output_dim() != 1 || net_.input_dim() <= sample_dim_) {
    throw ShapeError("discriminator must map [y | m] to a single logit");
  }
}

Discriminator Discriminator::create(std::size_t sample_dim, std::size_t cond_dim,
                                    std::span<const std::size_t> hidden, nn::Activation activation,
                                    RandomStream& rng) {
  return Discriminator(nn::DenseNet::glorot(sample_dim + cond_dim, hidden, 1, activation,
                                            nn::Activation::Linear, rng),
                       sample_dim);
}

Matrix Discriminator::input(const Matrix& y, const Conditioning& m) const {
  if (y.cols() != sample_dim_ || y.rows() != m.batch()) {
    throw ShapeError("discriminate: sample batch is " + std::to_string(y.rows()) + "x" +
                     std::to_string(y.cols()) + ", expected " + std::to_string(m.batch()) + "x" +
                     std::to_string(sample_dim_));
  }
  if (sample_dim_ + m.dim() != net_.input_dim()) {
    throw ShapeError("discriminate: conditioning has " + std::to_string(m.dim()) +
                     " columns, expected " + std::to_string(net_.input_dim() - sample_dim_));
  }
  return hconcat(y, m.combined());
}

Matrix Discriminator::discriminate(const Matrix& y, const Conditioning& m) const {
  return nn::predict(net_, input(y, m));
}

namespace {

void add_into(nn::Gradients& acc, const nn::Gradients& g) {
  for (std::size_t i = 0; i < acc.weight.size(); ++i) {
    auto a = acc.weight[i].flat();
    auto b = g.weight[i].flat();
    for (std::size_t j = 0; j < a.size(); ++j) a[j] += b[j];
    for (std::size_t j = 0; j < acc.bias[i].size(); ++j) acc.bias[i][j] += g.bias[i][j];
  }
}

}  // namespace

DiscriminatorLoss d_loss(const Discriminator& d, const Matrix& real_y, const Matrix& fake_y,
                         const Conditioning& m, double real_label) {
  if (real_y.rows() != fake_y.rows() || real_y.cols() != fake_y.cols()) {
    throw ShapeError("d_loss: real and fake batches differ in shape");
  }
  const auto batch = real_y.rows();
  auto real_pass = nn::forward(d.net(), d.input(real_y, m));
  auto fake_pass = nn::forward(d.net(), d.input(fake_y, m));

  const std::vector<double> ones(batch, real_label);
  const std::vector<double> zeros(batch, 0.0);
  const auto real_bce = nn::sigmoid_bce(real_pass.output, ones);
  const auto fake_bce = nn::sigmoid_bce(fake_pass.output, zeros);

  DiscriminatorLoss out;
  out.loss = real_bce.loss + fake_bce.loss;
  if (!std::isfinite(out.loss)) throw NumericError("d_loss: non-finite loss");

  out.grads = nn::backward(d.net(), real_pass.tape, real_bce.grad).grads;
  add_into(out.grads, nn::backward(d.net(), fake_pass.tape, fake_bce.grad).grads);

  std::size_t correct = 0;
  double real_prob = 0.0;
  double fake_prob = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double zr = real_pass.output(b, 0);
    const double zf = fake_pass.output(b, 0);
    correct += (zr > 0.0) + (zf < 0.0);
    real_prob += nn::sigmoid(zr);
    fake_prob += nn::sigmoid(zf);
  }
  out.accuracy = static_cast<double>(correct) / static_cast<double>(2 * batch);
  out.mean_real_prob = real_prob / static_cast<double>(batch);
  out.mean_fake_prob = fake_prob / static_cast<double>(batch);
  return out;
}

GeneratorLoss g_loss(const Generator& g, const Discriminator& d, const Matrix& z,
                     const Conditioning& m) {
  auto g_pass = nn::forward(g.net(), g.input(z, m));
  auto d_pass = nn::forward(d.net(), d.input(g_pass.output, m));
  const std::vector<double> ones(z.rows(), 1.0);
  const auto bce = nn::sigmoid_bce(d_pass.output, ones);

  GeneratorLoss out;
  out.loss = bce.loss;
  if (!std::isfinite(out.loss)) throw NumericError("g_loss: non-finite loss");
  // Only the input gradient of D is used; D's own parameter gradients are dropped.
  const auto d_back = nn::backward(d.net(), d_pass.tape, bce.grad);
  const Matrix grad_fake = column_block(d_back.input_grad, 0, d.sample_dim());
  out.grads = nn::backward(g.net(), g_pass.tape, grad_fake).grads;
  return out;
}

SurrogateChannel::Pass SurrogateChannel::forward(const Matrix& z, const Conditioning& m) const {
  auto pass = nn::forward(g_.net(), g_.input(z, m));
  return {std::move(pass.output), std::move(pass.tape), m.x.cols()};
}

Matrix SurrogateChannel::input_gradient(const Pass& pass, const Matrix& grad_y) const {
  const auto back = nn::backward(g_.net(), pass.tape, grad_y);
  // Generator input is [z | x | y_p]; only the x block carries transmitter gradient.
  return column_block(back.input_grad, g_.z_dim(), pass.x_dim);
}

}  // namespace e2e::gan
