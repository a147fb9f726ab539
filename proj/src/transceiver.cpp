#include "e2e/transceiver.hpp"

#include <cmath>
#include <string>

#include "e2e/error.hpp"

namespace e2e {

Message::Message(int index_, int alphabet_) : index(index_), alphabet(alphabet_) {
  if (alphabet < 1 || index < 0 || index >= alphabet) {
    throw ValidationError("message index " + std::to_string(index) + " outside [0, " +
                          std::to_string(alphabet) + ")");
  }
}

std::vector<double> to_onehot(const Message& msg) {
  std::vector<double> v(static_cast<std::size_t>(msg.alphabet), 0.0);
  v[static_cast<std::size_t>(msg.index)] = 1.0;
  return v;
}

Matrix onehot_batch(std::span<const int> messages, int alphabet) {
  Matrix m(messages.size(), static_cast<std::size_t>(alphabet));
  for (std::size_t b = 0; b < messages.size(); ++b) {
    const Message msg(messages[b], alphabet);
    m(b, static_cast<std::size_t>(msg.index)) = 1.0;
  }
  return m;
}

namespace {
constexpr double kMinNorm = 1e-12;
}

Matrix normalize_power(const Matrix& raw, std::vector<double>& norms) {
  const double uses = static_cast<double>(raw.cols() / 2);
  const double target = std::sqrt(uses);
  Matrix x(raw.rows(), raw.cols());
  norms.assign(raw.rows(), 0.0);
  for (std::size_t b = 0; b < raw.rows(); ++b) {
    double ss = 0.0;
    for (double v : raw.row(b)) ss += v * v;
    const double norm = std::sqrt(ss);
    if (!(norm >= kMinNorm)) {
      throw NumericError("normalize_power: block " + std::to_string(b) +
                         " has (near) zero energy before normalization");
    }
    norms[b] = norm;
    const double scale = target / norm;
    auto src = raw.row(b);
    auto dst = x.row(b);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * scale;
  }
  return x;
}

Matrix normalize_power_backward(const Matrix& normalized, std::span<const double> norms,
                                const Matrix& grad_normalized) {
  if (grad_normalized.rows() != normalized.rows() || grad_normalized.cols() != normalized.cols() ||
      norms.size() != normalized.rows()) {
    throw ShapeError("normalize_power_backward: shape mismatch");
  }
  // x = s u with s = sqrt(n)/|u|  =>  dL/du = s (g - x (x.g) / n)
  const double uses = static_cast<double>(normalized.cols() / 2);
  const double target = std::sqrt(uses);
  Matrix du(normalized.rows(), normalized.cols());
  for (std::size_t b = 0; b < normalized.rows(); ++b) {
    const auto x = normalized.row(b);
    const auto g = grad_normalized.row(b);
    double dot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * g[i];
    const double scale = target / norms[b];
    auto out = du.row(b);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = scale * (g[i] - x[i] * dot / uses);
  }
  return du;
}

Transmitter::Transmitter(nn::DenseNet net, std::size_t uses) : net_(std::move(net)), uses_(uses) {
  if (net_.output_dim() != 2 * uses_) {
    throw ShapeError("transmitter outputs " + std::to_string(net_.output_dim()) +
                     " reals, expected 2n = " + std::to_string(2 * uses_));
  }
}

Transmitter Transmitter::create(int k, std::size_t uses, std::span<const std::size_t> hidden,
                                nn::Activation activation, RandomStream& rng) {
  const auto alphabet = std::size_t{1} << k;
  return Transmitter(
      nn::DenseNet::glorot(alphabet, hidden, 2 * uses, activation, nn::Activation::Linear, rng),
      uses);
}

TransmitterPass Transmitter::forward(std::span<const int> messages) const {
  auto pass = nn::forward(net_, onehot_batch(messages, alphabet_size()));
  TransmitterPass out;
  out.x = normalize_power(pass.output, out.norms);
  out.tape = std::move(pass.tape);
  return out;
}

Matrix Transmitter::encode(std::span<const int> messages) const {
  std::vector<double> norms;
  return normalize_power(nn::predict(net_, onehot_batch(messages, alphabet_size())), norms);
}

nn::Gradients Transmitter::backward(const TransmitterPass& pass, const Matrix& grad_x) const {
  return nn::backward(net_, pass.tape, normalize_power_backward(pass.x, pass.norms, grad_x)).grads;
}

Receiver::Receiver(nn::DenseNet net, std::size_t uses, std::size_t pilot_uses)
    : net_(std::move(net)), uses_(uses), pilot_uses_(pilot_uses) {
  if (net_.input_dim() != 2 * (uses_ + pilot_uses_)) {
    throw ShapeError("receiver takes " + std::to_string(net_.input_dim()) +
                     " inputs, expected 2(n + n_pilot) = " + std::to_string(2 * (uses_ + pilot_uses_)));
  }
}

Receiver Receiver::create(int k, std::size_t uses, std::size_t pilot_uses,
                          std::span<const std::size_t> hidden, nn::Activation activation,
                          RandomStream& rng) {
  const auto alphabet = std::size_t{1} << k;
  return Receiver(nn::DenseNet::glorot(2 * (uses + pilot_uses), hidden, alphabet, activation,
                                       nn::Activation::Linear, rng),
                  uses, pilot_uses);
}

Matrix Receiver::input(const Matrix& y, const Matrix& pilot) const {
  if (y.cols() != 2 * uses_) {
    throw ShapeError("receiver expects blocks of " + std::to_string(2 * uses_) + " reals, got " +
                     std::to_string(y.cols()));
  }
  const bool has_pilot = pilot.cols() > 0;
  if (has_pilot != (pilot_uses_ > 0)) {
    throw ConfigError(pilot_uses_ > 0 ? "receiver is configured for a fading channel and needs pilots"
                                      : "receiver is configured for AWGN but pilots were supplied");
  }
  if (has_pilot && pilot.cols() != 2 * pilot_uses_) {
    throw ShapeError("pilot block has " + std::to_string(pilot.cols()) + " reals, expected " +
                     std::to_string(2 * pilot_uses_));
  }
  return hconcat(y, pilot);
}

Matrix Receiver::logits(const Matrix& y, const Matrix& pilot) const {
  return nn::predict(net_, input(y, pilot));
}

Matrix Receiver::decode(const Matrix& y, const Matrix& pilot) const {
  return nn::softmax(logits(y, pilot));
}

int hard_decision(std::span<const double> scores) {
  if (scores.empty()) throw ValidationError("hard_decision: empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return static_cast<int>(best);
}

std::vector<int> hard_decisions(const Matrix& scores) {
  std::vector<int> out(scores.rows());
  for (std::size_t b = 0; b < scores.rows(); ++b) out[b] = hard_decision(scores.row(b));
  return out;
}

}  // namespace e2e
