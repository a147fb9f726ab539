#include "e2e/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "e2e/error.hpp"
#include "e2e/kernels.hpp"

namespace e2e::nn {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void apply_activation(Activation a, const Matrix& pre, Matrix& post) {
  const auto in = pre.flat();
  auto out = post.flat();
  switch (a) {
    case Activation::ReLU:
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
      break;
    case Activation::Tanh:
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::tanh(in[i]);
      break;
    case Activation::Linear:
      std::copy(in.begin(), in.end(), out.begin());
      break;
  }
}

// grad (w.r.t. post-activation) -> grad w.r.t. pre-activation, in place.
void activation_backward(Activation a, const Matrix& pre, Matrix& grad) {
  const auto z = pre.flat();
  auto g = grad.flat();
  switch (a) {
    case Activation::ReLU:
      for (std::size_t i = 0; i < z.size(); ++i)
        if (!(z[i] > 0.0)) g[i] = 0.0;
      break;
    case Activation::Tanh:
      for (std::size_t i = 0; i < z.size(); ++i) {
        const double t = std::tanh(z[i]);
        g[i] *= 1.0 - t * t;
      }
      break;
    case Activation::Linear:
      break;
  }
}

void fnv_bytes(std::uint64_t& h, const void* p, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(p);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::ReLU:
      return "relu";
    case Activation::Tanh:
      return "tanh";
    case Activation::Linear:
      return "linear";
  }
  return "linear";
}

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "tanh") return Activation::Tanh;
  if (name == "linear") return Activation::Linear;
  throw ValidationError("unknown activation '" + std::string(name) + "'");
}

DenseNet::DenseNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ShapeError("DenseNet needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.bias.size() != l.fan_out()) {
      throw ShapeError("layer " + std::to_string(i) + ": bias length " +
                       std::to_string(l.bias.size()) + " != fan_out " +
                       std::to_string(l.fan_out()));
    }
    if (i + 1 < layers_.size() && l.fan_out() != layers_[i + 1].fan_in()) {
      throw ShapeError("layer " + std::to_string(i) + " outputs " + std::to_string(l.fan_out()) +
                       " but layer " + std::to_string(i + 1) + " expects " +
                       std::to_string(layers_[i + 1].fan_in()));
    }
  }
}

DenseNet DenseNet::glorot(std::size_t input_dim, std::span<const std::size_t> hidden_sizes,
                          std::size_t output_dim, Activation hidden, Activation output,
                          RandomStream& rng) {
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), hidden_sizes.begin(), hidden_sizes.end());
  dims.push_back(output_dim);

  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const std::size_t fan_in = dims[i];
    const std::size_t fan_out = dims[i + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    DenseLayer layer;
    layer.weight = Matrix(fan_in, fan_out);
    for (auto& w : layer.weight.flat()) w = (2.0 * rng.uniform() - 1.0) * limit;
    layer.bias.assign(fan_out, 0.0);
    layer.activation = (i + 2 == dims.size()) ? output : hidden;
    layers.push_back(std::move(layer));
  }
  return DenseNet(std::move(layers));
}

std::size_t DenseNet::input_dim() const noexcept {
  return layers_.empty() ? 0 : layers_.front().fan_in();
}

std::size_t DenseNet::output_dim() const noexcept {
  return layers_.empty() ? 0 : layers_.back().fan_out();
}

std::size_t DenseNet::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

std::uint64_t DenseNet::checksum() const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& l : layers_) {
    fnv_bytes(h, l.weight.data(), l.weight.size() * sizeof(double));
    fnv_bytes(h, l.bias.data(), l.bias.size() * sizeof(double));
  }
  return h;
}

Gradients Gradients::zeros_like(const DenseNet& net) {
  Gradients g;
  for (const auto& l : net.layers()) {
    g.weight.emplace_back(l.weight.rows(), l.weight.cols());
    g.bias.emplace_back(l.bias.size(), 0.0);
  }
  return g;
}

double Gradients::norm() const noexcept {
  double s = 0.0;
  for (const auto& w : weight)
    for (double v : w.flat()) s += v * v;
  for (const auto& b : bias)
    for (double v : b) s += v * v;
  return std::sqrt(s);
}

ForwardPass forward(const DenseNet& net, const Matrix& input) {
  if (input.rows() == 0) throw ShapeError("forward: empty batch");
  ForwardPass pass;
  pass.tape.inputs.reserve(net.layers().size());
  pass.tape.pre_activations.reserve(net.layers().size());

  Matrix current = input;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const auto& layer = net.layers()[i];
    if (current.cols() != layer.fan_in()) {
      throw ShapeError("forward: layer " + std::to_string(i) + " expects " +
                       std::to_string(layer.fan_in()) + " inputs, got " + shape_str(current));
    }
    Matrix pre(current.rows(), layer.fan_out());
    kernels::omp::affine(current, layer.weight, layer.bias, pre);
    Matrix post(pre.rows(), pre.cols());
    apply_activation(layer.activation, pre, post);
    pass.tape.inputs.push_back(std::move(current));
    pass.tape.pre_activations.push_back(std::move(pre));
    current = std::move(post);
  }
  pass.output = std::move(current);
  return pass;
}

Matrix predict(const DenseNet& net, const Matrix& input) {
  if (input.rows() == 0) throw ShapeError("forward: empty batch");
  Matrix current = input;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const auto& layer = net.layers()[i];
    if (current.cols() != layer.fan_in()) {
      throw ShapeError("forward: layer " + std::to_string(i) + " expects " +
                       std::to_string(layer.fan_in()) + " inputs, got " + shape_str(current));
    }
    Matrix pre(current.rows(), layer.fan_out());
    kernels::omp::affine(current, layer.weight, layer.bias, pre);
    apply_activation(layer.activation, pre, pre);
    current = std::move(pre);
  }
  return current;
}

BackwardPass backward(const DenseNet& net, const Tape& tape, const Matrix& upstream) {
  const auto& layers = net.layers();
  if (tape.inputs.size() != layers.size() || tape.pre_activations.size() != layers.size()) {
    throw ShapeError("backward: tape has " + std::to_string(tape.inputs.size()) +
                     " layers, network has " + std::to_string(layers.size()));
  }
  const Matrix& last_pre = tape.pre_activations.back();
  if (upstream.rows() != last_pre.rows() || upstream.cols() != last_pre.cols()) {
    throw ShapeError("backward: upstream gradient " + shape_str(upstream) +
                     " does not match output " + shape_str(last_pre));
  }

  BackwardPass out;
  out.grads = Gradients::zeros_like(net);
  Matrix grad = upstream;
  for (std::size_t idx = layers.size(); idx-- > 0;) {
    const auto& layer = layers[idx];
    const Matrix& pre = tape.pre_activations[idx];
    const Matrix& in = tape.inputs[idx];
    if (pre.cols() != layer.fan_out() || in.cols() != layer.fan_in() || pre.rows() != grad.rows()) {
      throw ShapeError("backward: tape entry for layer " + std::to_string(idx) +
                       " does not match the network");
    }
    activation_backward(layer.activation, pre, grad);
    kernels::omp::matmul_lhs_transposed(in, grad, out.grads.weight[idx]);
    kernels::omp::column_sums(grad, out.grads.bias[idx]);
    Matrix next(grad.rows(), layer.fan_in());
    kernels::omp::matmul_rhs_transposed(grad, layer.weight, next);
    grad = std::move(next);
  }
  out.input_grad = std::move(grad);
  return out;
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t b = 0; b < logits.rows(); ++b) {
    const auto z = logits.row(b);
    auto out = p.row(b);
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      out[j] = std::exp(z[j] - mx);
      sum += out[j];
    }
    for (auto& v : out) v /= sum;
  }
  return p;
}

LossResult softmax_cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows()) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(logits.rows()) + " rows");
  }
  if (logits.rows() == 0) throw ShapeError("softmax_cross_entropy: empty batch");
  const auto batch = static_cast<double>(logits.rows());
  LossResult r;
  r.grad = Matrix(logits.rows(), logits.cols());
  double total = 0.0;
  for (std::size_t b = 0; b < logits.rows(); ++b) {
    const auto z = logits.row(b);
    const int label = labels[b];
    if (label < 0 || static_cast<std::size_t>(label) >= z.size()) {
      throw ValidationError("softmax_cross_entropy: label " + std::to_string(label) +
                            " out of range");
    }
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    const double log_norm = mx + std::log(sum);
    total += log_norm - z[static_cast<std::size_t>(label)];
    auto g = r.grad.row(b);
    for (std::size_t j = 0; j < z.size(); ++j) g[j] = std::exp(z[j] - log_norm) / batch;
    g[static_cast<std::size_t>(label)] -= 1.0 / batch;
  }
  r.loss = total / batch;
  if (!std::isfinite(r.loss)) throw NumericError("softmax_cross_entropy: non-finite loss");
  return r;
}

LossResult softmax_cross_entropy(const Matrix& logits, const Matrix& onehot) {
  if (onehot.rows() != logits.rows() || onehot.cols() != logits.cols()) {
    throw ShapeError("softmax_cross_entropy: one-hot " + shape_str(onehot) + " vs logits " +
                     shape_str(logits));
  }
  std::vector<int> labels(onehot.rows());
  for (std::size_t b = 0; b < onehot.rows(); ++b) {
    int hot = -1;
    for (std::size_t j = 0; j < onehot.cols(); ++j) {
      const double v = onehot(b, j);
      if (v == 1.0 && hot < 0) {
        hot = static_cast<int>(j);
      } else if (v != 0.0) {
        throw ValidationError("softmax_cross_entropy: row " + std::to_string(b) +
                              " is not one-hot");
      }
    }
    if (hot < 0) {
      throw ValidationError("softmax_cross_entropy: row " + std::to_string(b) + " is not one-hot");
    }
    labels[b] = hot;
  }
  return softmax_cross_entropy(logits, labels);
}

LossResult sigmoid_bce(const Matrix& logits, std::span<const double> targets) {
  if (logits.cols() != 1 || logits.rows() != targets.size()) {
    throw ShapeError("sigmoid_bce: logits " + shape_str(logits) + " vs " +
                     std::to_string(targets.size()) + " targets");
  }
  if (logits.rows() == 0) throw ShapeError("sigmoid_bce: empty batch");
  const auto batch = static_cast<double>(logits.rows());
  LossResult r;
  r.grad = Matrix(logits.rows(), 1);
  double total = 0.0;
  for (std::size_t b = 0; b < logits.rows(); ++b) {
    const double z = logits(b, 0);
    const double t = targets[b];
    if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("sigmoid_bce: target outside [0, 1]");
    // -[t log s(z) + (1-t) log s(-z)] = max(z,0) - t z + log(1 + e^{-|z|})
    total += std::max(z, 0.0) - t * z + std::log1p(std::exp(-std::abs(z)));
    r.grad(b, 0) = (sigmoid(z) - t) / batch;
  }
  r.loss = total / batch;
  return r;
}

AdamState::AdamState(const DenseNet& net, AdamConfig config)
    : config_(config), m_(Gradients::zeros_like(net)), v_(Gradients::zeros_like(net)) {}

void AdamState::reset() {
  for (auto& w : m_.weight) w.fill(0.0);
  for (auto& w : v_.weight) w.fill(0.0);
  for (auto& b : m_.bias) std::fill(b.begin(), b.end(), 0.0);
  for (auto& b : v_.bias) std::fill(b.begin(), b.end(), 0.0);
  step_count_ = 0;
}

void AdamState::set_learning_rate(double lr) {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ValidationError("adam: learning rate must be positive and finite");
  config_.learning_rate = lr;
}

void adam_step(DenseNet& net, const Gradients& grads, AdamState& state) {
  auto& layers = net.layers();
  if (grads.weight.size() != layers.size() || state.m_.weight.size() != layers.size()) {
    throw ShapeError("adam_step: gradient/optimizer layer count does not match the network");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (grads.weight[i].rows() != layers[i].weight.rows() ||
        grads.weight[i].cols() != layers[i].weight.cols() ||
        grads.bias[i].size() != layers[i].bias.size() ||
        state.m_.weight[i].size() != layers[i].weight.size()) {
      throw ShapeError("adam_step: shape mismatch at layer " + std::to_string(i));
    }
    const bool finite =
        grads.weight[i].all_finite() &&
        std::all_of(grads.bias[i].begin(), grads.bias[i].end(), [](double v) { return std::isfinite(v); });
    if (!finite) throw NumericError("adam_step: non-finite gradient in layer " + std::to_string(i));
  }

  const auto& c = state.config_;
  state.step_count_ += 1;
  const double t = static_cast<double>(state.step_count_);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  auto update = [&](std::span<double> param, std::span<const double> g, std::span<double> m,
                    std::span<double> v) {
    for (std::size_t j = 0; j < param.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      param[j] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  };
  for (std::size_t i = 0; i < layers.size(); ++i) {
    update(layers[i].weight.flat(), grads.weight[i].flat(), state.m_.weight[i].flat(),
           state.v_.weight[i].flat());
    update(layers[i].bias, grads.bias[i], state.m_.bias[i], state.v_.bias[i]);
  }
}

}  // namespace e2e::nn
