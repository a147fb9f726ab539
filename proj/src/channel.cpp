#include "e2e/channel.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <string>

#include "e2e/error.hpp"

namespace e2e::channel {

IQBlock::IQBlock(std::vector<double> interleaved) : samples(std::move(interleaved)) {
  if (samples.size() % 2 != 0) throw ShapeError("IQBlock needs an even number of reals");
}

double IQBlock::mean_power() const noexcept {
  if (samples.empty()) return 0.0;
  double s = 0.0;
  for (double v : samples) s += v * v;
  return s / static_cast<double>(uses());
}

double noise_std_from_snr(const SnrSpec& spec) {
  if (spec.k < 1 || spec.n < 1) throw ValidationError("SnrSpec: k and n must be >= 1");
  if (!std::isfinite(spec.ebn0_db)) {
    if (spec.ebn0_db > 0) return 0.0;
    throw ValidationError("SnrSpec: Eb/N0 must be finite or +inf");
  }
  const double rate = static_cast<double>(spec.k) / static_cast<double>(spec.n);
  const double n0 = 1.0 / (rate * std::pow(10.0, spec.ebn0_db / 10.0));
  return std::sqrt(n0 / 2.0);
}

void awgn_apply_inplace(std::span<double> samples, double noise_std, RandomStream& rng) {
  if (noise_std < 0.0) throw ValidationError("awgn_apply: negative noise std");
  if (noise_std == 0.0) return;
  for (auto& v : samples) v += noise_std * rng.gaussian();
}

IQBlock awgn_apply(const IQBlock& x, double noise_std, RandomStream& rng) {
  IQBlock y = x;
  awgn_apply_inplace(y.samples, noise_std, rng);
  return y;
}

cplx rayleigh_sample(RandomStream& rng) {
  const double scale = std::sqrt(0.5);
  const double re = scale * rng.gaussian();
  const double im = scale * rng.gaussian();
  return {re, im};
}

namespace {

void fade_row(std::span<const double> x, std::span<double> y, const ChannelRealization& r,
              RandomStream& rng) {
  for (std::size_t i = 0; i + 1 < x.size(); i += 2) {
    const cplx v = r.h * cplx{x[i], x[i + 1]};
    y[i] = v.real();
    y[i + 1] = v.imag();
  }
  awgn_apply_inplace(y, r.noise_std, rng);
}

void pilot_row(std::span<double> y, const ChannelRealization& r, RandomStream& rng) {
  for (std::size_t i = 0; i + 1 < y.size(); i += 2) {
    y[i] = r.h.real();
    y[i + 1] = r.h.imag();
  }
  awgn_apply_inplace(y, r.noise_std, rng);
}

}  // namespace

IQBlock fading_apply(const IQBlock& x, const ChannelRealization& realization, RandomStream& rng) {
  IQBlock y(x.uses());
  fade_row(x.samples, y.samples, realization, rng);
  return y;
}

IQBlock pilot_receive(const ChannelRealization& realization, std::size_t n_pilot, RandomStream& rng) {
  if (n_pilot < 1) throw ValidationError("pilot_receive: n_pilot must be >= 1");
  IQBlock y(n_pilot);
  pilot_row(y.samples, realization, rng);
  return y;
}

RealChannel::RealChannel(ChannelKind kind, double noise_std, std::size_t n_pilot)
    : kind_(kind), noise_std_(noise_std), n_pilot_(n_pilot) {
  if (noise_std < 0.0 || !std::isfinite(noise_std)) {
    throw ValidationError("RealChannel: noise std must be finite and >= 0");
  }
  if (kind == ChannelKind::Rayleigh && n_pilot < 1) {
    throw ValidationError("RealChannel: Rayleigh needs at least one pilot use");
  }
}

ChannelOutput RealChannel::transmit(const Matrix& x, RandomStream& rng) const {
  if (kind_ == ChannelKind::AWGN) {
    ChannelOutput out;
    out.y = x;
    awgn_apply_inplace(out.y.flat(), noise_std_, rng);
    out.pilot = Matrix(x.rows(), 0);
    return out;
  }
  std::vector<ChannelRealization> realizations(x.rows());
  for (auto& r : realizations) {
    r.h = rayleigh_sample(rng);
    r.noise_std = noise_std_;
  }
  return transmit(x, realizations, rng);
}

ChannelOutput RealChannel::transmit(const Matrix& x, std::span<const ChannelRealization> realizations,
                                    RandomStream& rng) const {
  if (kind_ != ChannelKind::Rayleigh) {
    throw ConfigError("RealChannel: explicit realizations only apply to the Rayleigh channel");
  }
  if (realizations.size() != x.rows()) {
    throw ShapeError("RealChannel: " + std::to_string(realizations.size()) + " realizations for " +
                     std::to_string(x.rows()) + " blocks");
  }
  ChannelOutput out;
  out.y = Matrix(x.rows(), x.cols());
  out.pilot = Matrix(x.rows(), 2 * n_pilot_);
  out.realizations.assign(realizations.begin(), realizations.end());
  for (std::size_t b = 0; b < x.rows(); ++b) {
    // Data first, then pilot, per block.
    fade_row(x.row(b), out.y.row(b), realizations[b], rng);
    pilot_row(out.pilot.row(b), realizations[b], rng);
  }
  return out;
}

Matrix RealChannel::input_gradient(const Matrix&) const {
  throw NoGradientError(
      "the real channel is a black box: it has no gradient; route transmitter gradients "
      "through the surrogate generator");
}

void write_channel_trace(const std::filesystem::path& path, const Matrix& x, const ChannelOutput& out) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << "block_id,use_index,x_re,x_im,y_re,y_im,h_re,h_im\n";
  f << std::setprecision(17);
  for (std::size_t b = 0; b < x.rows(); ++b) {
    const cplx h = out.realizations.empty() ? cplx{1.0, 0.0} : out.realizations[b].h;
    for (std::size_t u = 0; u < x.cols() / 2; ++u) {
      f << b << ',' << u << ',' << x(b, 2 * u) << ',' << x(b, 2 * u + 1) << ',' << out.y(b, 2 * u)
        << ',' << out.y(b, 2 * u + 1) << ',' << h.real() << ',' << h.imag() << '\n';
    }
  }
  if (!f) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace e2e::channel
