#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "e2e/matrix.hpp"
#include "e2e/rng.hpp"

namespace e2e::channel {

using cplx = std::complex<double>;

// n complex channel uses stored as 2n interleaved reals (re, im, re, im, ...).
struct IQBlock {
  std::vector<double> samples;

  IQBlock() = default;
  explicit IQBlock(std::size_t uses) : samples(2 * uses, 0.0) {}
  explicit IQBlock(std::vector<double> interleaved);

  [[nodiscard]] std::size_t uses() const noexcept { return samples.size() / 2; }
  [[nodiscard]] cplx at(std::size_t i) const noexcept { return {samples[2 * i], samples[2 * i + 1]}; }
  void set(std::size_t i, cplx v) noexcept {
    samples[2 * i] = v.real();
    samples[2 * i + 1] = v.imag();
  }
  // (1/n) * sum |x_i|^2
  [[nodiscard]] double mean_power() const noexcept;
};

struct ChannelRealization {
  cplx h{1.0, 0.0};
  double noise_std = 0.0;  // per real dimension
};

// Eb/N0 in dB for a code carrying k bits over n complex uses.
struct SnrSpec {
  double ebn0_db = 0.0;
  int k = 4;
  int n = 7;
};

enum class ChannelKind { AWGN, Rayleigh };

// Unit average power per complex use, rate R = k/n:
// N0 = 1 / (R * 10^(ebn0/10)), returned value is sqrt(N0 / 2).
double noise_std_from_snr(const SnrSpec& spec);

IQBlock awgn_apply(const IQBlock& x, double noise_std, RandomStream& rng);
// In place on every entry of a batch.
void awgn_apply_inplace(std::span<double> samples, double noise_std, RandomStream& rng);

// CN(0, 1): real and imaginary parts i.i.d. N(0, 1/2).
cplx rayleigh_sample(RandomStream& rng);

// Block fading: one h for every use of the block.
IQBlock fading_apply(const IQBlock& x, const ChannelRealization& realization, RandomStream& rng);

// y_p[i] = h * 1 + w_i for i < n_pilot.
IQBlock pilot_receive(const ChannelRealization& realization, std::size_t n_pilot, RandomStream& rng);

// Output of the simulated channel for a batch (one block per row).
struct ChannelOutput {
  Matrix y;      // batch x 2n
  Matrix pilot;  // batch x 2*n_pilot; zero columns on AWGN
  std::vector<ChannelRealization> realizations;  // empty on AWGN
};

// The ground-truth channel. It only runs forward: it has no differentiable
// path, and asking for one throws NoGradientError.
class RealChannel {
 public:
  RealChannel(ChannelKind kind, double noise_std, std::size_t n_pilot = 1);

  [[nodiscard]] ChannelKind kind() const noexcept { return kind_; }
  [[nodiscard]] double noise_std() const noexcept { return noise_std_; }
  [[nodiscard]] std::size_t pilot_uses() const noexcept {
    return kind_ == ChannelKind::Rayleigh ? n_pilot_ : 0;
  }

  // Fresh h per block on Rayleigh.
  ChannelOutput transmit(const Matrix& x, RandomStream& rng) const;
  // Caller-chosen realizations (Rayleigh only; one per row).
  ChannelOutput transmit(const Matrix& x, std::span<const ChannelRealization> realizations,
                         RandomStream& rng) const;

  [[noreturn]] Matrix input_gradient(const Matrix& upstream) const;

 private:
  ChannelKind kind_;
  double noise_std_;
  std::size_t n_pilot_;
};

// Debug trace: block_id,use_index,x_re,x_im,y_re,y_im,h_re,h_im
void write_channel_trace(const std::filesystem::path& path, const Matrix& x,
                         const ChannelOutput& out);

}  // namespace e2e::channel
