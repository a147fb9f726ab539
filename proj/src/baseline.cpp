#include "e2e/baseline.hpp"

#include <cmath>
#include <string>

#include "e2e/error.hpp"

namespace e2e::baseline {

namespace {

constexpr std::array<std::array<std::uint8_t, 3>, 4> kParity{{{1, 1, 0}, {0, 1, 1}, {1, 1, 1}, {1, 0, 1}}};

// Gray-coded 4-PAM, indexed by the two bits read as a number.
constexpr std::array<double, 4> kPamLevel{-3.0, -1.0, 3.0, 1.0};  // 00, 01, 10, 11

const double kQamScale = 1.0 / std::sqrt(10.0);

// level index 0..3 for -3, -1, +1, +3 -> the bit pair
constexpr std::array<std::array<std::uint8_t, 2>, 4> kLevelBits{{{0, 0}, {0, 1}, {1, 1}, {1, 0}}};

int slice_pam(double v) {
  // decision boundaries at -2, 0, +2 (in unscaled units)
  if (v < -2.0) return 0;
  if (v < 0.0) return 1;
  if (v < 2.0) return 2;
  return 3;
}

}  // namespace

Bits4 bits_from_index(int index) {
  if (index < 0 || index > 15) throw ValidationError("bits_from_index: index out of range");
  return {static_cast<std::uint8_t>((index >> 3) & 1), static_cast<std::uint8_t>((index >> 2) & 1),
          static_cast<std::uint8_t>((index >> 1) & 1), static_cast<std::uint8_t>(index & 1)};
}

int index_from_bits(const Bits4& bits) {
  return (bits[0] << 3) | (bits[1] << 2) | (bits[2] << 1) | bits[3];
}

Codeword hamming74_encode(const Bits4& bits) {
  Codeword c{bits[0], bits[1], bits[2], bits[3], 0, 0, 0};
  for (std::size_t i = 0; i < 4; ++i) {
    if (bits[i] > 1) throw ValidationError("hamming74_encode: bits must be 0 or 1");
    for (std::size_t p = 0; p < 3; ++p) c[4 + p] ^= static_cast<std::uint8_t>(bits[i] & kParity[i][p]);
  }
  return c;
}

const std::array<Codeword, 16>& hamming74_codebook() {
  static const auto book = [] {
    std::array<Codeword, 16> b{};
    for (int i = 0; i < 16; ++i) b[static_cast<std::size_t>(i)] = hamming74_encode(bits_from_index(i));
    return b;
  }();
  return book;
}

Bits4 hamming74_mld_decode(std::span<const double, 7> y) {
  const auto& book = hamming74_codebook();
  std::size_t best = 0;
  double best_corr = -INFINITY;
  for (std::size_t w = 0; w < book.size(); ++w) {
    double corr = 0.0;
    for (std::size_t i = 0; i < 7; ++i) corr += book[w][i] ? -y[i] : y[i];
    if (corr > best_corr) {
      best_corr = corr;
      best = w;
    }
  }
  return bits_from_index(static_cast<int>(best));
}

Bits4 hamming74_syndrome_decode(std::span<const double, 7> y) {
  Codeword r{};
  for (std::size_t i = 0; i < 7; ++i) r[i] = y[i] < 0.0 ? 1 : 0;
  std::array<std::uint8_t, 3> s{};
  for (std::size_t p = 0; p < 3; ++p) {
    std::uint8_t v = r[4 + p];
    for (std::size_t i = 0; i < 4; ++i) v ^= static_cast<std::uint8_t>(r[i] & kParity[i][p]);
    s[p] = v;
  }
  if (s[0] | s[1] | s[2]) {
    // Column j of H = [P^T | I3] equal to the syndrome marks the flipped bit.
    for (std::size_t j = 0; j < 7; ++j) {
      const std::array<std::uint8_t, 3> col =
          j < 4 ? kParity[j]
                : std::array<std::uint8_t, 3>{static_cast<std::uint8_t>(j == 4), static_cast<std::uint8_t>(j == 5),
                                              static_cast<std::uint8_t>(j == 6)};
      if (col == s) {
        r[j] ^= 1;
        break;
      }
    }
  }
  return {r[0], r[1], r[2], r[3]};
}

cplx qam16_modulate(const Bits4& bits) {
  const double i_level = kPamLevel[static_cast<std::size_t>((bits[0] << 1) | bits[1])];
  const double q_level = kPamLevel[static_cast<std::size_t>((bits[2] << 1) | bits[3])];
  return {i_level * kQamScale, q_level * kQamScale};
}

const std::array<cplx, 16>& qam16_constellation() {
  static const auto points = [] {
    std::array<cplx, 16> p{};
    for (int i = 0; i < 16; ++i) p[static_cast<std::size_t>(i)] = qam16_modulate(bits_from_index(i));
    return p;
  }();
  return points;
}

Bits4 qam16_demod_coherent(cplx y, cplx h_est) {
  if (h_est == cplx{0.0, 0.0}) throw DegenerateChannelError("qam16_demod_coherent: channel estimate is zero");
  const cplx z = y / h_est / kQamScale;
  const auto& i_bits = kLevelBits[static_cast<std::size_t>(slice_pam(z.real()))];
  const auto& q_bits = kLevelBits[static_cast<std::size_t>(slice_pam(z.imag()))];
  return {i_bits[0], i_bits[1], q_bits[0], q_bits[1]};
}

cplx ls_estimate(const channel::IQBlock& pilot) {
  if (pilot.uses() < 1) throw ValidationError("ls_estimate: empty pilot block");
  cplx sum{0.0, 0.0};
  for (std::size_t i = 0; i < pilot.uses(); ++i) sum += pilot.at(i);
  return sum / static_cast<double>(pilot.uses());
}

Matrix Qam16Encoder::encode(std::span<const int> messages) const {
  const auto& points = qam16_constellation();
  Matrix x(messages.size(), 2);
  for (std::size_t b = 0; b < messages.size(); ++b) {
    const Message msg(messages[b], 16);
    const cplx p = points[static_cast<std::size_t>(msg.index)];
    x(b, 0) = p.real();
    x(b, 1) = p.imag();
  }
  return x;
}

}  // namespace e2e::baseline
