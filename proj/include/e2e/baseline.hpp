#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>

#include "e2e/channel.hpp"
#include "e2e/transceiver.hpp"

namespace e2e::baseline {

using cplx = std::complex<double>;
using Bits4 = std::array<std::uint8_t, 4>;
using Codeword = std::array<std::uint8_t, 7>;

// Message index <-> 4 bits, most significant bit first.
Bits4 bits_from_index(int index);
int index_from_bits(const Bits4& bits);

// Systematic Hamming(7,4): c = [u0 u1 u2 u3 p0 p1 p2] with parity rows
//   u0 -> 110, u1 -> 011, u2 -> 111, u3 -> 101.
Codeword hamming74_encode(const Bits4& bits);
// Row i is the codeword of message index i.
const std::array<Codeword, 16>& hamming74_codebook();

// Soft ML decoding for BPSK b -> 1 - 2b: the codeword maximizing
// sum y_i (1 - 2 c_i). Ties go to the lowest codeword index.
Bits4 hamming74_mld_decode(std::span<const double, 7> y);
// Hard-decision syndrome decoding (corrects one bit error).
Bits4 hamming74_syndrome_decode(std::span<const double, 7> y);

// 16-QAM on the {+-1, +-3}^2 grid scaled by 1/sqrt(10). Bits (b0 b1) choose the
// in-phase level and (b2 b3) the quadrature level, each Gray-coded:
//
//   bits  00   01   11   10
//   level -3   -1   +1   +3
cplx qam16_modulate(const Bits4& bits);
const std::array<cplx, 16>& qam16_constellation();  // indexed by message index
// Minimum-distance decision on y / h_est. Throws DegenerateChannelError if h_est == 0.
Bits4 qam16_demod_coherent(cplx y, cplx h_est);

// Least-squares estimate with a unit pilot: the mean of the pilot observations.
cplx ls_estimate(const channel::IQBlock& pilot);

// Fixed 16-QAM mapper as an Encoder (one complex use per message).
class Qam16Encoder final : public Encoder {
 public:
  [[nodiscard]] Matrix encode(std::span<const int> messages) const override;
  [[nodiscard]] int alphabet_size() const override { return 16; }
  [[nodiscard]] std::size_t uses() const override { return 1; }
};

}  // namespace e2e::baseline
