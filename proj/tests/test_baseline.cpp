#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "e2e/baseline.hpp"
#include "e2e/error.hpp"
#include "e2e/eval.hpp"

using namespace e2e;
using namespace e2e::baseline;

namespace {

std::array<double, 7> bpsk(const Codeword& c) {
  std::array<double, 7> y{};
  for (std::size_t i = 0; i < 7; ++i) y[i] = 1.0 - 2.0 * c[i];
  return y;
}

int hamming_distance(const Codeword& a, const Codeword& b) {
  int d = 0;
  for (std::size_t i = 0; i < 7; ++i) d += a[i] != b[i];
  return d;
}

// Monte-Carlo equality against a frozen oracle value with its own trial count:
// |a - b| below 4.5 combined standard errors.
void check_bler_matches(double measured, std::uint64_t n_measured, double oracle, std::uint64_t n_oracle) {
  const double se = std::sqrt(oracle * (1 - oracle) * (1.0 / n_measured + 1.0 / n_oracle));
  CAPTURE(measured);
  CAPTURE(oracle);
  CHECK(std::abs(measured - oracle) < 4.5 * se);
}

}  // namespace

TEST_CASE("bit order is most significant first") {
  CHECK(bits_from_index(8) == Bits4{1, 0, 0, 0});
  CHECK(bits_from_index(3) == Bits4{0, 0, 1, 1});
  for (int i = 0; i < 16; ++i) CHECK(index_from_bits(bits_from_index(i)) == i);
}

TEST_CASE("hamming(7,4) encoding") {
  CHECK(hamming74_encode({0, 0, 0, 0}) == Codeword{0, 0, 0, 0, 0, 0, 0});
  CHECK(hamming74_encode({1, 0, 0, 0}) == Codeword{1, 0, 0, 0, 1, 1, 0});
  CHECK(hamming74_encode({0, 0, 0, 1}) == Codeword{0, 0, 0, 1, 1, 0, 1});
  SUBCASE("linearity") {
    const auto a = hamming74_encode({1, 0, 0, 0});
    const auto b = hamming74_encode({0, 1, 0, 0});
    Codeword x{};
    for (std::size_t i = 0; i < 7; ++i) x[i] = a[i] ^ b[i];
    CHECK(x == hamming74_encode({1, 1, 0, 0}));
  }
  SUBCASE("minimum distance 3 and closure under XOR") {
    const auto& book = hamming74_codebook();
    int dmin = 7;
    for (std::size_t i = 0; i < 16; ++i) {
      for (std::size_t j = 0; j < 16; ++j) {
        if (i != j) dmin = std::min(dmin, hamming_distance(book[i], book[j]));
        Codeword x{};
        for (std::size_t t = 0; t < 7; ++t) x[t] = book[i][t] ^ book[j][t];
        CHECK(std::find(book.begin(), book.end(), x) != book.end());
      }
    }
    CHECK(dmin == 3);
  }
}

TEST_CASE("hamming(7,4) decoding") {
  const auto& book = hamming74_codebook();
  SUBCASE("noiseless recovery") {
    for (int m = 0; m < 16; ++m) {
      const auto y = bpsk(book[static_cast<std::size_t>(m)]);
      CHECK(index_from_bits(hamming74_mld_decode(y)) == m);
      CHECK(index_from_bits(hamming74_syndrome_decode(y)) == m);
    }
  }
  SUBCASE("every single sign flip is corrected") {
    for (int m = 0; m < 16; ++m) {
      for (std::size_t i = 0; i < 7; ++i) {
        auto y = bpsk(book[static_cast<std::size_t>(m)]);
        y[i] = -y[i];
        CHECK(index_from_bits(hamming74_mld_decode(y)) == m);
        CHECK(index_from_bits(hamming74_syndrome_decode(y)) == m);
      }
    }
  }
  SUBCASE("ties go to the lowest codeword index") {
    const std::array<double, 7> zeros{};
    CHECK(index_from_bits(hamming74_mld_decode(zeros)) == 0);
  }
  SUBCASE("mld equals exhaustive minimum euclidean distance") {
    RandomStream rng(17);
    for (int t = 0; t < 10000; ++t) {
      const auto m = static_cast<std::size_t>(rng.uniform_int(16));
      auto y = bpsk(book[m]);
      for (auto& v : y) v += 0.9 * rng.gaussian();
      std::size_t best = 0;
      double best_d = INFINITY;
      for (std::size_t c = 0; c < 16; ++c) {
        const auto s = bpsk(book[c]);
        double d = 0.0;
        for (std::size_t i = 0; i < 7; ++i) d += (y[i] - s[i]) * (y[i] - s[i]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      CHECK(index_from_bits(hamming74_mld_decode(y)) == static_cast<int>(best));
    }
  }
  SUBCASE("mld is never worse than syndrome decoding on the same noise") {
    for (double sigma : {0.5, 0.8, 1.1}) {
      RandomStream rng(18);
      int mld_errors = 0, syndrome_errors = 0;
      for (int t = 0; t < 20000; ++t) {
        const int m = rng.uniform_int(16);
        auto y = bpsk(book[static_cast<std::size_t>(m)]);
        for (auto& v : y) v += sigma * rng.gaussian();
        mld_errors += index_from_bits(hamming74_mld_decode(y)) != m;
        syndrome_errors += index_from_bits(hamming74_syndrome_decode(y)) != m;
      }
      CAPTURE(sigma);
      CHECK(mld_errors <= syndrome_errors);
    }
  }
}

TEST_CASE("16-QAM") {
  const auto& points = qam16_constellation();
  SUBCASE("unit average energy") {
    double e = 0.0;
    for (auto p : points) e += std::norm(p);
    CHECK(e / 16.0 == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("gray table") {
    const double s = 1.0 / std::sqrt(10.0);
    CHECK(qam16_modulate({0, 0, 0, 0}) == cplx(-3 * s, -3 * s));
    CHECK(qam16_modulate({0, 1, 1, 1}) == cplx(-1 * s, 1 * s));
    CHECK(qam16_modulate({1, 1, 1, 0}) == cplx(1 * s, 3 * s));
    CHECK(qam16_modulate({1, 0, 0, 1}) == cplx(3 * s, -1 * s));
    // horizontal and vertical neighbours differ in exactly one bit
    for (int a = 0; a < 16; ++a) {
      for (int b = 0; b < 16; ++b) {
        if (std::abs(std::abs(points[a] - points[b]) - 2 * s) > 1e-12) continue;
        const auto ba = bits_from_index(a), bb = bits_from_index(b);
        int diff = 0;
        for (std::size_t i = 0; i < 4; ++i) diff += ba[i] != bb[i];
        CHECK(diff == 1);
      }
    }
  }
  SUBCASE("noiseless loopback") {
    const cplx rot = 2.0 * std::polar(1.0, std::numbers::pi / 4);
    for (int m = 0; m < 16; ++m) {
      const auto bits = bits_from_index(m);
      CHECK(qam16_demod_coherent(qam16_modulate(bits), 1.0) == bits);
      CHECK(qam16_demod_coherent(rot * qam16_modulate(bits), rot) == bits);
    }
  }
  SUBCASE("decisions are invariant to a common complex scale") {
    RandomStream rng(19);
    for (int t = 0; t < 1000; ++t) {
      const cplx y(rng.gaussian(), rng.gaussian());
      const cplx h(rng.gaussian(), rng.gaussian());
      const cplx a(rng.gaussian(), rng.gaussian());
      CHECK(qam16_demod_coherent(y, h) == qam16_demod_coherent(a * y, a * h));
    }
  }
  SUBCASE("a zero channel estimate is degenerate") {
    CHECK_THROWS_AS(qam16_demod_coherent({1.0, 0.0}, 0.0), DegenerateChannelError);
  }
  SUBCASE("encoder matches the constellation") {
    const Qam16Encoder enc;
    const auto x = enc.encode(std::vector<int>{0, 6, 15});
    CHECK(x.cols() == 2);
    CHECK(x(1, 0) == points[6].real());
    CHECK(x(1, 1) == points[6].imag());
  }
}

TEST_CASE("least-squares channel estimate") {
  CHECK(ls_estimate(channel::IQBlock(std::vector<double>{0.6, 0.8})) == cplx(0.6, 0.8));
  SUBCASE("unbiased with variance N0 / (2 n_pilot) per real dimension") {
    RandomStream rng(20);
    const double sigma = 0.5;  // N0 / 2 = 0.25
    for (std::size_t n_pilot : {1u, 4u}) {
      const int n = 100000;
      double bias_re = 0.0, bias_im = 0.0, var = 0.0;
      for (int t = 0; t < n; ++t) {
        const channel::ChannelRealization r{channel::rayleigh_sample(rng), sigma};
        const auto e = ls_estimate(channel::pilot_receive(r, n_pilot, rng)) - r.h;
        bias_re += e.real();
        bias_im += e.imag();
        var += e.real() * e.real();
      }
      CAPTURE(n_pilot);
      const double expected_var = sigma * sigma / static_cast<double>(n_pilot);
      CHECK(std::abs(bias_re / n) < 4.5 * std::sqrt(expected_var / n));
      CHECK(std::abs(bias_im / n) < 4.5 * std::sqrt(expected_var / n));
      CHECK(var / n == doctest::Approx(expected_var).epsilon(0.02));
    }
  }
}

// Reference values come from tests/oracles/baseline_bler.py, a numpy
// simulation written independently of this library.
TEST_CASE("baseline sweeps agree with the independent simulation") {
  eval::SweepSpec spec;
  spec.min_trials = spec.max_trials = 1'000'000;
  SUBCASE("hamming mld at 4 dB") {
    spec.snr_db = {4.0};
    const auto p = eval::bler_sweep_baseline(eval::BaselineSystem::Hamming74MldAwgn, spec);
    check_bler_matches(p[0].bler, p[0].trials, 0.011739, 2'000'000);
  }
  SUBCASE("hamming mld at 0 dB") {
    spec.snr_db = {0.0};
    spec.min_trials = spec.max_trials = 200'000;
    const auto p = eval::bler_sweep_baseline(eval::BaselineSystem::Hamming74MldAwgn, spec);
    check_bler_matches(p[0].bler, p[0].trials, 0.179333, 1'000'000);
  }
  SUBCASE("16-QAM perfect CSI at 20 dB") {
    spec.snr_db = {20.0};
    const auto p = eval::bler_sweep_baseline(eval::BaselineSystem::Qam16RayleighPerfectCsi, spec);
    check_bler_matches(p[0].bler, p[0].trials, 0.0158105, 2'000'000);
  }
  SUBCASE("16-QAM LS estimate at 20 dB") {
    spec.snr_db = {20.0};
    const auto p = eval::bler_sweep_baseline(eval::BaselineSystem::Qam16RayleighLs, spec);
    check_bler_matches(p[0].bler, p[0].trials, 0.0294105, 2'000'000);
  }
  SUBCASE("16-QAM perfect CSI at 10 dB") {
    spec.snr_db = {10.0};
    spec.min_trials = spec.max_trials = 200'000;
    const auto p = eval::bler_sweep_baseline(eval::BaselineSystem::Qam16RayleighPerfectCsi, spec);
    check_bler_matches(p[0].bler, p[0].trials, 0.134279, 1'000'000);
  }
  SUBCASE("wrong channel for a baseline is a configuration error") {
    spec.snr_db = {4.0};
    CHECK_THROWS_AS(eval::bler_sweep_baseline(eval::BaselineSystem::Hamming74MldAwgn,
                                              channel::ChannelKind::Rayleigh, spec),
                    ConfigError);
  }
}
