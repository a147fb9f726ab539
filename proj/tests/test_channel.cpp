#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "e2e/baseline.hpp"
#include "e2e/channel.hpp"
#include "e2e/error.hpp"
#include "e2e/io.hpp"

using namespace e2e;
using namespace e2e::channel;

TEST_CASE("noise std from Eb/N0") {
  // N0 = 7/4 at 0 dB for k=4, n=7
  CHECK(noise_std_from_snr({0.0, 4, 7}) == doctest::Approx(0.9354143466934853).epsilon(1e-12));
  CHECK(noise_std_from_snr({0.0, 3, 3}) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
  CHECK(noise_std_from_snr({std::numeric_limits<double>::infinity(), 4, 7}) == 0.0);
  CHECK(noise_std_from_snr({60.0, 4, 7}) < 1e-3);
  // 10 dB lowers N0 tenfold
  CHECK(noise_std_from_snr({10.0, 4, 7}) ==
        doctest::Approx(noise_std_from_snr({0.0, 4, 7}) / std::sqrt(10.0)).epsilon(1e-12));
}

TEST_CASE("awgn") {
  RandomStream rng(1);
  const IQBlock x(std::vector<double>{1, -1, 0.5, 0.25});
  SUBCASE("zero noise is the identity") { CHECK(awgn_apply(x, 0.0, rng).samples == x.samples); }
  SUBCASE("variance of pure noise within 2%") {
    const std::size_t n = 100000;
    std::vector<double> v(n, 0.0);
    awgn_apply_inplace(v, 0.7, rng);
    double sum = 0.0, sq = 0.0;
    for (double s : v) {
      sum += s;
      sq += s * s;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(var == doctest::Approx(0.49).epsilon(0.02));
  }
  SUBCASE("noise is uncorrelated with the signal") {
    const std::size_t n = 100000;
    double sxw = 0.0, sxx = 0.0, sww = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const IQBlock xi(std::vector<double>{rng.gaussian(), rng.gaussian()});
      const auto y = awgn_apply(xi, 0.5, rng);
      for (std::size_t d = 0; d < 2; ++d) {
        const double w = y.samples[d] - xi.samples[d];
        sxw += xi.samples[d] * w;
        sxx += xi.samples[d] * xi.samples[d];
        sww += w * w;
      }
    }
    CHECK(std::abs(sxw / std::sqrt(sxx * sww)) < 0.01);
  }
  SUBCASE("seeded output is reproducible") {
    RandomStream a(99), b(99);
    CHECK(awgn_apply(x, 0.3, a).samples == awgn_apply(x, 0.3, b).samples);
  }
}

TEST_CASE("rayleigh samples have unit power and zero mean") {
  RandomStream rng(2);
  const int n = 100000;
  double power = 0.0, re = 0.0, im = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto h = rayleigh_sample(rng);
    power += std::norm(h);
    re += h.real();
    im += h.imag();
  }
  CHECK(power / n >= 0.98);
  CHECK(power / n <= 1.02);
  CHECK(std::abs(re / n) < 0.01);
  CHECK(std::abs(im / n) < 0.01);
  RandomStream a(5), b(5);
  CHECK(rayleigh_sample(a) == rayleigh_sample(b));
}

TEST_CASE("block fading") {
  RandomStream rng(3);
  const IQBlock x(std::vector<double>{1, 0, 0.6, -0.8});
  SUBCASE("unit gain without noise is the identity") {
    CHECK(fading_apply(x, {{1.0, 0.0}, 0.0}, rng).samples == x.samples);
  }
  SUBCASE("h = j rotates by 90 degrees") {
    const auto y = fading_apply(x, {{0.0, 1.0}, 0.0}, rng);
    CHECK(y.at(0) == cplx(0.0, 1.0));
    CHECK(y.at(1).real() == doctest::Approx(0.8));
    CHECK(y.at(1).imag() == doctest::Approx(0.6));
  }
  SUBCASE("noiseless fading is linear in x") {
    const cplx h(0.3, -1.1);
    IQBlock scaled = x;
    for (auto& v : scaled.samples) v *= -2.5;
    const auto y1 = fading_apply(x, {h, 0.0}, rng);
    const auto y2 = fading_apply(scaled, {h, 0.0}, rng);
    for (std::size_t i = 0; i < y1.samples.size(); ++i)
      CHECK(y2.samples[i] == doctest::Approx(-2.5 * y1.samples[i]).epsilon(1e-14));
  }
  SUBCASE("energy accounting with h = 2") {
    const double sigma = 0.4;
    const int n = 50000;
    double power = 0.0;
    for (int i = 0; i < n; ++i) power += fading_apply(x, {{2.0, 0.0}, sigma}, rng).mean_power();
    CHECK(power / n == doctest::Approx(4.0 + 2 * sigma * sigma).epsilon(0.02));
  }
  SUBCASE("energy accounting with random h") {
    const double sigma = 0.3;
    const int n = 100000;
    double power = 0.0;
    for (int i = 0; i < n; ++i) power += fading_apply(x, {rayleigh_sample(rng), sigma}, rng).mean_power();
    CHECK(power / n == doctest::Approx(1.0 + 2 * sigma * sigma).epsilon(0.02));
  }
}

TEST_CASE("pilots") {
  RandomStream rng(4);
  SUBCASE("noiseless pilot returns h") {
    const auto yp = pilot_receive({{0.3, -0.4}, 0.0}, 1, rng);
    CHECK(yp.samples == std::vector<double>{0.3, -0.4});
    CHECK(baseline::ls_estimate(yp) == cplx(0.3, -0.4));
  }
  SUBCASE("pilot mean over random channels is zero") {
    const int n = 100000;
    cplx sum = 0.0;
    for (int i = 0; i < n; ++i) sum += pilot_receive({rayleigh_sample(rng), 0.2}, 1, rng).at(0);
    CHECK(std::abs(sum.real() / n) < 0.01);
    CHECK(std::abs(sum.imag() / n) < 0.01);
  }
  SUBCASE("pilot noise matches the data noise") {
    const int n = 100000;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) sq += std::norm(pilot_receive({{1.0, 0.0}, 0.5}, 1, rng).at(0) - 1.0);
    CHECK(sq / n == doctest::Approx(2 * 0.25).epsilon(0.02));
  }
}

TEST_CASE("real channel") {
  RandomStream rng(5);
  const Matrix x(3, 4, {1, 0, 0, 1, -1, 0, 0, -1, 0.6, 0.8, -0.8, 0.6});
  SUBCASE("awgn batch has no pilot or realizations") {
    const RealChannel ch(ChannelKind::AWGN, 0.1);
    const auto out = ch.transmit(x, rng);
    CHECK(out.y.rows() == 3);
    CHECK(out.y.cols() == 4);
    CHECK(out.pilot.cols() == 0);
    CHECK(out.realizations.empty());
  }
  SUBCASE("rayleigh batch carries one pilot and h per block") {
    const RealChannel ch(ChannelKind::Rayleigh, 0.0, 1);
    const auto out = ch.transmit(x, rng);
    REQUIRE(out.realizations.size() == 3);
    CHECK(out.pilot.cols() == 2);
    for (std::size_t b = 0; b < 3; ++b) {
      const cplx h = out.realizations[b].h;
      CHECK(out.pilot(b, 0) == h.real());
      CHECK(out.pilot(b, 1) == h.imag());
      const cplx expected = h * cplx(x(b, 2), x(b, 3));
      CHECK(out.y(b, 2) == doctest::Approx(expected.real()));
      CHECK(out.y(b, 3) == doctest::Approx(expected.imag()));
    }
  }
  SUBCASE("caller-chosen realizations are used as given") {
    const RealChannel ch(ChannelKind::Rayleigh, 0.0, 2);
    const std::vector<ChannelRealization> r(3, ChannelRealization{{0.0, 2.0}, 0.0});
    const auto out = ch.transmit(x, r, rng);
    CHECK(out.pilot.cols() == 4);
    CHECK(out.y(0, 0) == 0.0);
    CHECK(out.y(0, 1) == 2.0);
    CHECK_THROWS(ch.transmit(x, std::span(r).first(2), rng));
  }
  SUBCASE("the real channel has no gradient") {
    const RealChannel ch(ChannelKind::AWGN, 0.1);
    CHECK_THROWS_AS(ch.input_gradient(Matrix(3, 4)), NoGradientError);
  }
  SUBCASE("seeded batches are reproducible") {
    const RealChannel ch(ChannelKind::Rayleigh, 0.3);
    RandomStream a(8), b(8);
    CHECK(ch.transmit(x, a).y == ch.transmit(x, b).y);
  }
}

TEST_CASE("derived streams are independent of each other and reproducible") {
  auto a = RandomStream::derive(1, "eval", 2, 3);
  auto b = RandomStream::derive(1, "eval", 2, 3);
  auto c = RandomStream::derive(1, "eval", 3, 2);
  auto d = RandomStream::derive(1, "fidelity", 2, 3);
  const double va = a.gaussian();
  CHECK(va == b.gaussian());
  CHECK(va != c.gaussian());
  CHECK(va != d.gaussian());
}

TEST_CASE("channel trace csv") {
  RandomStream rng(6);
  const RealChannel ch(ChannelKind::Rayleigh, 0.1);
  const Matrix x(2, 2, {1, 0, 0, 1});
  const auto out = ch.transmit(x, rng);
  const auto path = std::filesystem::temp_directory_path() / "e2e_trace_test.csv";
  write_channel_trace(path, x, out);
  const auto text = read_text(path);
  CHECK(text.rfind("block_id,use_index,x_re,x_im,y_re,y_im,h_re,h_im\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  std::filesystem::remove(path);
}
