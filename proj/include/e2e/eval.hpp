#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "e2e/channel.hpp"
#include "e2e/gan.hpp"
#include "e2e/transceiver.hpp"

namespace e2e::eval {

struct BlerPoint {
  double ebn0_db = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t errors = 0;
  double bler = 0.0;
  double ci95_halfwidth = 0.0;  // 1.96 sqrt(bler (1 - bler) / trials)

  static BlerPoint from_counts(double ebn0_db, std::uint64_t trials, std::uint64_t errors);
};

// Adaptive Monte-Carlo budget for one sweep. Each point runs until it has at
// least `min_trials` trials and `target_errors` errors, or `max_trials` trials.
// An snr_db entry of +inf means a noiseless channel.
struct SweepSpec {
  std::vector<double> snr_db;
  std::uint64_t min_trials = 10'000;
  std::uint64_t max_trials = 10'000'000;
  std::uint64_t target_errors = 200;
  std::uint64_t seed = 1;

  void validate() const;
};

// Errors observed in `count` independent trials at sweep point `snr_index`.
using TrialFn = std::function<std::uint64_t(std::size_t snr_index, RandomStream& rng, std::uint64_t count)>;

// Shards the trials of each point over OpenMP threads. Shard RNG streams derive
// from (seed, stream_name, snr_index, shard_index) and the shard layout does not
// depend on the thread count, so results are reproducible.
std::vector<BlerPoint> run_sweep(const SweepSpec& spec, std::string_view stream_name, const TrialFn& trial);

// encode -> real channel (+ pilot) -> decode -> hard decision. Never touches a generator.
std::vector<BlerPoint> bler_sweep_learned(const Transmitter& tx, const Receiver& rx,
                                          channel::ChannelKind kind, const SweepSpec& spec);

enum class BaselineSystem { Hamming74MldAwgn, Qam16RayleighPerfectCsi, Qam16RayleighLs };

std::string_view to_string(BaselineSystem s) noexcept;
BaselineSystem baseline_from_string(std::string_view name);
channel::ChannelKind native_channel(BaselineSystem s) noexcept;

// Block definitions: Hamming = 4 bits on 7 real-axis BPSK uses (k=4, n=7);
// 16-QAM = 4 bits on one complex use plus one unit pilot (k=4, n=1).
// Throws ConfigError when `kind` is not the system's channel.
std::vector<BlerPoint> bler_sweep_baseline(BaselineSystem system, channel::ChannelKind kind,
                                           const SweepSpec& spec);
std::vector<BlerPoint> bler_sweep_baseline(BaselineSystem system, const SweepSpec& spec);

// ebn0_db,trials,errors,bler,ci95_halfwidth
std::string bler_csv(std::span<const BlerPoint> points);
void write_bler_csv(const std::filesystem::path& path, std::span<const BlerPoint> points);

struct BlerSeries {
  std::string label;
  std::vector<BlerPoint> points;
};
// Self-contained SVG line chart, log-scaled BLER axis.
std::string bler_svg(std::span<const BlerSeries> series, std::string_view title);
void write_bler_svg(const std::filesystem::path& path, std::span<const BlerSeries> series,
                    std::string_view title);

// BLER of `worse` at x must not exceed BLER of `reference` at x - margin_db.
// Reference values between sweep points are interpolated linearly in log10(BLER).
struct GapCheck {
  double ebn0_db = 0.0;
  double bler = 0.0;
  double reference_bler = 0.0;
  bool pass = false;
};
double interpolate_log_bler(std::span<const BlerPoint> curve, double ebn0_db);
std::vector<GapCheck> horizontal_gap_check(std::span<const BlerPoint> curve,
                                           std::span<const BlerPoint> reference, double margin_db);

// ---- GAN fidelity ----

struct FidelityCondition {
  int message = 0;
  std::optional<std::complex<double>> h;  // fading only; the pilot is then noiseless h
};

// AWGN: every message. Rayleigh: every message for h in {1, j, 0.5 - 0.5j}.
std::vector<FidelityCondition> default_conditions(const Encoder& encoder, channel::ChannelKind kind);

struct ConditionStats {
  FidelityCondition condition;
  std::vector<double> target_mean;  // x on AWGN, h x on fading
  std::vector<double> real_mean;
  std::vector<double> fake_mean;
  Matrix real_cov;
  Matrix fake_cov;
  // max over complex uses of |fake_mean_u - target_u|
  double fake_mean_error = 0.0;
  double real_mean_error = 0.0;
  // fake variance / true noise variance, per real dimension
  std::vector<double> fake_var_ratio;
  double energy_distance = 0.0;
  double p_value = 1.0;
};

struct FidelityReport {
  double noise_var = 0.0;
  std::vector<ConditionStats> conditions;
  double total_energy_distance = 0.0;
  double p_value = 1.0;  // permutation test on the summed statistic
  bool flagged = false;  // p_value < 0.01: generator distinguishable from the channel

  [[nodiscard]] double max_fake_mean_error() const;
  [[nodiscard]] double min_var_ratio() const;
  [[nodiscard]] double max_var_ratio() const;
};

// Two-sample energy distance 2E|X-Y| - E|X-X'| - E|Y-Y'| (U-statistics).
double energy_distance(const Matrix& a, const Matrix& b);
// Permutation p-value of energy_distance(a, b).
double energy_permutation_p_value(const Matrix& a, const Matrix& b, int permutations, RandomStream& rng);

FidelityReport gan_fidelity(const gan::Generator& g, const Encoder& encoder,
                            const channel::RealChannel& ch, std::span<const FidelityCondition> conditions,
                            std::size_t samples, std::uint64_t seed);

// Real vs generator samples drawn from the same noise as `gan_fidelity` uses, but
// as a comparison between two independent real sample sets (calibration).
FidelityReport channel_self_fidelity(const Encoder& encoder, const channel::RealChannel& ch,
                                     std::span<const FidelityCondition> conditions, std::size_t samples,
                                     std::uint64_t seed);

// condition,message_index,h_re,h_im,dim,target_mean,real_mean,fake_mean,real_var,fake_var,
// fake_var_ratio,fake_mean_error,energy_distance,p_value
std::string fidelity_csv(const FidelityReport& report);

// message_index,use_index,re,im for every message.
std::string constellation_csv(const Encoder& encoder);
void constellation_dump(const Encoder& encoder, const std::filesystem::path& path);

// source,condition,message_index,sample,use_index,re,im,h_re,h_im,pilot_re,pilot_im
// (h and pilot columns are empty on AWGN).
std::string gan_scatter_csv(const gan::Generator& g, const Encoder& encoder, const channel::RealChannel& ch,
                            std::span<const FidelityCondition> conditions, std::size_t samples,
                            std::uint64_t seed);
void gan_scatter_dump(const gan::Generator& g, const Encoder& encoder, const channel::RealChannel& ch,
                      std::span<const FidelityCondition> conditions, std::size_t samples,
                      std::uint64_t seed, const std::filesystem::path& path);

}  // namespace e2e::eval
