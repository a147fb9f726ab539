#include "e2e/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "e2e/baseline.hpp"
#include "e2e/error.hpp"
#include "e2e/io.hpp"

namespace e2e::eval {

using channel::ChannelKind;
using cplx = std::complex<double>;

BlerPoint BlerPoint::from_counts(double ebn0_db, std::uint64_t trials, std::uint64_t errors) {
  if (trials == 0) throw ValidationError("BlerPoint: zero trials");
  if (errors > trials) throw ValidationError("BlerPoint: more errors than trials");
  BlerPoint p{ebn0_db, trials, errors, 0.0, 0.0};
  p.bler = static_cast<double>(errors) / static_cast<double>(trials);
  p.ci95_halfwidth = 1.96 * std::sqrt(p.bler * (1.0 - p.bler) / static_cast<double>(trials));
  return p;
}

void SweepSpec::validate() const {
  if (snr_db.empty()) throw ValidationError("sweep: no SNR points");
  if (min_trials == 0 || max_trials == 0) throw ValidationError("sweep: trial counts must be >= 1");
  if (min_trials > max_trials) throw ValidationError("sweep: min_trials > max_trials");
  for (double v : snr_db)
    if (std::isnan(v) || v == -INFINITY) throw ValidationError("sweep: SNR must be a number or +inf");
}

namespace {

// Fixed shard layout: each round runs kShards shards of up to kShardTrials trials.
constexpr std::uint64_t kShards = 8;
constexpr std::uint64_t kShardTrials = 4096;

}  // namespace

std::vector<BlerPoint> run_sweep(const SweepSpec& spec, std::string_view stream_name, const TrialFn& trial) {
  spec.validate();
  std::vector<BlerPoint> points;
  for (std::size_t si = 0; si < spec.snr_db.size(); ++si) {
    std::uint64_t trials = 0;
    std::uint64_t errors = 0;
    std::uint64_t shard_base = 0;
    while (true) {
      std::vector<std::uint64_t> counts(kShards, 0);
      std::uint64_t remaining = spec.max_trials - trials;
      for (auto& c : counts) {
        c = std::min(kShardTrials, remaining);
        remaining -= c;
      }
      std::vector<std::uint64_t> shard_errors(kShards, 0);
#pragma omp parallel for schedule(dynamic, 1)
      for (std::int64_t s = 0; s < static_cast<std::int64_t>(kShards); ++s) {
        const auto idx = static_cast<std::size_t>(s);
        if (counts[idx] == 0) continue;
        auto rng = RandomStream::derive(spec.seed, stream_name, si, shard_base + idx);
        shard_errors[idx] = trial(si, rng, counts[idx]);
      }
      shard_base += kShards;
      trials += std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
      errors += std::accumulate(shard_errors.begin(), shard_errors.end(), std::uint64_t{0});
      if (trials >= spec.max_trials) break;
      if (trials >= spec.min_trials && errors >= spec.target_errors) break;
    }
    points.push_back(BlerPoint::from_counts(spec.snr_db[si], trials, errors));
  }
  return points;
}

std::vector<BlerPoint> bler_sweep_learned(const Transmitter& tx, const Receiver& rx, ChannelKind kind,
                                          const SweepSpec& spec) {
  if (tx.uses() != rx.uses() || tx.alphabet_size() != rx.alphabet_size()) {
    throw ConfigError("bler_sweep_learned: transmitter and receiver checkpoints do not match");
  }
  if ((kind == ChannelKind::Rayleigh) != (rx.pilot_uses() > 0)) {
    throw ConfigError("bler_sweep_learned: receiver pilot configuration does not match the channel");
  }
  const int alphabet = tx.alphabet_size();
  const int k = static_cast<int>(std::lround(std::log2(alphabet)));
  const auto uses = tx.uses();
  const auto pilots = rx.pilot_uses();

  // Encoding is deterministic per message, so encode the whole alphabet once.
  std::vector<int> all(static_cast<std::size_t>(alphabet));
  std::iota(all.begin(), all.end(), 0);
  const Matrix codebook = tx.encode(all);

  const auto trial = [&](std::size_t si, RandomStream& rng, std::uint64_t count) -> std::uint64_t {
    const double noise_std = channel::noise_std_from_snr({spec.snr_db[si], k, static_cast<int>(uses)});
    const channel::RealChannel ch(kind, noise_std, std::max<std::size_t>(pilots, 1));
    constexpr std::uint64_t kChunk = 1024;
    std::uint64_t errors = 0;
    for (std::uint64_t done = 0; done < count; done += kChunk) {
      const auto n = static_cast<std::size_t>(std::min(kChunk, count - done));
      std::vector<int> msgs(n);
      for (auto& m : msgs) m = rng.uniform_int(alphabet);
      const auto out = ch.transmit(gather_rows(codebook, msgs), rng);
      const auto decisions = hard_decisions(rx.logits(out.y, out.pilot));
      for (std::size_t b = 0; b < n; ++b) errors += decisions[b] != msgs[b];
    }
    return errors;
  };
  return run_sweep(spec, "eval.learned", trial);
}

std::string_view to_string(BaselineSystem s) noexcept {
  switch (s) {
    case BaselineSystem::Hamming74MldAwgn:
      return "hamming74-mld-awgn";
    case BaselineSystem::Qam16RayleighPerfectCsi:
      return "qam16-rayleigh-perfect-csi";
    case BaselineSystem::Qam16RayleighLs:
      return "qam16-rayleigh-ls";
  }
  return "";
}

BaselineSystem baseline_from_string(std::string_view name) {
  for (auto s : {BaselineSystem::Hamming74MldAwgn, BaselineSystem::Qam16RayleighPerfectCsi,
                 BaselineSystem::Qam16RayleighLs}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown baseline system '" + std::string(name) +
                    "' (expected hamming74-mld-awgn, qam16-rayleigh-perfect-csi or qam16-rayleigh-ls)");
}

ChannelKind native_channel(BaselineSystem s) noexcept {
  return s == BaselineSystem::Hamming74MldAwgn ? ChannelKind::AWGN : ChannelKind::Rayleigh;
}

std::vector<BlerPoint> bler_sweep_baseline(BaselineSystem system, ChannelKind kind, const SweepSpec& spec) {
  if (kind != native_channel(system)) {
    throw ConfigError("baseline '" + std::string(to_string(system)) + "' cannot run on the " +
                      (kind == ChannelKind::AWGN ? "AWGN" : "Rayleigh") + " channel");
  }
  if (system == BaselineSystem::Hamming74MldAwgn) {
    const auto& book = baseline::hamming74_codebook();
    const auto trial = [&](std::size_t si, RandomStream& rng, std::uint64_t count) -> std::uint64_t {
      const double noise_std = channel::noise_std_from_snr({spec.snr_db[si], 4, 7});
      std::uint64_t errors = 0;
      std::array<double, 7> y{};
      for (std::uint64_t t = 0; t < count; ++t) {
        const int msg = rng.uniform_int(16);
        const auto& c = book[static_cast<std::size_t>(msg)];
        // BPSK on the real axis of each complex use; the imaginary noise is
        // drawn too but carries no information for the decoder.
        for (std::size_t i = 0; i < 7; ++i) {
          y[i] = (c[i] ? -1.0 : 1.0) + noise_std * rng.gaussian();
          (void)rng.gaussian();
        }
        errors += baseline::index_from_bits(baseline::hamming74_mld_decode(y)) != msg;
      }
      return errors;
    };
    return run_sweep(spec, "eval.hamming", trial);
  }

  const bool perfect_csi = system == BaselineSystem::Qam16RayleighPerfectCsi;
  const auto& points = baseline::qam16_constellation();
  const auto trial = [&](std::size_t si, RandomStream& rng, std::uint64_t count) -> std::uint64_t {
    const double noise_std = channel::noise_std_from_snr({spec.snr_db[si], 4, 1});
    std::uint64_t errors = 0;
    for (std::uint64_t t = 0; t < count; ++t) {
      const int msg = rng.uniform_int(16);
      const channel::ChannelRealization r{channel::rayleigh_sample(rng), noise_std};
      channel::IQBlock x(1);
      x.set(0, points[static_cast<std::size_t>(msg)]);
      const auto y = channel::fading_apply(x, r, rng);
      const auto yp = channel::pilot_receive(r, 1, rng);
      const cplx h_est = perfect_csi ? r.h : baseline::ls_estimate(yp);
      try {
        errors += baseline::index_from_bits(baseline::qam16_demod_coherent(y.at(0), h_est)) != msg;
      } catch (const DegenerateChannelError&) {
        ++errors;
      }
    }
    return errors;
  };
  return run_sweep(spec, perfect_csi ? "eval.qam16.csi" : "eval.qam16.ls", trial);
}

std::vector<BlerPoint> bler_sweep_baseline(BaselineSystem system, const SweepSpec& spec) {
  return bler_sweep_baseline(system, native_channel(system), spec);
}

std::string bler_csv(std::span<const BlerPoint> points) {
  std::ostringstream out;
  out << "ebn0_db,trials,errors,bler,ci95_halfwidth\n" << std::setprecision(17);
  for (const auto& p : points) {
    out << p.ebn0_db << ',' << p.trials << ',' << p.errors << ',' << p.bler << ',' << p.ci95_halfwidth << '\n';
  }
  return out.str();
}

void write_bler_csv(const std::filesystem::path& path, std::span<const BlerPoint> points) {
  write_text_atomic(path, bler_csv(points));
}

std::string bler_svg(std::span<const BlerSeries> series, std::string_view title) {
  constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
  double x_min = INFINITY, x_max = -INFINITY, y_min = 0.0;
  for (const auto& s : series)
    for (const auto& p : s.points) {
      if (!std::isfinite(p.ebn0_db)) continue;
      x_min = std::min(x_min, p.ebn0_db);
      x_max = std::max(x_max, p.ebn0_db);
      if (p.bler > 0) y_min = std::min(y_min, std::floor(std::log10(p.bler)));
    }
  if (!std::isfinite(x_min)) x_min = 0, x_max = 1;
  if (x_max == x_min) x_max = x_min + 1;
  y_min = std::min(y_min, -1.0);
  const double y_max = 0.0;
  auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * (kW - kLeft - kRight); };
  auto py = [&](double ly) { return kTop + (y_max - ly) / (y_max - y_min) * (kH - kTop - kBottom); };

  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::ostringstream o;
  o << std::fixed << std::setprecision(2);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
    << title << "</text>\n";
  for (double d = y_min; d <= y_max; d += 1.0) {
    o << "<line x1=\"" << kLeft << "\" x2=\"" << kW - kRight << "\" y1=\"" << py(d) << "\" y2=\"" << py(d)
      << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(d) + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" << static_cast<int>(d)
      << "</text>\n";
  }
  const double step = (x_max - x_min) > 10 ? 5.0 : 1.0;
  for (double x = std::ceil(x_min / step) * step; x <= x_max + 1e-9; x += step) {
    o << "<line y1=\"" << kTop << "\" y2=\"" << kH - kBottom << "\" x1=\"" << px(x) << "\" x2=\"" << px(x)
      << "\" stroke=\"#eee\"/>\n";
    o << "<text x=\"" << px(x) << "\" y=\"" << kH - kBottom + 16
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << x << "</text>\n";
  }
  o << "<text x=\"" << (kLeft + kW - kRight) / 2 << "\" y=\"" << kH - 12
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">Eb/N0 (dB)</text>\n";
  o << "<text x=\"16\" y=\"" << (kTop + kH - kBottom) / 2
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
    << (kTop + kH - kBottom) / 2 << ")\">BLER</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kColors[i % std::size(kColors)];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : series[i].points)
      if (p.bler > 0 && std::isfinite(p.ebn0_db)) o << px(p.ebn0_db) << ',' << py(std::log10(p.bler)) << ' ';
    o << "\"/>\n";
    o << "<text x=\"" << kW - kRight - 8 << "\" y=\"" << kTop + 16 + 16 * static_cast<double>(i)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color << "\">"
      << series[i].label << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void write_bler_svg(const std::filesystem::path& path, std::span<const BlerSeries> series, std::string_view title) {
  write_text_atomic(path, bler_svg(series, title));
}

double interpolate_log_bler(std::span<const BlerPoint> curve, double ebn0_db) {
  if (curve.empty()) throw ValidationError("interpolate_log_bler: empty curve");
  std::vector<BlerPoint> pts(curve.begin(), curve.end());
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.ebn0_db < b.ebn0_db; });
  for (const auto& p : pts)
    if (p.ebn0_db == ebn0_db) return p.bler;
  if (ebn0_db < pts.front().ebn0_db || ebn0_db > pts.back().ebn0_db) {
    throw ValidationError("interpolate_log_bler: " + std::to_string(ebn0_db) + " dB outside the reference sweep");
  }
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (ebn0_db < pts[i].ebn0_db) {
      const auto& a = pts[i - 1];
      const auto& b = pts[i];
      if (a.bler <= 0 || b.bler <= 0) return std::max(a.bler, b.bler) > 0 ? std::min(a.bler, b.bler) : 0.0;
      const double t = (ebn0_db - a.ebn0_db) / (b.ebn0_db - a.ebn0_db);
      return std::pow(10.0, std::log10(a.bler) + t * (std::log10(b.bler) - std::log10(a.bler)));
    }
  }
  return pts.back().bler;
}

std::vector<GapCheck> horizontal_gap_check(std::span<const BlerPoint> curve, std::span<const BlerPoint> reference,
                                           double margin_db) {
  std::vector<GapCheck> out;
  for (const auto& p : curve) {
    const double ref = interpolate_log_bler(reference, p.ebn0_db - margin_db);
    out.push_back({p.ebn0_db, p.bler, ref, p.bler <= ref});
  }
  return out;
}

// ---- GAN fidelity ----

std::vector<FidelityCondition> default_conditions(const Encoder& encoder, ChannelKind kind) {
  std::vector<FidelityCondition> out;
  if (kind == ChannelKind::AWGN) {
    for (int m = 0; m < encoder.alphabet_size(); ++m) out.push_back({m, std::nullopt});
    return out;
  }
  for (const cplx h : {cplx{1.0, 0.0}, cplx{0.0, 1.0}, cplx{0.5, -0.5}})
    for (int m = 0; m < encoder.alphabet_size(); ++m) out.push_back({m, h});
  return out;
}

namespace {

double euclid(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// Pairwise distances of the stacked sample [a; b].
Matrix pooled_distances(const Matrix& a, const Matrix& b) {
  const std::size_t n = a.rows() + b.rows();
  auto row = [&](std::size_t i) { return i < a.rows() ? a.row(i) : b.row(i - a.rows()); };
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d(i, j) = d(j, i) = euclid(row(i), row(j));
  return d;
}

// Energy distance of the split (labels[i] == 0 -> first sample).
double split_energy(const Matrix& d, std::span<const std::uint8_t> labels) {
  double cross = 0.0, within_a = 0.0, within_b = 0.0;
  std::size_t na = 0;
  for (auto l : labels) na += l == 0;
  const std::size_t nb = labels.size() - na;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = i + 1; j < labels.size(); ++j) {
      const double v = d(i, j);
      if (labels[i] != labels[j]) {
        cross += v;
      } else if (labels[i] == 0) {
        within_a += v;
      } else {
        within_b += v;
      }
    }
  }
  const double na_d = static_cast<double>(na), nb_d = static_cast<double>(nb);
  return 2.0 * cross / (na_d * nb_d) - within_a / (na_d * (na_d - 1) / 2.0) - within_b / (nb_d * (nb_d - 1) / 2.0);
}

std::vector<std::uint8_t> initial_labels(std::size_t na, std::size_t nb) {
  std::vector<std::uint8_t> labels(na + nb, 0);
  std::fill(labels.begin() + static_cast<long>(na), labels.end(), 1);
  return labels;
}

// Permutation test cost is quadratic; cap the sample used for it.
constexpr std::size_t kEnergySubsample = 200;
constexpr int kPermutations = 199;

Matrix head_rows(const Matrix& m, std::size_t n) {
  n = std::min(n, m.rows());
  Matrix out(n, m.cols());
  std::copy(m.data(), m.data() + n * m.cols(), out.data());
  return out;
}

std::vector<double> column_means(const Matrix& m) {
  std::vector<double> mu(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) mu[c] += m(r, c);
  for (auto& v : mu) v /= static_cast<double>(m.rows());
  return mu;
}

Matrix covariance(const Matrix& m, std::span<const double> mu) {
  Matrix cov(m.cols(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t i = 0; i < m.cols(); ++i)
      for (std::size_t j = 0; j < m.cols(); ++j) cov(i, j) += (m(r, i) - mu[i]) * (m(r, j) - mu[j]);
  for (auto& v : cov.flat()) v /= static_cast<double>(m.rows() - 1);
  return cov;
}

double max_use_error(std::span<const double> mean, std::span<const double> target) {
  double worst = 0.0;
  for (std::size_t u = 0; u + 1 < mean.size(); u += 2) {
    worst = std::max(worst, std::hypot(mean[u] - target[u], mean[u + 1] - target[u + 1]));
  }
  return worst;
}

// Inputs for one condition: repeated x, the (noiseless) pilot and h.
struct ConditionBatch {
  Matrix x;
  Matrix pilot;
  std::vector<channel::ChannelRealization> realizations;
  std::vector<double> target;
};

ConditionBatch condition_batch(const Encoder& encoder, const channel::RealChannel& ch,
                               const FidelityCondition& cond, std::size_t samples) {
  if (ch.kind() == ChannelKind::Rayleigh && !cond.h) {
    throw ConfigError("gan_fidelity: fading conditions need a channel coefficient");
  }
  const std::vector<int> msgs(samples, cond.message);
  ConditionBatch cb;
  cb.x = encoder.encode(msgs);
  cb.pilot = Matrix(samples, 2 * ch.pilot_uses());
  cb.target.assign(cb.x.row(0).begin(), cb.x.row(0).end());
  if (ch.kind() == ChannelKind::Rayleigh) {
    const cplx h = *cond.h;
    for (std::size_t b = 0; b < samples; ++b)
      for (std::size_t p = 0; p < ch.pilot_uses(); ++p) {
        cb.pilot(b, 2 * p) = h.real();
        cb.pilot(b, 2 * p + 1) = h.imag();
      }
    cb.realizations.assign(samples, {h, ch.noise_std()});
    for (std::size_t u = 0; u + 1 < cb.target.size(); u += 2) {
      const cplx v = h * cplx{cb.target[u], cb.target[u + 1]};
      cb.target[u] = v.real();
      cb.target[u + 1] = v.imag();
    }
  }
  return cb;
}

Matrix real_samples(const channel::RealChannel& ch, const ConditionBatch& cb, RandomStream& rng) {
  if (ch.kind() == ChannelKind::Rayleigh) return ch.transmit(cb.x, cb.realizations, rng).y;
  return ch.transmit(cb.x, rng).y;
}

using FakeSampler = std::function<Matrix(const ConditionBatch&, RandomStream&)>;

FidelityReport fidelity_impl(const Encoder& encoder, const channel::RealChannel& ch,
                             std::span<const FidelityCondition> conditions, std::size_t samples,
                             std::uint64_t seed, const FakeSampler& fake_sampler) {
  if (samples < 2) throw ValidationError("gan_fidelity: need at least 2 samples per condition");
  FidelityReport report;
  report.noise_var = ch.noise_std() * ch.noise_std();
  std::vector<Matrix> distances;
  std::vector<std::size_t> split_sizes;
  auto perm_rng = RandomStream::derive(seed, "fidelity.permutation");

  for (std::size_t ci = 0; ci < conditions.size(); ++ci) {
    auto real_rng = RandomStream::derive(seed, "fidelity.real", ci);
    auto fake_rng = RandomStream::derive(seed, "fidelity.fake", ci);
    const auto cb = condition_batch(encoder, ch, conditions[ci], samples);
    const Matrix real = real_samples(ch, cb, real_rng);
    const Matrix fake = fake_sampler(cb, fake_rng);

    ConditionStats s;
    s.condition = conditions[ci];
    s.target_mean = cb.target;
    s.real_mean = column_means(real);
    s.fake_mean = column_means(fake);
    s.real_cov = covariance(real, s.real_mean);
    s.fake_cov = covariance(fake, s.fake_mean);
    s.real_mean_error = max_use_error(s.real_mean, s.target_mean);
    s.fake_mean_error = max_use_error(s.fake_mean, s.target_mean);
    for (std::size_t i = 0; i < fake.cols(); ++i) {
      s.fake_var_ratio.push_back(report.noise_var > 0 ? s.fake_cov(i, i) / report.noise_var : INFINITY);
    }

    const Matrix a = head_rows(real, kEnergySubsample);
    const Matrix b = head_rows(fake, kEnergySubsample);
    distances.push_back(pooled_distances(a, b));
    split_sizes.push_back(a.rows());
    const auto labels = initial_labels(a.rows(), b.rows());
    s.energy_distance = split_energy(distances.back(), labels);
    report.total_energy_distance += s.energy_distance;

    auto shuffled = labels;
    int at_least = 0;
    for (int p = 0; p < kPermutations; ++p) {
      std::shuffle(shuffled.begin(), shuffled.end(), perm_rng.engine());
      at_least += split_energy(distances.back(), shuffled) >= s.energy_distance;
    }
    s.p_value = (1.0 + at_least) / (1.0 + kPermutations);
    report.conditions.push_back(std::move(s));
  }

  // Joint test: permute within every condition, compare the summed statistic.
  int at_least = 0;
  for (int p = 0; p < kPermutations; ++p) {
    double total = 0.0;
    for (std::size_t ci = 0; ci < distances.size(); ++ci) {
      auto labels = initial_labels(split_sizes[ci], distances[ci].rows() - split_sizes[ci]);
      std::shuffle(labels.begin(), labels.end(), perm_rng.engine());
      total += split_energy(distances[ci], labels);
    }
    at_least += total >= report.total_energy_distance;
  }
  report.p_value = (1.0 + at_least) / (1.0 + kPermutations);
  report.flagged = report.p_value < 0.01;
  return report;
}

}  // namespace

double FidelityReport::max_fake_mean_error() const {
  double v = 0.0;
  for (const auto& c : conditions) v = std::max(v, c.fake_mean_error);
  return v;
}

double FidelityReport::min_var_ratio() const {
  double v = INFINITY;
  for (const auto& c : conditions)
    for (double r : c.fake_var_ratio) v = std::min(v, r);
  return v;
}

double FidelityReport::max_var_ratio() const {
  double v = 0.0;
  for (const auto& c : conditions)
    for (double r : c.fake_var_ratio) v = std::max(v, r);
  return v;
}

double energy_distance(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols() || a.rows() < 2 || b.rows() < 2) {
    throw ShapeError("energy_distance: samples need equal dimension and at least 2 rows each");
  }
  return split_energy(pooled_distances(a, b), initial_labels(a.rows(), b.rows()));
}

double energy_permutation_p_value(const Matrix& a, const Matrix& b, int permutations, RandomStream& rng) {
  const Matrix d = pooled_distances(a, b);
  auto labels = initial_labels(a.rows(), b.rows());
  const double observed = split_energy(d, labels);
  int at_least = 0;
  for (int p = 0; p < permutations; ++p) {
    std::shuffle(labels.begin(), labels.end(), rng.engine());
    at_least += split_energy(d, labels) >= observed;
  }
  return (1.0 + at_least) / (1.0 + permutations);
}

FidelityReport gan_fidelity(const gan::Generator& g, const Encoder& encoder, const channel::RealChannel& ch,
                            std::span<const FidelityCondition> conditions, std::size_t samples,
                            std::uint64_t seed) {
  const FakeSampler sampler = [&](const ConditionBatch& cb, RandomStream& rng) {
    const Matrix z = gan::sample_noise(cb.x.rows(), g.z_dim(), rng);
    return g.generate(z, gan::Conditioning{cb.x, cb.pilot});
  };
  return fidelity_impl(encoder, ch, conditions, samples, seed, sampler);
}

FidelityReport channel_self_fidelity(const Encoder& encoder, const channel::RealChannel& ch,
                                     std::span<const FidelityCondition> conditions, std::size_t samples,
                                     std::uint64_t seed) {
  const FakeSampler sampler = [&](const ConditionBatch& cb, RandomStream& rng) {
    return real_samples(ch, cb, rng);
  };
  return fidelity_impl(encoder, ch, conditions, samples, seed, sampler);
}

std::string fidelity_csv(const FidelityReport& report) {
  std::ostringstream o;
  o << "condition,message_index,h_re,h_im,dim,target_mean,real_mean,fake_mean,real_var,fake_var,"
       "fake_var_ratio,fake_mean_error,energy_distance,p_value\n"
    << std::setprecision(10);
  for (std::size_t ci = 0; ci < report.conditions.size(); ++ci) {
    const auto& c = report.conditions[ci];
    for (std::size_t d = 0; d < c.fake_mean.size(); ++d) {
      o << ci << ',' << c.condition.message << ',';
      if (c.condition.h) {
        o << c.condition.h->real() << ',' << c.condition.h->imag();
      } else {
        o << ',';
      }
      o << ',' << d << ',' << c.target_mean[d] << ',' << c.real_mean[d] << ',' << c.fake_mean[d] << ','
        << c.real_cov(d, d) << ',' << c.fake_cov(d, d) << ',' << c.fake_var_ratio[d] << ',' << c.fake_mean_error
        << ',' << c.energy_distance << ',' << c.p_value << '\n';
    }
  }
  return o.str();
}

std::string constellation_csv(const Encoder& encoder) {
  std::vector<int> all(static_cast<std::size_t>(encoder.alphabet_size()));
  std::iota(all.begin(), all.end(), 0);
  const Matrix x = encoder.encode(all);
  std::ostringstream o;
  o << "message_index,use_index,re,im\n" << std::setprecision(17);
  for (std::size_t m = 0; m < x.rows(); ++m)
    for (std::size_t u = 0; u < x.cols() / 2; ++u)
      o << m << ',' << u << ',' << x(m, 2 * u) << ',' << x(m, 2 * u + 1) << '\n';
  return o.str();
}

void constellation_dump(const Encoder& encoder, const std::filesystem::path& path) {
  write_text_atomic(path, constellation_csv(encoder));
}

std::string gan_scatter_csv(const gan::Generator& g, const Encoder& encoder, const channel::RealChannel& ch,
                            std::span<const FidelityCondition> conditions, std::size_t samples,
                            std::uint64_t seed) {
  std::ostringstream o;
  o << "source,condition,message_index,sample,use_index,re,im,h_re,h_im,pilot_re,pilot_im\n"
    << std::setprecision(17);
  for (std::size_t ci = 0; ci < conditions.size(); ++ci) {
    auto real_rng = RandomStream::derive(seed, "scatter.real", ci);
    auto fake_rng = RandomStream::derive(seed, "scatter.fake", ci);
    const auto cb = condition_batch(encoder, ch, conditions[ci], samples);
    const Matrix real = real_samples(ch, cb, real_rng);
    const Matrix z = gan::sample_noise(samples, g.z_dim(), fake_rng);
    const Matrix fake = g.generate(z, gan::Conditioning{cb.x, cb.pilot});
    for (const auto& [name, data] : {std::pair<const char*, const Matrix*>{"real", &real}, {"fake", &fake}}) {
      for (std::size_t s = 0; s < samples; ++s) {
        for (std::size_t u = 0; u < data->cols() / 2; ++u) {
          o << name << ',' << ci << ',' << conditions[ci].message << ',' << s << ',' << u << ',' << (*data)(s, 2 * u)
            << ',' << (*data)(s, 2 * u + 1) << ',';
          if (conditions[ci].h) {
            o << conditions[ci].h->real() << ',' << conditions[ci].h->imag() << ',' << cb.pilot(s, 0) << ','
              << cb.pilot(s, 1);
          } else {
            o << ",,,";
          }
          o << '\n';
        }
      }
    }
  }
  return o.str();
}

void gan_scatter_dump(const gan::Generator& g, const Encoder& encoder, const channel::RealChannel& ch,
                      std::span<const FidelityCondition> conditions, std::size_t samples, std::uint64_t seed,
                      const std::filesystem::path& path) {
  write_text_atomic(path, gan_scatter_csv(g, encoder, ch, conditions, samples, seed));
}

}  // namespace e2e::eval
