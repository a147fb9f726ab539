// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only if all pass.
//
//   acceptance [--artifacts DIR] [--only 1,2,...]
//
// Trained checkpoints, GAN fits and BLER CSVs are left under DIR for inspection
// and for the trained-artifact tests.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "e2e/baseline.hpp"
#include "e2e/eval.hpp"
#include "e2e/io.hpp"
#include "e2e/train.hpp"
#include "support/netcheck.hpp"

using namespace e2e;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kGradTolerance = 1e-4;
constexpr double kGradSeconds = 60.0;
constexpr double kTrainSeconds = 15 * 60.0;
constexpr double kAwgnMarginDb = 1.0;
constexpr std::uint64_t kMinErrors = 200;
constexpr double kQamMeanTolerance = 0.1;
constexpr double kVarRatioLow = 0.8;
constexpr double kVarRatioHigh = 1.25;
constexpr std::size_t kFidelitySamples = 10'000;
constexpr double kFadingMeanTolerance = 0.15;
constexpr double kRayleighMarginDb = 2.0;
constexpr int kMldBlocks = 10'000;
constexpr double kMldSeconds = 5.0;
constexpr double kChannelRelTolerance = 0.02;
constexpr double kChannelSeconds = 30.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream o;
  o << std::setprecision(precision) << v;
  return o.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

class Artifacts {
 public:
  explicit Artifacts(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }
  // A fresh (emptied) subdirectory.
  [[nodiscard]] fs::path fresh(const std::string& name) const {
    fs::remove_all(root_ / name);
    fs::create_directories(root_ / name);
    return root_ / name;
  }
  [[nodiscard]] fs::path file(const std::string& name) const { return root_ / name; }

 private:
  fs::path root_;
};

// ---- 1: gradients ----

Matrix random_matrix(std::size_t rows, std::size_t cols, RandomStream& rng) {
  Matrix m(rows, cols);
  for (auto& v : m.flat()) v = rng.gaussian();
  return m;
}

// Loss-only evaluations for the finite differences, written without the library's
// loss functions.
double mean_bce(const Matrix& logits, double target) {
  double s = 0.0;
  for (double z : logits.flat()) s += std::max(z, 0.0) - z * target + std::log1p(std::exp(-std::abs(z)));
  return s / static_cast<double>(logits.rows());
}

double mean_cross_entropy(const Matrix& logits, std::span<const int> labels) {
  double s = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    const double top = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - top);
    s += top + std::log(sum) - row[static_cast<std::size_t>(labels[r])];
  }
  return s / static_cast<double>(logits.rows());
}

double worst_network_error(const train::TrainConfig& cfg, std::uint64_t seed) {
  auto sys = train::make_system(cfg);
  RandomStream rng(seed);
  const std::size_t batch = 3;
  std::vector<int> msgs(batch);
  for (auto& m : msgs) m = rng.uniform_int(cfg.alphabet());
  const auto x_dim = 2 * static_cast<std::size_t>(cfg.n);
  const auto p_dim = 2 * cfg.pilot_uses();
  const Matrix pilot = random_matrix(batch, p_dim, rng);
  double worst = 0.0;

  {  // transmitter, through the power normalization
    const Matrix w = random_matrix(batch, x_dim, rng);
    const auto grads = sys.tx.backward(sys.tx.forward(msgs), w);
    auto loss = [&] { return testing::weighted_sum(sys.tx.encode(msgs), w); };
    worst = std::max(worst, testing::check_net_gradient(sys.tx.net(), grads, loss).worst_relative_error);
  }
  {  // receiver, cross-entropy
    const Matrix y = random_matrix(batch, x_dim, rng);
    const auto input = sys.rx.input(y, pilot);
    const auto fwd = nn::forward(sys.rx.net(), input);
    const auto ce = nn::softmax_cross_entropy(fwd.output, msgs);
    const auto grads = nn::backward(sys.rx.net(), fwd.tape, ce.grad).grads;
    auto loss = [&] { return mean_cross_entropy(sys.rx.logits(y, pilot), msgs); };
    worst = std::max(worst, testing::check_net_gradient(sys.rx.net(), grads, loss).worst_relative_error);
  }
  const gan::Conditioning m{sys.tx.encode(msgs), pilot};
  const Matrix z = gan::sample_noise(batch, sys.g.z_dim(), rng);
  {  // generator, through the frozen discriminator
    const auto r = gan::g_loss(sys.g, sys.d, z, m);
    auto loss = [&] { return mean_bce(sys.d.discriminate(sys.g.generate(z, m), m), 1.0); };
    worst = std::max(worst, testing::check_net_gradient(sys.g.net(), r.grads, loss).worst_relative_error);
  }
  {  // discriminator
    const Matrix real = random_matrix(batch, x_dim, rng);
    const Matrix fake = sys.g.generate(z, m);
    const auto r = gan::d_loss(sys.d, real, fake, m);
    auto loss = [&] {
      return mean_bce(sys.d.discriminate(real, m), 1.0) + mean_bce(sys.d.discriminate(fake, m), 0.0);
    };
    worst = std::max(worst, testing::check_net_gradient(sys.d.net(), r.grads, loss).worst_relative_error);
  }
  {  // composite: cross-entropy -> receiver -> generator -> transmitter
    const auto r = train::surrogate_loss(sys.tx, sys.rx, sys.g, msgs, z, pilot);
    auto loss = [&] {
      const Matrix y = sys.g.generate(z, {sys.tx.encode(msgs), pilot});
      return mean_cross_entropy(sys.rx.logits(y, pilot), msgs);
    };
    worst = std::max(worst, testing::check_net_gradient(sys.tx.net(), r.grads, loss).worst_relative_error);
  }
  return worst;
}

Outcome gradients() {
  const auto start = std::chrono::steady_clock::now();
  train::TrainConfig awgn;
  train::TrainConfig fading;
  fading.channel = channel::ChannelKind::Rayleigh;
  const double worst = std::max(worst_network_error(awgn, 1), worst_network_error(fading, 2));
  const double secs = seconds_since(start);
  return {worst < kGradTolerance && secs < kGradSeconds,
          "worst relative error " + fmt(worst, 3) + " over tx, rx, g, d and the composite path, AWGN and Rayleigh, " +
              fmt(secs, 3) + " s"};
}

// ---- 2 and 8: AWGN end to end ----

eval::SweepSpec awgn_sweep(std::vector<double> snr) {
  eval::SweepSpec s;
  s.snr_db = std::move(snr);
  s.min_trials = 100'000;
  s.max_trials = 50'000'000;
  s.target_errors = kMinErrors;
  s.seed = 1;
  return s;
}

// A moderate fixed-budget sweep used for the reproducibility comparison.
eval::SweepSpec determinism_sweep() {
  eval::SweepSpec s;
  s.snr_db = {0, 2, 4, 6, 8};
  s.min_trials = s.max_trials = 200'000;
  s.seed = 7;
  return s;
}

struct TimedRun {
  train::TrainResult result;
  double seconds = 0.0;
};

TimedRun train_default(const train::TrainConfig& cfg, const fs::path& dir) {
  const auto start = std::chrono::steady_clock::now();
  auto result = train::train_full(cfg, {nullptr, dir});
  return {std::move(result), seconds_since(start)};
}

std::uint64_t fewest_errors(const std::vector<eval::BlerPoint>& pts) {
  std::uint64_t v = UINT64_MAX;
  for (const auto& p : pts) v = std::min(v, p.errors);
  return v;
}

Outcome awgn_end_to_end(const Artifacts& art) {
  const train::TrainConfig cfg;
  const auto dir = art.fresh("awgn_a");
  const auto run = train_default(cfg, dir);
  const auto learned =
      eval::bler_sweep_learned(run.result.system.tx, run.result.system.rx, cfg.channel, awgn_sweep({2, 4, 6, 8}));
  const auto hamming = eval::bler_sweep_baseline(eval::BaselineSystem::Hamming74MldAwgn, awgn_sweep({1, 3, 5, 7}));
  eval::write_bler_csv(art.file("awgn_learned.csv"), learned);
  eval::write_bler_csv(art.file("awgn_hamming.csv"), hamming);
  eval::write_bler_csv(art.file("awgn_a_determinism.csv"),
                       eval::bler_sweep_learned(run.result.system.tx, run.result.system.rx, cfg.channel,
                                                determinism_sweep()));

  const auto checks = eval::horizontal_gap_check(learned, hamming, kAwgnMarginDb);
  bool pass = run.seconds <= kTrainSeconds && fewest_errors(learned) >= kMinErrors &&
              fewest_errors(hamming) >= kMinErrors;
  std::string detail = "train " + fmt(run.seconds, 4) + " s;";
  for (const auto& c : checks) {
    pass = pass && c.pass;
    detail += " " + fmt(c.ebn0_db) + " dB " + fmt(c.bler, 3) + (c.pass ? " <= " : " > ") + fmt(c.reference_bler, 3);
  }
  detail += "; fewest errors " + std::to_string(std::min(fewest_errors(learned), fewest_errors(hamming)));
  return {pass, detail};
}

Outcome determinism(const Artifacts& art) {
  const train::TrainConfig cfg;
  const auto first = art.file("awgn_a");
  if (!fs::exists(first / "tx.json") || !fs::exists(art.file("awgn_a_determinism.csv"))) {
    const auto run = train_default(cfg, art.fresh("awgn_a"));
    eval::write_bler_csv(art.file("awgn_a_determinism.csv"),
                         eval::bler_sweep_learned(run.result.system.tx, run.result.system.rx, cfg.channel,
                                                  determinism_sweep()));
  }
  const auto second = art.fresh("awgn_b");
  const auto run = train_default(cfg, second);
  eval::write_bler_csv(art.file("awgn_b_determinism.csv"),
                       eval::bler_sweep_learned(run.result.system.tx, run.result.system.rx, cfg.channel,
                                                determinism_sweep()));
  std::vector<std::string> differing;
  for (const char* f : {"tx.json", "rx.json", "g.json", "d.json", "config.json", "train_log.csv"}) {
    if (read_text(first / f) != read_text(second / f)) differing.emplace_back(f);
  }
  if (read_text(art.file("awgn_a_determinism.csv")) != read_text(art.file("awgn_b_determinism.csv"))) {
    differing.emplace_back("BLER CSV");
  }
  std::string detail = differing.empty() ? "6 checkpoint files and the BLER CSV are byte-identical" : "differ:";
  for (const auto& d : differing) detail += " " + d;
  return {differing.empty(), detail};
}

// ---- 3 and 4: GAN fits on 16-QAM ----

train::TrainConfig qam_config(channel::ChannelKind kind) {
  train::TrainConfig cfg;
  cfg.k = 4;
  cfg.n = 1;
  cfg.channel = kind;
  cfg.ebn0_db_train = kind == channel::ChannelKind::Rayleigh ? 10.0 : 4.0;
  return cfg;
}

eval::FidelityReport fit_and_measure(const train::TrainConfig& cfg, const fs::path& dir) {
  const baseline::Qam16Encoder encoder;
  const auto fit = train::fit_channel_gan(encoder, cfg, {});
  train::save_gan(dir, fit.g, fit.d, cfg, &fit.log);
  const auto ch = cfg.real_channel();
  const auto conditions = eval::default_conditions(encoder, ch.kind());
  auto report = eval::gan_fidelity(fit.g, encoder, ch, conditions, kFidelitySamples, 11);
  write_text_atomic(dir / "fidelity.csv", eval::fidelity_csv(report));
  return report;
}

Outcome awgn_gan_fidelity(const Artifacts& art) {
  const auto r = fit_and_measure(qam_config(channel::ChannelKind::AWGN), art.fresh("qam_awgn_gan"));
  const bool pass = r.max_fake_mean_error() < kQamMeanTolerance && r.min_var_ratio() >= kVarRatioLow &&
                    r.max_var_ratio() <= kVarRatioHigh;
  return {pass, "16 conditions, max mean error " + fmt(r.max_fake_mean_error(), 3) + ", variance ratio [" +
                    fmt(r.min_var_ratio(), 3) + ", " + fmt(r.max_var_ratio(), 3) + "]"};
}

Outcome rayleigh_conditioning(const Artifacts& art) {
  const auto r = fit_and_measure(qam_config(channel::ChannelKind::Rayleigh), art.fresh("qam_rayleigh_gan"));
  return {r.max_fake_mean_error() < kFadingMeanTolerance,
          "48 conditions (h in {1, j, 0.5-0.5j}), max |mean - h x| " + fmt(r.max_fake_mean_error(), 3)};
}

// ---- 5: Rayleigh end to end ----

Outcome rayleigh_end_to_end(const Artifacts& art) {
  train::TrainConfig cfg;
  cfg.channel = channel::ChannelKind::Rayleigh;
  cfg.ebn0_db_train = 10.0;
  const auto run = train_default(cfg, art.fresh("rayleigh"));
  eval::SweepSpec spec;
  spec.min_trials = 100'000;
  spec.max_trials = 2'000'000;
  spec.target_errors = kMinErrors;
  for (int db = 0; db <= 20; db += 2) spec.snr_db.push_back(db);
  const auto learned = eval::bler_sweep_learned(run.result.system.tx, run.result.system.rx, cfg.channel, spec);
  spec.snr_db.insert(spec.snr_db.begin(), -2.0);
  const auto ls = eval::bler_sweep_baseline(eval::BaselineSystem::Qam16RayleighLs, spec);
  eval::write_bler_csv(art.file("rayleigh_learned.csv"), learned);
  eval::write_bler_csv(art.file("rayleigh_ls.csv"), ls);

  const auto checks = eval::horizontal_gap_check(learned, ls, kRayleighMarginDb);
  bool pass = true;
  double worst_ratio = 0.0;
  for (const auto& c : checks) {
    pass = pass && c.pass;
    worst_ratio = std::max(worst_ratio, c.bler / c.reference_bler);
  }
  return {pass, "train " + fmt(run.seconds, 4) + " s; 0-20 dB, worst BLER / LS(x-2 dB) ratio " + fmt(worst_ratio, 3) +
                    " (learned at 20 dB " + fmt(learned.back().bler, 3) + ", LS " + fmt(ls.back().bler, 3) + ")"};
}

// ---- 6: MLD vs exhaustive search ----

Outcome mld_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  const auto& book = baseline::hamming74_codebook();
  RandomStream rng(2024);
  int mismatches = 0;
  for (int b = 0; b < kMldBlocks; ++b) {
    const int msg = rng.uniform_int(16);
    const double sigma = 0.3 + 0.9 * rng.uniform();
    std::array<double, 7> y{};
    const auto& sent = book[static_cast<std::size_t>(msg)];
    for (std::size_t i = 0; i < 7; ++i) y[i] = (sent[i] ? -1.0 : 1.0) + sigma * rng.gaussian();

    int nearest = 0;
    double best = INFINITY;
    for (int c = 0; c < 16; ++c) {
      double d = 0.0;
      for (std::size_t i = 0; i < 7; ++i) {
        const double s = book[static_cast<std::size_t>(c)][i] ? -1.0 : 1.0;
        d += (y[i] - s) * (y[i] - s);
      }
      if (d < best) {
        best = d;
        nearest = c;
      }
    }
    mismatches += baseline::index_from_bits(baseline::hamming74_mld_decode(y)) != nearest;
  }
  const double secs = seconds_since(start);
  return {mismatches == 0 && secs < kMldSeconds,
          std::to_string(mismatches) + " mismatches on " + std::to_string(kMldBlocks) + " blocks, " +
              fmt(secs, 3) + " s"};
}

// ---- 7: channel statistics ----

Outcome channel_statistics() {
  const auto start = std::chrono::steady_clock::now();
  constexpr int kSamples = 1'000'000;
  RandomStream rng(77);

  double power = 0.0;
  for (int i = 0; i < kSamples; ++i) power += std::norm(channel::rayleigh_sample(rng));
  power /= kSamples;

  const double sigma = 0.7;
  std::vector<double> w(kSamples, 0.0);
  channel::awgn_apply_inplace(w, sigma, rng);
  double var = 0.0;
  for (double v : w) var += v * v;
  var /= kSamples;
  const double var_ratio = var / (sigma * sigma);

  // LS estimate from one unit pilot: h_hat - h is the pilot noise, mean 0, sd sigma_p per part.
  constexpr int kBlocks = 200'000;
  const double sigma_p = 0.5;
  std::complex<double> bias{0.0, 0.0};
  for (int i = 0; i < kBlocks; ++i) {
    const channel::ChannelRealization r{channel::rayleigh_sample(rng), sigma_p};
    bias += baseline::ls_estimate(channel::pilot_receive(r, 1, rng)) - r.h;
  }
  bias /= static_cast<double>(kBlocks);
  const double bias_limit = 4.0 * sigma_p / std::sqrt(static_cast<double>(kBlocks));

  const double secs = seconds_since(start);
  const bool pass = std::abs(power - 1.0) <= kChannelRelTolerance &&
                    std::abs(var_ratio - 1.0) <= kChannelRelTolerance &&
                    std::abs(bias.real()) < bias_limit && std::abs(bias.imag()) < bias_limit && secs < kChannelSeconds;
  return {pass, "E|h|^2 " + fmt(power, 5) + ", noise variance ratio " + fmt(var_ratio, 5) + ", LS bias (" +
                    fmt(bias.real(), 2) + ", " + fmt(bias.imag(), 2) + ") limit " + fmt(bias_limit, 2) + ", " +
                    fmt(secs, 3) + " s"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-8", "acceptance"};
  fs::path artifacts = "acceptance_artifacts";
  std::vector<int> only;
  app.add_option("--artifacts", artifacts, "Directory for checkpoints and CSVs");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',')->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  const Artifacts art(artifacts);
  struct Criterion {
    int id;
    std::string name;
    std::function<Outcome()> run;
  };
  // Fast checks first; criterion 8 reuses the criterion 2 run.
  const std::vector<Criterion> criteria{
      {6, "Hamming MLD equals exhaustive search", mld_equivalence},
      {7, "channel statistics", channel_statistics},
      {1, "finite-difference gradients", gradients},
      {3, "AWGN GAN fidelity on 16-QAM", [&] { return awgn_gan_fidelity(art); }},
      {4, "Rayleigh GAN conditioning", [&] { return rayleigh_conditioning(art); }},
      {2, "AWGN end to end within 1 dB of Hamming MLD", [&] { return awgn_end_to_end(art); }},
      {8, "determinism", [&] { return determinism(art); }},
      {5, "Rayleigh end to end within 2 dB of 16-QAM LS", [&] { return rayleigh_end_to_end(art); }},
  };

  const std::set<int> selected(only.begin(), only.end());
  std::vector<std::pair<int, std::string>> lines;
  bool all = true;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.contains(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::ostringstream line;
    line << "criterion " << c.id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << c.name << " -- " << o.detail << " ["
         << fmt(seconds_since(start), 4) << " s]";
    std::cout << line.str() << std::endl;
    lines.emplace_back(c.id, line.str());
    all = all && o.pass;
  }

  std::sort(lines.begin(), lines.end());
  std::cout << "\nsummary\n";
  for (const auto& [id, text] : lines) std::cout << text << '\n';
  return all ? 0 : 1;
}
