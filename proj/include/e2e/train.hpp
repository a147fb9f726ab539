#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "e2e/channel.hpp"
#include "e2e/gan.hpp"
#include "e2e/nn.hpp"
#include "e2e/transceiver.hpp"

namespace e2e::train {

struct TrainConfig {
  int k = 4;
  int n = 7;
  int n_pilot = 1;
  channel::ChannelKind channel = channel::ChannelKind::AWGN;
  double ebn0_db_train = 4.0;
  int batch_size = 320;
  double lr_transceiver = 1e-3;
  double lr_gan = 1e-4;   // generator
  double lr_disc = 1e-3;  // discriminator
  double gan_beta1 = 0.5;  // Adam beta1 for both GAN networks
  int outer_iterations = 300;
  int gan_steps = 20;
  int rx_steps = 10;
  int tx_steps = 10;
  int d_steps_per_g = 5;
  std::uint64_t seed = 1;
  int z_dim = 16;
  std::vector<std::size_t> tx_hidden{32, 32};
  std::vector<std::size_t> rx_hidden{32, 32};
  std::vector<std::size_t> g_hidden{128, 128, 128};
  std::vector<std::size_t> d_hidden{32, 32, 32};
  nn::Activation hidden_activation = nn::Activation::ReLU;
  double real_label = 1.0;
  int d_reset_patience = 200;
  // From outer iteration decay_after + 1 on, every learning rate is multiplied by decay_factor.
  int decay_after = 200;
  double decay_factor = 0.1;

  [[nodiscard]] int alphabet() const noexcept { return 1 << k; }
  [[nodiscard]] std::size_t pilot_uses() const noexcept {
    return channel == channel::ChannelKind::Rayleigh ? static_cast<std::size_t>(n_pilot) : 0;
  }
  [[nodiscard]] channel::SnrSpec snr_train() const noexcept { return {ebn0_db_train, k, n}; }
  [[nodiscard]] channel::RealChannel real_channel() const;
  [[nodiscard]] nn::AdamConfig generator_adam() const;
  [[nodiscard]] nn::AdamConfig discriminator_adam() const;

  // Throws ConfigError naming the offending key.
  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// The four trained components.
struct System {
  Transmitter tx;
  Receiver rx;
  gan::Generator g;
  gan::Discriminator d;
};

// Seeded initialization; each network draws from its own named stream.
System make_system(const TrainConfig& cfg);

struct Batch {
  std::vector<int> messages;
  std::vector<channel::ChannelRealization> realizations;  // empty on AWGN
};

// Uniform messages; on Rayleigh a fresh h per block.
Batch sample_batch(const TrainConfig& cfg, RandomStream& rng);

// Received pilots for the given realizations (batch x 2*n_pilot).
Matrix receive_pilots(std::span<const channel::ChannelRealization> realizations, std::size_t n_pilot,
                      RandomStream& rng);

// One Adam step on the receiver using real-channel outputs.
double train_receiver_step(Receiver& rx, const Encoder& tx, const channel::RealChannel& ch,
                           const TrainConfig& cfg, nn::AdamState& opt, RandomStream& rng);

// Cross-entropy of the receiver on surrogate outputs and its gradient w.r.t.
// the transmitter parameters, for fixed noise z and pilots.
struct SurrogateLoss {
  double loss = 0.0;
  nn::Gradients grads;
};
SurrogateLoss surrogate_loss(const Transmitter& tx, const Receiver& rx, const gan::Generator& g,
                             std::span<const int> messages, const Matrix& z, const Matrix& pilot);

struct TransmitterStep {
  double loss = 0.0;
  double grad_norm = 0.0;
};

// One Adam step on the transmitter through the frozen generator and receiver.
TransmitterStep train_transmitter_step(Transmitter& tx, const Receiver& rx, const gan::Generator& g,
                                       const TrainConfig& cfg, nn::AdamState& opt,
                                       RandomStream& rng);

struct GanStep {
  double d_loss = 0.0;
  double g_loss = 0.0;
  double d_accuracy = 0.0;
};

// d_steps_per_g discriminator updates followed by one generator update, real
// and fake samples sharing messages and conditioning.
GanStep train_gan_step(gan::Generator& g, gan::Discriminator& d, const Encoder& tx,
                       const channel::RealChannel& ch, const TrainConfig& cfg, nn::AdamState& g_opt,
                       nn::AdamState& d_opt, RandomStream& rng);

struct LogRecord {
  std::uint64_t step = 0;
  int iteration = 0;
  std::string phase;
  double loss = 0.0;
  std::optional<double> d_accuracy;
};

class TrainLog {
 public:
  void append(int iteration, std::string phase, double loss,
              std::optional<double> d_accuracy = std::nullopt);
  [[nodiscard]] const std::vector<LogRecord>& records() const noexcept { return records_; }
  // step,iteration,phase,loss,d_accuracy
  [[nodiscard]] std::string to_csv() const;

 private:
  std::vector<LogRecord> records_;
};

struct TrainResult {
  System system;
  TrainLog log;
  // Mean real-channel receiver loss over the last receiver phase.
  double final_loss = 0.0;
};

struct TrainOptions {
  std::ostream* progress = nullptr;  // receives `iter=<i> phase=<p> loss=<v>` lines
  std::optional<std::filesystem::path> checkpoint_dir;  // written on success and on abort
};

// Warm-up GAN phase, then outer_iterations x {GAN, receiver, transmitter}.
TrainResult train_full(const TrainConfig& cfg, const TrainOptions& options = {});

// GAN fitted to a fixed encoder (e.g. 16-QAM) over the configured real
// channel, without any transceiver training. Both learning rates are
// multiplied by `decay_factor` after `decay_after` steps.
struct GanFitOptions {
  int steps = 4000;
  int decay_after = 2000;
  double decay_factor = 0.1;
  std::ostream* progress = nullptr;  // `iter=<i> phase=gan loss=<v>` every 100 steps
};
struct GanFitResult {
  gan::Generator g;
  gan::Discriminator d;
  TrainLog log;
};
GanFitResult fit_channel_gan(const Encoder& encoder, const TrainConfig& cfg, const GanFitOptions& options);

// Checkpoint directory: tx.json, rx.json, g.json, d.json, config.json, train_log.csv.
void save_system(const std::filesystem::path& dir, const System& system, const TrainConfig& cfg,
                 const TrainLog* log = nullptr);
struct LoadedSystem {
  System system;
  TrainConfig config;
};
LoadedSystem load_system(const std::filesystem::path& dir);

// GAN-only directory written by fit_channel_gan: g.json, d.json, config.json,
// train_log.csv. load_gan also reads the g/d pair of a full training directory.
void save_gan(const std::filesystem::path& dir, const gan::Generator& g, const gan::Discriminator& d,
              const TrainConfig& cfg, const TrainLog* log = nullptr);
struct LoadedGan {
  gan::Generator g;
  gan::Discriminator d;
  TrainConfig config;
  std::optional<Transmitter> tx;  // present when the directory holds tx.json
};
LoadedGan load_gan(const std::filesystem::path& dir);

}  // namespace e2e::train
