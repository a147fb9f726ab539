#include "e2e/train.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "e2e/config.hpp"
#include "e2e/error.hpp"
#include "e2e/io.hpp"

namespace e2e::train {

namespace fs = std::filesystem;
using channel::ChannelKind;
using channel::ChannelRealization;

channel::RealChannel TrainConfig::real_channel() const {
  return channel::RealChannel(channel, channel::noise_std_from_snr(snr_train()),
                              static_cast<std::size_t>(n_pilot));
}

nn::AdamConfig TrainConfig::generator_adam() const {
  nn::AdamConfig a{lr_gan};
  a.beta1 = gan_beta1;
  return a;
}

nn::AdamConfig TrainConfig::discriminator_adam() const {
  nn::AdamConfig a{lr_disc};
  a.beta1 = gan_beta1;
  return a;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw ConfigError("config." + key + ": " + why);
  };
  if (k < 1 || k > 12) fail("k", "must be in [1, 12]");
  if (n < 1) fail("n", "must be >= 1");
  if (n_pilot < 1) fail("n_pilot", "must be >= 1");
  if (!std::isfinite(ebn0_db_train)) fail("ebn0_db_train", "must be finite");
  if (batch_size < 1) fail("batch_size", "must be >= 1");
  if (!(lr_transceiver > 0.0)) fail("lr_transceiver", "must be > 0");
  if (!(lr_gan > 0.0)) fail("lr_gan", "must be > 0");
  if (!(lr_disc > 0.0)) fail("lr_disc", "must be > 0");
  if (!(gan_beta1 >= 0.0 && gan_beta1 < 1.0)) fail("gan_beta1", "must be in [0, 1)");
  if (outer_iterations < 0) fail("outer_iterations", "must be >= 0");
  if (gan_steps < 0) fail("gan_steps", "must be >= 0");
  if (rx_steps < 0) fail("rx_steps", "must be >= 0");
  if (tx_steps < 0) fail("tx_steps", "must be >= 0");
  if (d_steps_per_g < 1) fail("d_steps_per_g", "must be >= 1");
  if (z_dim < 1) fail("z_dim", "must be >= 1");
  if (!(real_label > 0.0 && real_label <= 1.0)) fail("real_label", "must be in (0, 1]");
  if (d_reset_patience < 1) fail("d_reset_patience", "must be >= 1");
  if (decay_after < 0) fail("decay_after", "must be >= 0");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) fail("decay_factor", "must be in (0, 1]");
  for (const auto* h : {&tx_hidden, &rx_hidden, &g_hidden, &d_hidden})
    for (auto s : *h)
      if (s == 0) fail("hidden sizes", "layer widths must be >= 1");
}

System make_system(const TrainConfig& cfg) {
  cfg.validate();
  const auto uses = static_cast<std::size_t>(cfg.n);
  const auto pilots = cfg.pilot_uses();
  const auto cond_dim = 2 * (uses + pilots);
  auto tx_rng = RandomStream::derive(cfg.seed, "init.tx");
  auto rx_rng = RandomStream::derive(cfg.seed, "init.rx");
  auto g_rng = RandomStream::derive(cfg.seed, "init.g");
  auto d_rng = RandomStream::derive(cfg.seed, "init.d");
  return System{
      Transmitter::create(cfg.k, uses, cfg.tx_hidden, cfg.hidden_activation, tx_rng),
      Receiver::create(cfg.k, uses, pilots, cfg.rx_hidden, cfg.hidden_activation, rx_rng),
      gan::Generator::create(static_cast<std::size_t>(cfg.z_dim), cond_dim, 2 * uses, cfg.g_hidden,
                             cfg.hidden_activation, g_rng),
      gan::Discriminator::create(2 * uses, cond_dim, cfg.d_hidden, cfg.hidden_activation, d_rng)};
}

Batch sample_batch(const TrainConfig& cfg, RandomStream& rng) {
  Batch b;
  b.messages.resize(static_cast<std::size_t>(cfg.batch_size));
  for (auto& m : b.messages) m = rng.uniform_int(cfg.alphabet());
  if (cfg.channel == ChannelKind::Rayleigh) {
    const double noise_std = channel::noise_std_from_snr(cfg.snr_train());
    b.realizations.resize(b.messages.size());
    for (auto& r : b.realizations) r = {channel::rayleigh_sample(rng), noise_std};
  }
  return b;
}

Matrix receive_pilots(std::span<const ChannelRealization> realizations, std::size_t n_pilot,
                      RandomStream& rng) {
  Matrix pilots(realizations.size(), 2 * n_pilot);
  for (std::size_t b = 0; b < realizations.size(); ++b) {
    const auto yp = channel::pilot_receive(realizations[b], n_pilot, rng);
    std::copy(yp.samples.begin(), yp.samples.end(), pilots.row(b).begin());
  }
  return pilots;
}

namespace {

channel::ChannelOutput through_real_channel(const channel::RealChannel& ch, const Matrix& x,
                                            const Batch& batch, RandomStream& rng) {
  if (ch.kind() == ChannelKind::Rayleigh) return ch.transmit(x, batch.realizations, rng);
  return ch.transmit(x, rng);
}

void require_finite(double loss, const char* phase) {
  if (!std::isfinite(loss)) throw NumericError(std::string(phase) + ": non-finite loss");
}

}  // namespace

double train_receiver_step(Receiver& rx, const Encoder& tx, const channel::RealChannel& ch,
                           const TrainConfig& cfg, nn::AdamState& opt, RandomStream& rng) {
  const auto batch = sample_batch(cfg, rng);
  const Matrix x = tx.encode(batch.messages);
  const auto out = through_real_channel(ch, x, batch, rng);
  auto pass = nn::forward(rx.net(), rx.input(out.y, out.pilot));
  const auto ce = nn::softmax_cross_entropy(pass.output, batch.messages);
  require_finite(ce.loss, "receiver step");
  const auto back = nn::backward(rx.net(), pass.tape, ce.grad);
  nn::adam_step(rx.net(), back.grads, opt);
  return ce.loss;
}

SurrogateLoss surrogate_loss(const Transmitter& tx, const Receiver& rx, const gan::Generator& g,
                             std::span<const int> messages, const Matrix& z, const Matrix& pilot) {
  const auto tx_pass = tx.forward(messages);
  const gan::Conditioning m{tx_pass.x, pilot};
  const gan::SurrogateChannel surrogate(g);
  const auto ch_pass = surrogate.forward(z, m);
  auto rx_pass = nn::forward(rx.net(), rx.input(ch_pass.y, pilot));
  const auto ce = nn::softmax_cross_entropy(rx_pass.output, messages);

  const auto rx_back = nn::backward(rx.net(), rx_pass.tape, ce.grad);
  const Matrix grad_y = column_block(rx_back.input_grad, 0, ch_pass.y.cols());
  const Matrix grad_x = surrogate.input_gradient(ch_pass, grad_y);
  return {ce.loss, tx.backward(tx_pass, grad_x)};
}

TransmitterStep train_transmitter_step(Transmitter& tx, const Receiver& rx, const gan::Generator& g,
                                       const TrainConfig& cfg, nn::AdamState& opt,
                                       RandomStream& rng) {
  const auto batch = sample_batch(cfg, rng);
  // The conditioning pilot is a real pilot transmission over the sampled h.
  const Matrix pilot = cfg.channel == ChannelKind::Rayleigh
                           ? receive_pilots(batch.realizations, cfg.pilot_uses(), rng)
                           : Matrix(batch.messages.size(), 0);
  const Matrix z = gan::sample_noise(batch.messages.size(), g.z_dim(), rng);
  const auto result = surrogate_loss(tx, rx, g, batch.messages, z, pilot);
  require_finite(result.loss, "transmitter step");
  nn::adam_step(tx.net(), result.grads, opt);
  return {result.loss, result.grads.norm()};
}

GanStep train_gan_step(gan::Generator& g, gan::Discriminator& d, const Encoder& tx,
                       const channel::RealChannel& ch, const TrainConfig& cfg, nn::AdamState& g_opt,
                       nn::AdamState& d_opt, RandomStream& rng) {
  const auto batch = sample_batch(cfg, rng);
  const Matrix x = tx.encode(batch.messages);
  const auto real = through_real_channel(ch, x, batch, rng);
  const gan::Conditioning m{x, real.pilot};

  GanStep step;
  for (int r = 0; r < cfg.d_steps_per_g; ++r) {
    const Matrix z = gan::sample_noise(x.rows(), g.z_dim(), rng);
    const Matrix fake = g.generate(z, m);
    const auto dl = gan::d_loss(d, real.y, fake, m, cfg.real_label);
    nn::adam_step(d.net(), dl.grads, d_opt);
    step.d_loss = dl.loss;
    step.d_accuracy = dl.accuracy;
  }
  const Matrix z = gan::sample_noise(x.rows(), g.z_dim(), rng);
  const auto gl = gan::g_loss(g, d, z, m);
  nn::adam_step(g.net(), gl.grads, g_opt);
  step.g_loss = gl.loss;
  return step;
}

void TrainLog::append(int iteration, std::string phase, double loss, std::optional<double> d_accuracy) {
  records_.push_back({records_.size(), iteration, std::move(phase), loss, d_accuracy});
}

std::string TrainLog::to_csv() const {
  std::ostringstream out;
  out << "step,iteration,phase,loss,d_accuracy\n" << std::setprecision(17);
  for (const auto& r : records_) {
    out << r.step << ',' << r.iteration << ',' << r.phase << ',' << r.loss << ',';
    if (r.d_accuracy) out << *r.d_accuracy;
    out << '\n';
  }
  return out.str();
}

namespace {

class Trainer {
 public:
  explicit Trainer(const TrainConfig& cfg)
      : cfg_(cfg),
        channel_(cfg.real_channel()),
        system_(make_system(cfg)),
        tx_opt_(system_.tx.net(), {cfg.lr_transceiver}),
        rx_opt_(system_.rx.net(), {cfg.lr_transceiver}),
        g_opt_(system_.g.net(), cfg.generator_adam()),
        d_opt_(system_.d.net(), cfg.discriminator_adam()),
        gan_rng_(RandomStream::derive(cfg.seed, "train.gan")),
        rx_rng_(RandomStream::derive(cfg.seed, "train.rx")),
        tx_rng_(RandomStream::derive(cfg.seed, "train.tx")) {}

  double gan_phase(int iteration) {
    double total = 0.0;
    for (int s = 0; s < cfg_.gan_steps; ++s) {
      const auto step = train_gan_step(system_.g, system_.d, system_.tx, channel_, cfg_, g_opt_, d_opt_,
                                       gan_rng_);
      log_.append(iteration, "disc", step.d_loss, step.d_accuracy);
      log_.append(iteration, "gen", step.g_loss);
      total += step.g_loss;
      // A discriminator that wins every sample for too long gets its optimizer reset.
      saturated_steps_ = step.d_accuracy >= 1.0 ? saturated_steps_ + 1 : 0;
      if (saturated_steps_ >= cfg_.d_reset_patience) {
        d_opt_.reset();
        saturated_steps_ = 0;
        log_.append(iteration, "d_reset", step.d_loss, step.d_accuracy);
      }
    }
    return cfg_.gan_steps > 0 ? total / cfg_.gan_steps : 0.0;
  }

  double rx_phase(int iteration) {
    double total = 0.0;
    for (int s = 0; s < cfg_.rx_steps; ++s) {
      const double loss = train_receiver_step(system_.rx, system_.tx, channel_, cfg_, rx_opt_, rx_rng_);
      log_.append(iteration, "rx", loss);
      total += loss;
    }
    return cfg_.rx_steps > 0 ? total / cfg_.rx_steps : 0.0;
  }

  double tx_phase(int iteration) {
    double total = 0.0;
    for (int s = 0; s < cfg_.tx_steps; ++s) {
      const auto step = train_transmitter_step(system_.tx, system_.rx, system_.g, cfg_, tx_opt_, tx_rng_);
      log_.append(iteration, "tx", step.loss);
      total += step.loss;
    }
    return cfg_.tx_steps > 0 ? total / cfg_.tx_steps : 0.0;
  }

  void decay_learning_rates() {
    tx_opt_.set_learning_rate(cfg_.lr_transceiver * cfg_.decay_factor);
    rx_opt_.set_learning_rate(cfg_.lr_transceiver * cfg_.decay_factor);
    g_opt_.set_learning_rate(cfg_.lr_gan * cfg_.decay_factor);
    d_opt_.set_learning_rate(cfg_.lr_disc * cfg_.decay_factor);
  }

  System& system() { return system_; }
  TrainLog& log() { return log_; }

 private:
  TrainConfig cfg_;
  channel::RealChannel channel_;
  System system_;
  nn::AdamState tx_opt_, rx_opt_, g_opt_, d_opt_;
  RandomStream gan_rng_, rx_rng_, tx_rng_;
  TrainLog log_;
  int saturated_steps_ = 0;
};

void report(std::ostream* out, int iteration, const char* phase, double loss) {
  if (out == nullptr) return;
  *out << "iter=" << iteration << " phase=" << phase << " loss=" << std::setprecision(6) << loss << '\n';
  out->flush();
}

}  // namespace

TrainResult train_full(const TrainConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  Trainer trainer(cfg);
  double last_rx = 0.0;
  try {
    // Warm-up: the generator must see the initial transmitter before any
    // gradient is routed through it.
    report(options.progress, 0, "gan", trainer.gan_phase(0));
    for (int it = 1; it <= cfg.outer_iterations; ++it) {
      if (it == cfg.decay_after + 1) trainer.decay_learning_rates();
      if (it > 1) report(options.progress, it, "gan", trainer.gan_phase(it));
      last_rx = trainer.rx_phase(it);
      report(options.progress, it, "rx", last_rx);
      report(options.progress, it, "tx", trainer.tx_phase(it));
    }
  } catch (...) {
    if (options.checkpoint_dir) save_system(*options.checkpoint_dir, trainer.system(), cfg, &trainer.log());
    throw;
  }
  TrainResult result{std::move(trainer.system()), std::move(trainer.log()), last_rx};
  if (options.checkpoint_dir) save_system(*options.checkpoint_dir, result.system, cfg, &result.log);
  return result;
}

GanFitResult fit_channel_gan(const Encoder& encoder, const TrainConfig& cfg, const GanFitOptions& options) {
  cfg.validate();
  if (encoder.alphabet_size() != cfg.alphabet() || encoder.uses() != static_cast<std::size_t>(cfg.n)) {
    throw ConfigError("fit_channel_gan: encoder has M = " + std::to_string(encoder.alphabet_size()) +
                      ", n = " + std::to_string(encoder.uses()) + " but the config asks for k = " +
                      std::to_string(cfg.k) + ", n = " + std::to_string(cfg.n));
  }
  if (options.steps < 0 || options.decay_after < 0 || !(options.decay_factor > 0.0)) {
    throw ConfigError("fit_channel_gan: steps and decay_after must be >= 0, decay_factor > 0");
  }
  auto system = make_system(cfg);
  const auto ch = cfg.real_channel();
  nn::AdamState g_opt(system.g.net(), cfg.generator_adam());
  nn::AdamState d_opt(system.d.net(), cfg.discriminator_adam());
  auto rng = RandomStream::derive(cfg.seed, "train.gan");
  TrainLog log;
  double window = 0.0;
  for (int s = 1; s <= options.steps; ++s) {
    if (s == options.decay_after + 1) {
      g_opt.set_learning_rate(cfg.lr_gan * options.decay_factor);
      d_opt.set_learning_rate(cfg.lr_disc * options.decay_factor);
    }
    const auto step = train_gan_step(system.g, system.d, encoder, ch, cfg, g_opt, d_opt, rng);
    log.append(s, "disc", step.d_loss, step.d_accuracy);
    log.append(s, "gen", step.g_loss);
    window += step.g_loss;
    if (s % 100 == 0) {
      report(options.progress, s, "gan", window / 100.0);
      window = 0.0;
    }
  }
  return {std::move(system.g), std::move(system.d), std::move(log)};
}

void save_system(const fs::path& dir, const System& system, const TrainConfig& cfg, const TrainLog* log) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  const auto config_json = config::to_json(cfg);
  save_checkpoint(dir / "tx.json", {"tx", cfg.seed, config_json, system.tx.net()});
  save_checkpoint(dir / "rx.json", {"rx", cfg.seed, config_json, system.rx.net()});
  save_checkpoint(dir / "g.json", {"g", cfg.seed, config_json, system.g.net()});
  save_checkpoint(dir / "d.json", {"d", cfg.seed, config_json, system.d.net()});
  write_text_atomic(dir / "config.json", config_json.dump(2) + "\n");
  if (log != nullptr) write_text_atomic(dir / "train_log.csv", log->to_csv());
}

namespace {

nn::DenseNet load_role(const fs::path& dir, const char* file, const char* role, const TrainConfig& cfg) {
  auto c = load_checkpoint(dir / file);
  if (c.role != role) throw IoError("'" + (dir / file).string() + "' holds role '" + c.role + "'");
  if (config::parse_train_config(c.config) != cfg) {
    throw ConfigError("'" + (dir / file).string() + "' was saved with a different configuration");
  }
  return std::move(c.net);
}

}  // namespace

LoadedSystem load_system(const fs::path& dir) {
  const auto cfg = config::load_config(dir / "config.json");
  const auto uses = static_cast<std::size_t>(cfg.n);
  LoadedSystem out{System{Transmitter(load_role(dir, "tx.json", "tx", cfg), uses),
                          Receiver(load_role(dir, "rx.json", "rx", cfg), uses, cfg.pilot_uses()),
                          gan::Generator(load_role(dir, "g.json", "g", cfg), static_cast<std::size_t>(cfg.z_dim),
                                         2 * uses),
                          gan::Discriminator(load_role(dir, "d.json", "d", cfg), 2 * uses)},
                   cfg};
  if (out.system.tx.alphabet_size() != cfg.alphabet() || out.system.rx.alphabet_size() != cfg.alphabet()) {
    throw ConfigError("'" + dir.string() + "': network alphabet does not match k = " + std::to_string(cfg.k));
  }
  return out;
}

void save_gan(const fs::path& dir, const gan::Generator& g, const gan::Discriminator& d, const TrainConfig& cfg,
              const TrainLog* log) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  const auto config_json = config::to_json(cfg);
  save_checkpoint(dir / "g.json", {"g", cfg.seed, config_json, g.net()});
  save_checkpoint(dir / "d.json", {"d", cfg.seed, config_json, d.net()});
  write_text_atomic(dir / "config.json", config_json.dump(2) + "\n");
  if (log != nullptr) write_text_atomic(dir / "train_log.csv", log->to_csv());
}

LoadedGan load_gan(const fs::path& dir) {
  const auto cfg = config::load_config(dir / "config.json");
  const auto uses = static_cast<std::size_t>(cfg.n);
  LoadedGan out{gan::Generator(load_role(dir, "g.json", "g", cfg), static_cast<std::size_t>(cfg.z_dim), 2 * uses),
                gan::Discriminator(load_role(dir, "d.json", "d", cfg), 2 * uses), cfg, std::nullopt};
  if (fs::exists(dir / "tx.json")) out.tx = Transmitter(load_role(dir, "tx.json", "tx", cfg), uses);
  return out;
}

}  // namespace e2e::train
