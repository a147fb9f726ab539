#include "e2e/cli.hpp"

#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "e2e/baseline.hpp"
#include "e2e/config.hpp"
#include "e2e/error.hpp"
#include "e2e/eval.hpp"
#include "e2e/io.hpp"
#include "e2e/train.hpp"

namespace e2e::cli {

namespace fs = std::filesystem;

bool color_enabled() {
  const char* no_color = std::getenv("NO_COLOR");
  return (no_color == nullptr || *no_color == '\0') && ::isatty(STDERR_FILENO) == 1;
}

namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) ensure_dir(file.parent_path());
}

fs::path svg_path_for(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".svg");
  return p;
}

void write_manifest(const fs::path& out_dir, const train::TrainConfig& cfg, const fs::path& config_path,
                    const nlohmann::json& outputs, const nlohmann::json& extra = nlohmann::json::object()) {
  const fs::path path = out_dir / "manifest.json";
  if (fs::exists(path)) {
    throw IoError("'" + path.string() + "' already exists; use a fresh --out directory");
  }
  nlohmann::json manifest{{"version", kVersion},
                          {"seed", cfg.seed},
                          {"config", config::to_json(cfg)},
                          {"config_source", config_path.string()},
                          {"started_at", utc_timestamp()},
                          {"outputs", outputs}};
  manifest.update(extra);
  write_text_atomic(path, manifest.dump(2) + "\n");
}

int run_train(const fs::path& config_path, const fs::path& out_dir, bool quiet, std::ostream& out) {
  const auto cfg = config::load_config(config_path);
  ensure_dir(out_dir);
  write_manifest(out_dir, cfg, config_path,
                 {"tx.json", "rx.json", "g.json", "d.json", "config.json", "train_log.csv"});
  train::TrainOptions options;
  options.progress = quiet ? nullptr : &out;
  options.checkpoint_dir = out_dir;
  const auto result = train::train_full(cfg, options);
  out << "done final_loss=" << result.final_loss << " checkpoints=" << out_dir.string() << '\n';
  return 0;
}

int run_fit_gan(const fs::path& config_path, const fs::path& out_dir, const train::GanFitOptions& fit_options,
                bool quiet, std::ostream& out) {
  const auto cfg = config::load_config(config_path);
  const baseline::Qam16Encoder encoder;
  if (cfg.k != 4 || cfg.n != 1) throw ConfigError("fit-gan models the 16-QAM channel: the config needs k = 4, n = 1");
  ensure_dir(out_dir);
  write_manifest(out_dir, cfg, config_path, {"g.json", "d.json", "config.json", "train_log.csv"},
                 {{"encoder", "qam16"},
                  {"steps", fit_options.steps},
                  {"decay_after", fit_options.decay_after},
                  {"decay_factor", fit_options.decay_factor}});
  auto options = fit_options;
  options.progress = quiet ? nullptr : &out;
  const auto result = train::fit_channel_gan(encoder, cfg, options);
  train::save_gan(out_dir, result.g, result.d, cfg, &result.log);
  out << "done checkpoints=" << out_dir.string() << '\n';
  return 0;
}

// The encoder a GAN directory was fitted against: its transmitter if it has
// one, otherwise 16-QAM.
std::unique_ptr<Encoder> encoder_for(const train::LoadedGan& loaded) {
  if (loaded.tx) return std::make_unique<Transmitter>(*loaded.tx);
  if (loaded.config.k != 4 || loaded.config.n != 1) {
    throw ConfigError("checkpoint has no tx.json and its config is not the 16-QAM shape (k = 4, n = 1)");
  }
  return std::make_unique<baseline::Qam16Encoder>();
}

int run_eval(const fs::path& checkpoint, const fs::path& sweep_path, const fs::path& out_csv, bool svg,
             std::ostream& out) {
  const auto loaded = train::load_system(checkpoint);
  const auto spec = config::load_sweep(sweep_path);
  const auto points = eval::bler_sweep_learned(loaded.system.tx, loaded.system.rx, loaded.config.channel, spec);
  ensure_parent(out_csv);
  eval::write_bler_csv(out_csv, points);
  if (svg) {
    const std::vector<eval::BlerSeries> series{{"learned", points}};
    eval::write_bler_svg(svg_path_for(out_csv), series, "Learned system BLER");
  }
  for (const auto& p : points) out << "ebn0_db=" << p.ebn0_db << " bler=" << p.bler << " errors=" << p.errors << '\n';
  return 0;
}

int run_baseline(const std::string& system_name, const fs::path& sweep_path, const fs::path& out_csv, bool svg,
                 std::ostream& out) {
  const auto system = eval::baseline_from_string(system_name);
  const auto spec = config::load_sweep(sweep_path);
  const auto points = eval::bler_sweep_baseline(system, spec);
  ensure_parent(out_csv);
  eval::write_bler_csv(out_csv, points);
  if (svg) {
    const std::vector<eval::BlerSeries> series{{system_name, points}};
    eval::write_bler_svg(svg_path_for(out_csv), series, system_name);
  }
  for (const auto& p : points) out << "ebn0_db=" << p.ebn0_db << " bler=" << p.bler << " errors=" << p.errors << '\n';
  return 0;
}

int run_dump(const fs::path& checkpoint, const std::string& what, const fs::path& out_csv, std::size_t samples,
             std::uint64_t seed) {
  const auto loaded = train::load_gan(checkpoint);
  const auto encoder = encoder_for(loaded);
  ensure_parent(out_csv);
  if (what == "constellation") {
    eval::constellation_dump(*encoder, out_csv);
    return 0;
  }
  const auto ch = loaded.config.real_channel();
  const auto conditions = eval::default_conditions(*encoder, ch.kind());
  eval::gan_scatter_dump(loaded.g, *encoder, ch, conditions, samples, seed, out_csv);
  return 0;
}

int run_fidelity(const fs::path& checkpoint, const fs::path& out_csv, std::size_t samples, std::uint64_t seed,
                 std::ostream& out) {
  const auto loaded = train::load_gan(checkpoint);
  const auto encoder = encoder_for(loaded);
  const auto ch = loaded.config.real_channel();
  const auto conditions = eval::default_conditions(*encoder, ch.kind());
  const auto report = eval::gan_fidelity(loaded.g, *encoder, ch, conditions, samples, seed);
  ensure_parent(out_csv);
  write_text_atomic(out_csv, eval::fidelity_csv(report));
  out << "max_mean_error=" << report.max_fake_mean_error() << " var_ratio=[" << report.min_var_ratio() << ", "
      << report.max_var_ratio() << "] energy_distance=" << report.total_energy_distance
      << " p_value=" << report.p_value << (report.flagged ? " FLAGGED" : "") << '\n';
  return 0;
}

}  // namespace

int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Channel-agnostic end-to-end learned communication: train, evaluate, compare, dump", "e2e"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  fs::path config_path, out_path, checkpoint, sweep_path;
  std::string system_name, what;
  bool quiet = false;
  bool svg = false;
  std::size_t samples = 1000;
  std::uint64_t seed = 1;

  auto* train_cmd = app.add_subcommand("train", "Train transmitter, receiver and channel GAN");
  train_cmd->add_option("--config", config_path, "Training config (JSON)")->required();
  train_cmd->add_option("--out", out_path, "Output directory for checkpoints and logs")->required();
  train_cmd->add_flag("--quiet", quiet, "Suppress per-phase progress lines");

  train::GanFitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit-gan", "Fit the channel GAN to a fixed 16-QAM transmitter (k = 4, n = 1)");
  fit_cmd->add_option("--config", config_path, "Training config (JSON)")->required();
  fit_cmd->add_option("--out", out_path, "Output directory for g/d checkpoints and log")->required();
  fit_cmd->add_option("--steps", fit.steps, "GAN steps")->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--decay-after", fit.decay_after, "Step after which both learning rates drop")
      ->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--decay-factor", fit.decay_factor, "Learning-rate multiplier after the drop")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_flag("--quiet", quiet, "Suppress progress lines");

  auto* eval_cmd = app.add_subcommand("eval", "BLER sweep of a trained system over the real channel");
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint directory written by train")->required();
  eval_cmd->add_option("--sweep", sweep_path, "Sweep spec (JSON)")->required();
  eval_cmd->add_option("--out", out_path, "Output CSV")->required();
  eval_cmd->add_flag("--svg", svg, "Also write an SVG chart next to the CSV");

  auto* base_cmd = app.add_subcommand("baseline", "BLER sweep of a classical reference system");
  base_cmd->add_option("--system", system_name, "hamming74-mld-awgn | qam16-rayleigh-perfect-csi | qam16-rayleigh-ls")
      ->required();
  base_cmd->add_option("--sweep", sweep_path, "Sweep spec (JSON)")->required();
  base_cmd->add_option("--out", out_path, "Output CSV")->required();
  base_cmd->add_flag("--svg", svg, "Also write an SVG chart next to the CSV");

  auto* dump_cmd = app.add_subcommand("dump", "Constellation or real-vs-generated scatter CSV");
  dump_cmd->add_option("--checkpoint", checkpoint, "Directory written by train or fit-gan")->required();
  dump_cmd->add_option("--what", what, "constellation | gan")
      ->required()
      ->check(CLI::IsMember({"constellation", "gan"}));
  dump_cmd->add_option("--out", out_path, "Output CSV")->required();
  dump_cmd->add_option("--samples", samples, "Samples per condition (gan)")->check(CLI::PositiveNumber);
  dump_cmd->add_option("--seed", seed, "Sampling seed (gan)");

  auto* fid_cmd = app.add_subcommand("fidelity", "Moment and energy-distance report of the channel GAN");
  fid_cmd->add_option("--checkpoint", checkpoint, "Directory written by train or fit-gan")->required();
  fid_cmd->add_option("--out", out_path, "Output CSV")->required();
  fid_cmd->add_option("--samples", samples, "Samples per condition")->check(CLI::Range(2, 100000000));
  fid_cmd->add_option("--seed", seed, "Sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return 2;
  }

  const char* red = color_enabled() ? "\033[31m" : "";
  const char* reset = color_enabled() ? "\033[0m" : "";
  try {
    if (*train_cmd) return run_train(config_path, out_path, quiet, out);
    if (*fit_cmd) return run_fit_gan(config_path, out_path, fit, quiet, out);
    if (*eval_cmd) return run_eval(checkpoint, sweep_path, out_path, svg, out);
    if (*base_cmd) return run_baseline(system_name, sweep_path, out_path, svg, out);
    if (*dump_cmd) return run_dump(checkpoint, what, out_path, samples, seed);
    if (*fid_cmd) return run_fidelity(checkpoint, out_path, samples, seed, out);
  } catch (const std::exception& e) {
    err << red << "error: " << reset << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace e2e::cli
