#include "e2e/config.hpp"

#include <cmath>
#include <set>
#include <string>

#include "e2e/error.hpp"
#include "e2e/io.hpp"

namespace e2e::config {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& why) {
  throw ConfigError("config." + key + ": " + why);
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + ": expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) fail(key, "unknown key");
  }
}

int get_int(const json& j, const std::string& key, int fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer()) fail(key, "expected an integer");
  const auto x = v.get<long long>();
  if (x < INT32_MIN || x > INT32_MAX) fail(key, "out of range");
  return static_cast<int>(x);
}

std::uint64_t get_u64(const json& j, const std::string& key, std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    fail(key, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

double get_double(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number()) fail(key, "expected a number");
  return v.get<double>();
}

std::vector<std::size_t> get_sizes(const json& j, const std::string& key, std::vector<std::size_t> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array()) fail(key, "expected an array of layer widths");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number_integer() || v[i].get<long long>() < 1) {
      fail(key + "[" + std::to_string(i) + "]", "expected a positive integer");
    }
    out.push_back(v[i].get<std::size_t>());
  }
  return out;
}

json parse_file(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path.string() + "': malformed JSON: " + e.what());
  }
}

}  // namespace

train::TrainConfig parse_train_config(const json& j) {
  reject_unknown(j,
                 {"k", "n", "n_pilot", "channel", "ebn0_db_train", "batch_size", "lr_transceiver", "lr_gan",
                  "lr_disc", "gan_beta1", "outer_iterations", "gan_steps", "rx_steps", "tx_steps",
                  "d_steps_per_g", "seed", "z_dim",
                  "tx_hidden", "rx_hidden", "g_hidden", "d_hidden", "hidden_activation", "real_label",
                  "d_reset_patience", "decay_after", "decay_factor"},
                 "config");
  train::TrainConfig c;
  if (j.contains("channel")) {
    const auto& v = j.at("channel");
    if (!v.is_string()) fail("channel", "expected \"awgn\" or \"rayleigh\"");
    const auto s = v.get<std::string>();
    if (s == "awgn") {
      c.channel = channel::ChannelKind::AWGN;
    } else if (s == "rayleigh") {
      c.channel = channel::ChannelKind::Rayleigh;
    } else {
      fail("channel", "expected \"awgn\" or \"rayleigh\", got \"" + s + "\"");
    }
  }
  c.k = get_int(j, "k", c.k);
  c.n = get_int(j, "n", c.n);
  c.n_pilot = get_int(j, "n_pilot", c.n_pilot);
  c.ebn0_db_train =
      get_double(j, "ebn0_db_train", c.channel == channel::ChannelKind::Rayleigh ? 10.0 : 4.0);
  c.batch_size = get_int(j, "batch_size", c.batch_size);
  c.lr_transceiver = get_double(j, "lr_transceiver", c.lr_transceiver);
  c.lr_gan = get_double(j, "lr_gan", c.lr_gan);
  c.lr_disc = get_double(j, "lr_disc", c.lr_disc);
  c.gan_beta1 = get_double(j, "gan_beta1", c.gan_beta1);
  c.outer_iterations = get_int(j, "outer_iterations", c.outer_iterations);
  c.gan_steps = get_int(j, "gan_steps", c.gan_steps);
  c.rx_steps = get_int(j, "rx_steps", c.rx_steps);
  c.tx_steps = get_int(j, "tx_steps", c.tx_steps);
  c.d_steps_per_g = get_int(j, "d_steps_per_g", c.d_steps_per_g);
  c.seed = get_u64(j, "seed", c.seed);
  c.z_dim = get_int(j, "z_dim", c.z_dim);
  c.tx_hidden = get_sizes(j, "tx_hidden", c.tx_hidden);
  c.rx_hidden = get_sizes(j, "rx_hidden", c.rx_hidden);
  c.g_hidden = get_sizes(j, "g_hidden", c.g_hidden);
  c.d_hidden = get_sizes(j, "d_hidden", c.d_hidden);
  if (j.contains("hidden_activation")) {
    const auto& v = j.at("hidden_activation");
    if (!v.is_string()) fail("hidden_activation", "expected \"relu\" or \"tanh\"");
    const auto s = v.get<std::string>();
    if (s != "relu" && s != "tanh") fail("hidden_activation", "expected \"relu\" or \"tanh\"");
    c.hidden_activation = nn::activation_from_string(s);
  }
  c.real_label = get_double(j, "real_label", c.real_label);
  c.d_reset_patience = get_int(j, "d_reset_patience", c.d_reset_patience);
  c.decay_after = get_int(j, "decay_after", c.decay_after);
  c.decay_factor = get_double(j, "decay_factor", c.decay_factor);
  c.validate();
  return c;
}

train::TrainConfig load_config(const std::filesystem::path& path) {
  const auto j = parse_file(path);
  try {
    return parse_train_config(j);
  } catch (const ConfigError& e) {
    throw ConfigError("'" + path.string() + "': " + e.what());
  }
}

json to_json(const train::TrainConfig& c) {
  return json{{"k", c.k},
              {"n", c.n},
              {"n_pilot", c.n_pilot},
              {"channel", c.channel == channel::ChannelKind::Rayleigh ? "rayleigh" : "awgn"},
              {"ebn0_db_train", c.ebn0_db_train},
              {"batch_size", c.batch_size},
              {"lr_transceiver", c.lr_transceiver},
              {"lr_gan", c.lr_gan},
              {"lr_disc", c.lr_disc},
              {"gan_beta1", c.gan_beta1},
              {"outer_iterations", c.outer_iterations},
              {"gan_steps", c.gan_steps},
              {"rx_steps", c.rx_steps},
              {"tx_steps", c.tx_steps},
              {"d_steps_per_g", c.d_steps_per_g},
              {"seed", c.seed},
              {"z_dim", c.z_dim},
              {"tx_hidden", c.tx_hidden},
              {"rx_hidden", c.rx_hidden},
              {"g_hidden", c.g_hidden},
              {"d_hidden", c.d_hidden},
              {"hidden_activation", nn::to_string(c.hidden_activation)},
              {"real_label", c.real_label},
              {"d_reset_patience", c.d_reset_patience},
              {"decay_after", c.decay_after},
              {"decay_factor", c.decay_factor}};
}

eval::SweepSpec parse_sweep(const json& j) {
  reject_unknown(j, {"snr_db", "min_trials", "max_trials", "target_errors", "seed"}, "sweep");
  eval::SweepSpec s;
  if (!j.contains("snr_db")) fail("snr_db", "required");
  const auto& list = j.at("snr_db");
  if (!list.is_array() || list.empty()) fail("snr_db", "expected a non-empty array of numbers");
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (list[i].is_number()) {
      s.snr_db.push_back(list[i].get<double>());
    } else if (list[i].is_string() && list[i].get<std::string>() == "inf") {
      s.snr_db.push_back(INFINITY);
    } else {
      fail("snr_db[" + std::to_string(i) + "]", "expected a number or \"inf\"");
    }
  }
  s.min_trials = get_u64(j, "min_trials", s.min_trials);
  s.max_trials = get_u64(j, "max_trials", s.max_trials);
  s.target_errors = get_u64(j, "target_errors", s.target_errors);
  s.seed = get_u64(j, "seed", s.seed);
  try {
    s.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  return s;
}

eval::SweepSpec load_sweep(const std::filesystem::path& path) {
  const auto j = parse_file(path);
  try {
    return parse_sweep(j);
  } catch (const ConfigError& e) {
    throw ConfigError("'" + path.string() + "': " + e.what());
  }
}

json to_json(const eval::SweepSpec& s) {
  json list = json::array();
  for (double v : s.snr_db) {
    if (std::isinf(v)) {
      list.push_back("inf");
    } else {
      list.push_back(v);
    }
  }
  return json{{"snr_db", list},
              {"min_trials", s.min_trials},
              {"max_trials", s.max_trials},
              {"target_errors", s.target_errors},
              {"seed", s.seed}};
}

}  // namespace e2e::config
