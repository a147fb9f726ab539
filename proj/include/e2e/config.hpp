#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "e2e/eval.hpp"
#include "e2e/train.hpp"

namespace e2e::config {

// Strict: unknown keys, wrong types and out-of-range values raise ConfigError
// with the key path. Missing keys take the defaults (Adam lr 1e-3 / 1e-4,
// batch 320, hidden {32,32} / {32,32} / {128,128,128} / {32,32,32}).
// The training Eb/N0 defaults to 4 dB on AWGN and 10 dB on Rayleigh.
train::TrainConfig parse_train_config(const nlohmann::json& j);
train::TrainConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const train::TrainConfig& cfg);

// {"snr_db": [...], "min_trials": .., "max_trials": .., "target_errors": .., "seed": ..}
eval::SweepSpec parse_sweep(const nlohmann::json& j);
eval::SweepSpec load_sweep(const std::filesystem::path& path);
nlohmann::json to_json(const eval::SweepSpec& spec);

}  // namespace e2e::config
