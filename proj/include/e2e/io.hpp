#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "e2e/nn.hpp"

namespace e2e {

// Writes through a temporary sibling and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

nlohmann::json to_json(const nn::DenseNet& net);
nn::DenseNet dense_net_from_json(const nlohmann::json& j);

// One network plus the seed and configuration it was trained with.
//
// File layout (JSON):
//   { "format": "e2e-checkpoint-v1", "role": "tx", "seed": 1,
//     "config": {...},
//     "layers": [ { "rows": I, "cols": O, "activation": "relu",
//                   "weight": [row-major I*O], "bias": [O] }, ... ] }
//
// Doubles are written in shortest round-trip form, so load(save(net)) is bit-exact.
struct Checkpoint {
  std::string role;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  nn::DenseNet net;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace e2e
