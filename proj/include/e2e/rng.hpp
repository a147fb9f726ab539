#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace e2e {

// One named, independently seeded random stream. Every stochastic operation in
// the library takes one of these by reference; nothing reads global state.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  // Stream derived from a root seed, a name and up to two indices
  // (e.g. {"eval", snr_index, shard_index}).
  static RandomStream derive(std::uint64_t root_seed, std::string_view name, std::uint64_t a = 0,
                             std::uint64_t b = 0);

  double gaussian() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  int uniform_int(int upper_exclusive);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// FNV-1a over a string; used to turn stream names into seed material.
std::uint64_t hash_name(std::string_view name) noexcept;

}  // namespace e2e
