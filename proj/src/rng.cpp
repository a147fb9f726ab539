#include "e2e/rng.hpp"

#include "e2e/error.hpp"

namespace e2e {

std::uint64_t hash_name(std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RandomStream::RandomStream(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  engine_.seed(seq);
}

RandomStream RandomStream::derive(std::uint64_t root_seed, std::string_view name, std::uint64_t a,
                                  std::uint64_t b) {
  const std::uint64_t tag = hash_name(name);
  std::seed_seq seq{static_cast<std::uint32_t>(root_seed), static_cast<std::uint32_t>(root_seed >> 32),
                    static_cast<std::uint32_t>(tag),       static_cast<std::uint32_t>(tag >> 32),
                    static_cast<std::uint32_t>(a),         static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b),         static_cast<std::uint32_t>(b >> 32)};
  RandomStream s(0);
  s.engine_.seed(seq);
  return s;
}

int RandomStream::uniform_int(int upper_exclusive) {
  if (upper_exclusive <= 0) throw ValidationError("uniform_int: upper bound must be positive");
  std::uniform_int_distribution<int> dist(0, upper_exclusive - 1);
  return dist(engine_);
}

}  // namespace e2e
