#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace aggtopics {

// Seeded generator with distribution helpers written out by hand. The
// standard <random> distributions are implementation-defined, which would
// make fitted models differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::mt19937_64 engine_;
};

// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seed for a named pipeline stage: fnv1a(stage) xor base. Any stage can be
// replayed in isolation from the base seed and its name.
constexpr std::uint64_t stage_seed(std::uint64_t base, std::string_view stage) noexcept {
  return fnv1a(stage) ^ base;
}

}  // namespace aggtopics
