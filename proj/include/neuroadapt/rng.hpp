#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace neuroadapt {

// Seeded random source. Wraps mt19937_64 with explicit bit-to-real
// conversions so that a given seed produces the same stream on every
// standard library (std:: distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer on [0, n).
  int uniform_int(int n);

  // Standard normal via Box-Muller, two uniforms per call.
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Independent sub-stream seed for a named purpose ("agent/explicit", ...).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

}  // namespace neuroadapt
