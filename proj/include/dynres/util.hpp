#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace dynres {

/// splitmix64 finalizer; the building block for counter-based noise.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_key(std::uint64_t a, std::uint64_t b,
                                 std::uint64_t c = 0, std::uint64_t d = 0) {
  return mix64(mix64(mix64(mix64(a) ^ b) ^ c) ^ d);
}

/// Uniform in [0, 1) from a 64-bit key.
constexpr double key_uniform(std::uint64_t key) {
  return static_cast<double>(key >> 11) * 0x1.0p-53;
}

/// Standard normal sample keyed by a counter tuple (Box-Muller on two
/// derived uniforms). Same key, same value, on every call.
double key_normal(std::uint64_t key);

/// Derives an independent child seed (per-episode, per-task, ...).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                                    std::uint64_t index = 0) {
  return hash_key(master, tag, index, 0x5eedULL);
}

std::uint64_t fnv1a(std::string_view bytes);

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t index = 0) {
  return derive_seed(master, fnv1a(tag), index);
}

/// Sequential generator used wherever the draw order is fixed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * key_uniform(engine_());
  }
  /// Integer in [lo, hi].
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(engine_() % span);
  }
  double normal() { return key_normal(engine_()); }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Decimal with 9 significant digits, the on-disk float format.
std::string fmt9(double v);

std::string hex64(std::uint64_t v);

}  // namespace dynres
