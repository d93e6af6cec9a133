#include "dynres/util.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace dynres {

double key_normal(std::uint64_t key) {
  const double u1 = key_uniform(mix64(key ^ 0x1234567ULL));
  const double u2 = key_uniform(mix64(key ^ 0x89abcdefULL));
  const double r = std::sqrt(-2.0 * std::log1p(-u1));
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

std::string fmt9(double v) {
  if (v == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace dynres
