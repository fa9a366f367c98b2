#pragma once

#include <cstdint>
#include <random>

namespace cm::geom {

// Deterministic RNG with fixed bit-to-double mappings so streams do not
// depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t bits() { return eng_(); }

  // uniform in [0, 1)
  double u01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * u01(); }

  // uniform in {0, ..., n-1} via rejection, unbiased
  uint64_t index(uint64_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  // standard normal, Box-Muller with cached second value
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = u01();
    } while (u1 <= 0.0);
    u2 = u01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // independent child stream, for per-item substreams
  Rng fork(uint64_t salt);

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stable stream key for (seed, a, b, c) tuples, e.g. (run seed, epoch, step).
inline uint64_t stream_seed(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
  auto mix = [](uint64_t h, uint64_t x) {
    h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return h;
  };
  uint64_t h = mix(0x243f6a8885a308d3ULL, seed);
  h = mix(h, a);
  h = mix(h, b);
  h = mix(h, c);
  return h;
}

inline Rng Rng::fork(uint64_t salt) { return Rng(stream_seed(salt, eng_())); }

}  // namespace cm::geom
