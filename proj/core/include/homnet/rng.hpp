#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace homnet {

// Self-contained RNG so that every seeded artifact is byte-identical across
// platforms and standard-library versions. std::shuffle and the std::
// distributions leave their algorithms unspecified, which would break the
// reproducibility contract; everything below is pinned.

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Mixes a master seed with stream tags (dataset index, split index, a role
/// tag, ...) into an independent stream seed.
inline uint64_t derive_seed(uint64_t master, std::initializer_list<uint64_t> tags) {
  uint64_t s = master;
  uint64_t out = splitmix64(s);
  for (uint64_t t : tags) {
    s = out ^ (t + 0x9e3779b97f4a7c15ull + (out << 6) + (out >> 2));
    out = splitmix64(s);
  }
  return out;
}

/// xoshiro256++ seeded via splitmix64.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    for (auto& w : s_) w = splitmix64(seed);
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0,1) with 53 random bits.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) by rejection; bound must be > 0.
  uint64_t uniform_int(uint64_t bound) {
    const uint64_t threshold = -bound % bound;  // 2^64 mod bound
    for (;;) {
      uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  /// Standard normal via Marsaglia polar method.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  /// Fisher-Yates, back to front.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = size_t(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t s_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace homnet
