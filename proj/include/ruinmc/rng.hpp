#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ruinmc {

inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stateless per-replication stream derivation: replication `index` under
// `seed` always sees the same stream, independent of shard layout.
inline uint64_t stream_seed(uint64_t seed, uint64_t index) {
  uint64_t s = seed ^ (0x632be59bd9b4e019ULL * (index + 1));
  uint64_t a = splitmix64(s);
  uint64_t b = splitmix64(s);
  return a ^ (b << 1);
}

// mt19937_64 with hand-rolled variate transforms: std::uniform_real_distribution
// and friends are not bit-reproducible across standard libraries.
class Rng {
public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe under log().
  double uniform_pos() {
    return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
  }

  double exponential() { return -std::log(uniform_pos()); }

  uint64_t raw() { return gen_(); }

private:
  std::mt19937_64 gen_;
};

}  // namespace ruinmc
