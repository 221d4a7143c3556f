#pragma once

#include <cstdint>

namespace mdlp {

// splitmix64 finalizer. Used both as a standalone mixer and to expand seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256** with a splitmix64-expanded seed. All randomness in this
// project flows through this generator so that streams are bit-portable
// across platforms and standard libraries (std:: distributions are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) {
    std::uint64_t sm = seed;
    for (auto& word : s_) {
      sm += 0x9e3779b97f4a7c15ULL;
      word = mix64(sm);
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in [0,1), 53-bit resolution
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // uniform in (0,1]
  double uniform01_open_low() { return 1.0 - uniform01(); }

  // uniform in [-1,1)
  double uniform_pm1() { return 2.0 * uniform01() - 1.0; }

  // uniform integer in [0, bound); bound > 0. Modulo bias is irrelevant at
  // the bounds used here (shuffles, start points) and keeps streams portable.
  std::uint64_t below(std::uint64_t bound) { return next() % bound; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

// Counter-based derivation: an independent stream for (base, counter, tag).
// Sample i of a dataset uses derive_rng(seed, i, tag); the result does not
// depend on how work is scheduled across threads.
inline std::uint64_t derive_key(std::uint64_t base, std::uint64_t counter, std::uint64_t tag = 0) {
  return mix64(mix64(base) ^ mix64(counter + 0x632be59bd9b4e019ULL) ^ mix64(tag + 0xd1b54a32d192ed03ULL));
}

inline Rng derive_rng(std::uint64_t base, std::uint64_t counter, std::uint64_t tag = 0) {
  return Rng(derive_key(base, counter, tag));
}

}  // namespace mdlp
