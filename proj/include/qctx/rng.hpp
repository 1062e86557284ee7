#pragma once

// Portable seeded randomness. A 64-bit seed is expanded with SplitMix64 into
// the 256-bit state of xoshiro256**. Uniform doubles take the top 53 bits, so
// every platform produces the same stream for the same seed.
//
// Stream splitting:
//   * batch run i uses the generator seeded with (seed XOR i);
//   * a second independent stream from one generator is obtained with jump(),
//     which advances by 2^128 steps.

#include <array>
#include <cstdint>

namespace qctx {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
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

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  void jump() {
    static constexpr std::array<std::uint64_t, 4> kJump{0x180ec6d33cfd0aba, 0xd5a61266f0c9392c,
                                                        0xa9582618e03fc9aa, 0x39abdc4529b1661c};
    std::array<std::uint64_t, 4> acc{};
    for (std::uint64_t word : kJump) {
      for (int b = 0; b < 64; ++b) {
        if (word & (std::uint64_t{1} << b))
          for (int k = 0; k < 4; ++k) acc[k] ^= s_[k];
        next();
      }
    }
    s_ = acc;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> s_{};
};

inline std::uint64_t run_seed(std::uint64_t seed, std::uint64_t run_index) {
  return seed ^ run_index;
}

}  // namespace qctx
