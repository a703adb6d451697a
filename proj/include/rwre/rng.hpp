#pragma once

#include <cstdint>
#include <limits>

namespace rwre {

/// SplitMix64 finalizer. Used to derive independent stream seeds from
/// (root seed, stream counters) and to expand a 64-bit seed into engine state.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  std::uint64_t s = x;
  return splitmix64(s);
}

/// Stream key for (root, a, b). Pure function of its arguments, so replicas
/// can be generated in any order or on any thread.
constexpr std::uint64_t stream_key(std::uint64_t root, std::uint64_t a,
                                   std::uint64_t b = 0) noexcept {
  return mix64(mix64(mix64(root) ^ (a * 0xd1b54a32d192ed03ULL)) ^
               (b * 0x8cb92ba72f3d8dd7ULL));
}

// Stream domains, so that e.g. the disorder of environment k and the walk of
// replica k never share a key.
enum class Domain : std::uint64_t {
  disorder = 1,
  brownian = 2,
  walk = 3,
  horizon = 4,
  environment = 5,
  path = 6,
};

/// xoshiro256++ engine. Satisfies UniformRandomBitGenerator.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed = 0) noexcept { reseed(seed); }

  void reseed(std::uint64_t seed) noexcept {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4]{};
};

inline Xoshiro256 make_stream(std::uint64_t root, Domain domain, std::uint64_t index,
                              std::uint64_t sub = 0) {
  return Xoshiro256(stream_key(root ^ (static_cast<std::uint64_t>(domain) << 56), index, sub));
}

}  // namespace rwre
