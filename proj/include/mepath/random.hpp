#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace mepath {

// SplitMix64 as a UniformRandomBitGenerator. Its output is a pure function of
// (seed, call count), which lets every consumer derive an independent,
// reproducible stream from a master seed and a few integer coordinates.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  static constexpr std::uint64_t mix(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  std::uint64_t state_;
};

// Seed for the substream addressed by `coords` under `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> coords) {
  std::uint64_t h = SplitMix64::mix(seed ^ 0x6a09e667f3bcc909ULL);
  for (std::uint64_t c : coords) h = SplitMix64::mix(h ^ SplitMix64::mix(c + 1));
  return h;
}

// Uniform double in [0, 1) from the top 53 bits.
template <class Rng>
double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace mepath
