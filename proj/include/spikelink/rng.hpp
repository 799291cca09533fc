#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace spikelink {

// splitmix64 finalizer, used for seed derivation.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic sub-seed scheme: every stochastic component draws from its
// own stream derived as derive_seed(root, tag, index). Tags live in
// seed_tags below; index disambiguates instances (device id, epoch, ...).
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag,
                                 std::uint64_t index = 0) {
  std::uint64_t z = mix64(root + 0x9e3779b97f4a7c15ull);
  z = mix64(z ^ (tag * 0xd1342543de82ef95ull + 1));
  z = mix64(z ^ (index * 0xaf251af3b0f025b5ull + 1));
  return z;
}

namespace seed_tags {
inline constexpr std::uint64_t data = 1;
inline constexpr std::uint64_t neuron_init = 2;
inline constexpr std::uint64_t device = 3;
inline constexpr std::uint64_t order = 4;
inline constexpr std::uint64_t target = 5;
inline constexpr std::uint64_t eval = 6;
inline constexpr std::uint64_t channel = 7;
inline constexpr std::uint64_t calibration = 8;
inline constexpr std::uint64_t train = 9;
inline constexpr std::uint64_t repeat = 10;
inline constexpr std::uint64_t example = 11;
}  // namespace seed_tags

// Seeded random stream. Wraps mt19937_64 with fixed-consumption draws:
// uniform() uses one engine call, normal() exactly two (Box-Muller without
// caching), so replaying a stream is independent of call-site branching.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    // 1-u1 lies in (0, 1], keeping the log finite.
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t raw() { return engine_(); }

  std::uint32_t below(std::uint32_t n) {
    return static_cast<std::uint32_t>(engine_() % n);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(static_cast<std::uint32_t>(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace spikelink
