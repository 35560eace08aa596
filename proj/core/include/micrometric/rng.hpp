#pragma once

#include <cmath>
#include <cstdint>

namespace micrometric {

// xoshiro256++ seeded through splitmix64. Chosen over std:: engines because
// the output stream is pinned by the algorithm, not by the standard library
// implementation, so generated fixtures are reproducible everywhere.
class Xoshiro256pp {
public:
  static constexpr const char* kAlgorithmName = "xoshiro256++";

  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double low, double high) { return low + (high - low) * next_double(); }

  // Standard normal via Box-Muller; the spare value is cached so draws come
  // in a fixed order.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_double();
    const double u2 = next_double();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  // Poisson draw: Knuth's product method for small means, normal
  // approximation above kPoissonNormalCutoff. Both paths consume the stream
  // in a fixed order.
  static constexpr double kPoissonNormalCutoff = 64.0;

  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < kPoissonNormalCutoff) {
      const double limit = std::exp(-mean);
      std::uint64_t count = 0;
      double product = next_double();
      while (product > limit) {
        ++count;
        product *= next_double();
      }
      return count;
    }
    const double sample = mean + std::sqrt(mean) * normal();
    return sample <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(sample));
  }

  static std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4] = {};
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace micrometric
