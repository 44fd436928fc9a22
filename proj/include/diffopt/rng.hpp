#pragma once

#include <array>
#include <cstdint>

// Counter-seeded xoshiro256++ with Box-Muller normals. All randomness in the
// library flows through this generator so that runs are reproducible
// bit-for-bit on a fixed build; substreams are derived from a base seed plus
// integer path components, which keeps parallel consumers race-free without
// coordination.
namespace diffopt {

inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept {
    std::uint64_t sm = seed;
    for (auto& w : state_) w = splitmix64(sm);
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  std::uint64_t next_u64() noexcept {
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

  // Uniform on (0, 1]; never returns 0 so logs are safe.
  double uniform_oc() noexcept {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform on [0, 1).
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  // Standard normal via Box-Muller; consumes two uniforms per pair.
  double normal() noexcept;

  void fill_normal(double* out, std::size_t n) noexcept {
    for (std::size_t i = 0; i < n; ++i) out[i] = normal();
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept {
    // Multiply-shift; bias is < 2^-64 * n, negligible for the sizes used here.
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Derives an independent substream seed from (seed, path...). Successive
// path components are folded through splitmix64 so e.g. (7, 1) and (7, 2)
// land far apart.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a) noexcept {
  std::uint64_t s = seed;
  std::uint64_t h = splitmix64(s);
  s = h ^ (a + 0x9E3779B97F4A7C15ull);
  return splitmix64(s);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b) noexcept {
  return derive_seed(derive_seed(seed, a), b);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b, std::uint64_t c) noexcept {
  return derive_seed(derive_seed(seed, a, b), c);
}

}  // namespace diffopt
