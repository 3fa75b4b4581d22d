#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace rwlab {

/// splitmix64 finalizer (Stafford variant 13). Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// Top 53 bits of a word mapped to [0, 1).
constexpr double to_unit(std::uint64_t x) noexcept {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

/// Derives a child stream key from a parent key and an index. The stream
/// tree used throughout is master -> command tag -> seed index -> replica.
constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t index) noexcept {
  return mix64(mix64(parent + kGolden) ^ mix64(index + 2 * kGolden));
}

/// xoshiro256++ seeded from a 64-bit key through splitmix64.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t key) noexcept {
    std::uint64_t s = key;
    for (auto& w : state_) {
      s += kGolden;
      w = mix64(s);
    }
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
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

  double uniform() noexcept { return to_unit((*this)()); }

  /// Integer in [0, k) by the multiply-shift map; bias below 2^-60 for small k.
  std::uint32_t below(std::uint32_t k) noexcept {
    __extension__ using u128 = unsigned __int128;
    return static_cast<std::uint32_t>((static_cast<u128>((*this)()) * k) >> 64);
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace rwlab
