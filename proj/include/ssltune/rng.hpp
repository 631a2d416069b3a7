#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace ssltune {

// Identifier written into manifest headers so other implementations can
// reproduce sample streams and shuffles bit-exactly.
inline constexpr std::string_view kRngAlgorithm = "xoshiro256starstar+splitmix64/v1";

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Explicit, copyable random stream (xoshiro256**). All distribution
// helpers are defined here rather than taken from <random> because the
// standard distributions are not specified bit-exactly across library
// implementations.
class RngStream {
 public:
  explicit constexpr RngStream(std::uint64_t seed = 0) noexcept {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  // Splitting rule: key = splitmix(seed) ^ fnv1a64(tag), then the index is
  // folded in through a second splitmix round. Streams for different
  // (tag, index) pairs are independent for practical purposes.
  static constexpr RngStream derive(std::uint64_t seed, std::string_view tag,
                                    std::uint64_t index) noexcept {
    std::uint64_t a = seed;
    std::uint64_t key = splitmix64(a) ^ fnv1a64(tag);
    std::uint64_t b = key ^ (index * 0xD1B54A32D192ED03ULL);
    return RngStream(splitmix64(b));
  }

  constexpr std::uint64_t next() noexcept {
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

  // Uniform integer in [0, n). Lemire's multiply-shift with rejection, so
  // unbiased for every n >= 1.
  constexpr std::uint64_t below(std::uint64_t n) noexcept {
    if (n <= 1) return 0;
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Uniform integer in the closed range [lo, hi].
  constexpr std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
    if (hi <= lo) return lo;
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(below(span));
  }

  // Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform01() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  // Uniform double in [lo, hi]; the result never leaves the range even
  // under rounding.
  constexpr double uniform(double lo, double hi) noexcept {
    if (!(hi > lo)) return lo;
    return std::clamp(lo + (hi - lo) * uniform01(), lo, hi);
  }

  constexpr bool bernoulli(double p) noexcept { return uniform01() < p; }

  // Fisher-Yates, iterating from the back.
  template <typename T>
  constexpr void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> s_{};
};

}  // namespace ssltune
