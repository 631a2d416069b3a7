#pragma once

#include <charconv>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>

#include "ssltune/error.hpp"

namespace ssltune {

// Non-negative decimal percentage held as an exact fraction num / den.
// Budgets derived from it use integer arithmetic only, so e.g. 29% of 100
// is 29 and never 28.999....
class Percent {
 public:
  constexpr Percent() = default;

  static Percent parse(std::string_view text) {
    std::string_view s = text;
    if (s.empty()) throw ConfigError("empty percentage");
    std::uint64_t num = 0;
    std::uint64_t den = 1;
    bool seen_dot = false;
    bool seen_digit = false;
    for (char c : s) {
      if (c == '.' && !seen_dot) {
        seen_dot = true;
        continue;
      }
      if (c < '0' || c > '9') throw ConfigError("invalid percentage '" + std::string(text) + "'");
      if (num > (UINT64_MAX - 9) / 10 || (seen_dot && den > UINT64_MAX / 10))
        throw ConfigError("percentage '" + std::string(text) + "' has too many digits");
      num = num * 10 + std::uint64_t(c - '0');
      if (seen_dot) den *= 10;
      seen_digit = true;
    }
    if (!seen_digit) throw ConfigError("invalid percentage '" + std::string(text) + "'");
    return Percent(num, den);
  }

  // Converts through the shortest round-trip decimal representation, so
  // 0.1 becomes exactly 1/10.
  static Percent from_double(double v) {
    if (!(v >= 0.0)) throw ConfigError("percentage must be >= 0");
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
    if (res.ec != std::errc()) throw ConfigError("percentage out of range");
    return parse(std::string_view(buf, std::size_t(res.ptr - buf)));
  }

  constexpr std::uint64_t numerator() const noexcept { return num_; }
  constexpr std::uint64_t denominator() const noexcept { return den_; }
  constexpr bool is_zero() const noexcept { return num_ == 0; }
  double to_double() const noexcept { return double(num_) / double(den_); }

  // floor(value / 100 * n), exactly.
  std::uint64_t share_of(std::uint64_t n) const {
    const unsigned __int128 p = static_cast<unsigned __int128>(num_) * n;
    return static_cast<std::uint64_t>(p / (static_cast<unsigned __int128>(den_) * 100));
  }

  // Shortest decimal string ("3", "2.5").
  std::string to_string() const {
    std::string s = std::to_string(num_ / den_);
    std::uint64_t rem = num_ % den_;
    if (rem == 0) return s;
    s += '.';
    while (rem != 0) {
      rem *= 10;
      s += char('0' + rem / den_);
      rem %= den_;
    }
    return s;
  }

  friend constexpr bool operator==(const Percent& a, const Percent& b) noexcept {
    return static_cast<unsigned __int128>(a.num_) * b.den_ ==
           static_cast<unsigned __int128>(b.num_) * a.den_;
  }

 private:
  constexpr Percent(std::uint64_t num, std::uint64_t den) : num_(num), den_(den) {
    const std::uint64_t g = std::gcd(num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  std::uint64_t num_ = 0;
  std::uint64_t den_ = 1;
};

}  // namespace ssltune
