#include <gtest/gtest.h>

#include <array>
#include <numeric>
#include <set>

#include "ssltune/rng.hpp"

using namespace ssltune;

// Reference xoshiro256** step, written out longhand.
static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

TEST(Rng, MatchesReferenceGenerator) {
  std::uint64_t sm = 42;
  std::array<std::uint64_t, 4> s{};
  for (auto& w : s) {
    sm += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = sm;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    w = z ^ (z >> 31);
  }
  RngStream rng(42);
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t expect = rotl(s[1] * 5, 7) * 9;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    ASSERT_EQ(rng.next(), expect) << "step " << i;
  }
}

TEST(Rng, SplitMixFirstOutputForSeedZero) {
  std::uint64_t state = 0;
  EXPECT_EQ(splitmix64(state), 0xe220a8397b1dcdafULL);
}

TEST(Rng, DerivedStreamsAreReproducibleAndDistinct) {
  auto a = RngStream::derive(7, "rotation", 3);
  auto b = RngStream::derive(7, "rotation", 3);
  auto c = RngStream::derive(7, "rotation", 4);
  auto d = RngStream::derive(7, "colorization", 3);
  auto e = RngStream::derive(8, "rotation", 3);
  const auto va = a.next();
  EXPECT_EQ(va, b.next());
  EXPECT_NE(va, c.next());
  EXPECT_NE(va, d.next());
  EXPECT_NE(va, e.next());
}

TEST(Rng, BelowStaysInRangeAndCoversIt) {
  RngStream rng(1);
  std::array<int, 7> hist{};
  for (int i = 0; i < 70000; ++i) {
    const auto v = rng.below(7);
    ASSERT_LT(v, 7u);
    ++hist[v];
  }
  for (int h : hist) EXPECT_NEAR(h, 10000, 500);
}

TEST(Rng, UniformIntIsInclusive) {
  RngStream rng(2);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = rng.uniform_int(-2, 2);
    ASSERT_GE(v, -2);
    ASSERT_LE(v, 2);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 5u);
}

TEST(Rng, Uniform01InHalfOpenUnitInterval) {
  RngStream rng(3);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.01);
}

TEST(Rng, UniformDegenerateRangeConsumesNothing) {
  RngStream a(4);
  RngStream b(4);
  EXPECT_EQ(a.uniform(1.0, 1.0), 1.0);
  EXPECT_EQ(a.next(), b.next());
}

TEST(Rng, BernoulliExtremes) {
  RngStream rng(5);
  for (int i = 0; i < 100; ++i) {
    EXPECT_FALSE(rng.bernoulli(0.0));
    EXPECT_TRUE(rng.bernoulli(1.0));
  }
}

TEST(Rng, ShuffleIsAPermutationAndDeterministic) {
  std::array<int, 10> a{};
  std::iota(a.begin(), a.end(), 0);
  auto b = a;
  RngStream r1(6);
  RngStream r2(6);
  r1.shuffle(std::span<int>(a));
  r2.shuffle(std::span<int>(b));
  EXPECT_EQ(a, b);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 10; ++i) EXPECT_EQ(sorted[std::size_t(i)], i);
}
