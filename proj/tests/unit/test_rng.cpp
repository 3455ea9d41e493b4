#include "ahr/rng.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace ahr;

// Known-answer vectors from the Random123 distribution (kat_vectors).
TEST(Philox, KnownAnswers) {
  using A4 = std::array<std::uint32_t, 4>;
  EXPECT_EQ(philox4x32({0, 0, 0, 0}, {0, 0}), (A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(RandomStreamTest, DeterministicAndSeparated) {
  RandomStream a(42, StreamComponent::chain, 3), b(42, StreamComponent::chain, 3);
  RandomStream c(42, StreamComponent::errors, 3), d(42, StreamComponent::chain, 4), e(43, StreamComponent::chain, 3);
  std::set<std::uint64_t> others;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    others.insert(c());
    others.insert(d());
    others.insert(e());
    EXPECT_FALSE(others.count(x));
  }
}

TEST(RandomStreamTest, UniformInOpenInterval) {
  RandomStream r(1, StreamComponent::errors);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
}

TEST(RandomStreamTest, NormalMoments) {
  RandomStream r(2, StreamComponent::errors);
  const int n = 200000;
  double s1 = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s1 += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s1 / n, 0.0, 4 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 4 * std::sqrt(2.0 / n));
}

TEST(RandomStreamTest, GammaMean) {
  RandomStream r(3, StreamComponent::errors);
  for (double k : {0.4, 1.0, 2.5}) {
    const int n = 100000;
    double s = 0;
    for (int i = 0; i < n; ++i) s += r.gamma(k);
    EXPECT_NEAR(s / n, k, 5 * std::sqrt(k / n));
  }
}

TEST(RandomStreamTest, StudentTAbsMoment) {
  RandomStream r(4, StreamComponent::errors);
  const int n = 400000;
  double s = 0;
  for (int i = 0; i < n; ++i) s += std::abs(r.student_t(5.0));
  EXPECT_NEAR(s / n, oracle::student_t_abs_moment(5.0, 1.0), 0.01);
}

TEST(RandomStreamTest, ParetoTail) {
  RandomStream r(5, StreamComponent::errors);
  const int n = 200000;
  int beyond = 0, negative = 0;
  for (int i = 0; i < n; ++i) {
    const double x = r.symmetric_pareto(1.6);
    ASSERT_GE(std::abs(x), 1.0);
    if (std::abs(x) > 4.0) ++beyond;
    if (x < 0) ++negative;
  }
  const double p = std::pow(4.0, -1.6);
  EXPECT_NEAR(static_cast<double>(beyond) / n, p, 4 * std::sqrt(p * (1 - p) / n));
  EXPECT_NEAR(static_cast<double>(negative) / n, 0.5, 4 * std::sqrt(0.25 / n));
}

TEST(RandomStreamTest, BelowIsUniform) {
  RandomStream r(6, StreamComponent::chain);
  std::array<int, 7> counts{};
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const auto k = r.below(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  for (int c : counts) EXPECT_NEAR(c, n / 7.0, 4 * std::sqrt(n / 7.0));
}

TEST(MixSeed, DistinctTags) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t t = 0; t < 1000; ++t) seen.insert(mix_seed(7, t));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(mix_seed(7, 3), mix_seed(7, 3));
}
