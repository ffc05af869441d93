#include "portrng/distributions.hpp"

#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"

using namespace portrng;

namespace {

EngineState philox(std::uint64_t seed) { return seed_engine(EngineKind::philox4x32x10, Seed{seed}); }

template <class T>
void expect_error(ErrorCode code, T&& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace

TEST(WordToUnit, FixedPoints) {
  EXPECT_EQ(word_to_unit(0x00000000u), 0.0f);
  EXPECT_EQ(word_to_unit(0x80000000u), 0.5f);
  EXPECT_EQ(word_to_unit(0xFFFFFFFFu), 16777215.0f / 16777216.0f);
  EXPECT_LT(word_to_unit(0xFFFFFFFFu), 1.0f);
  EXPECT_LT(word_to_unit<double>(0xFFFFFFFFu), 1.0);
}

TEST(WordToUnit, Fp64WidensFp32Exactly) {
  std::mt19937 rng(3);
  for (int i = 0; i < 100000; ++i) {
    const auto w = static_cast<std::uint32_t>(rng());
    ASSERT_EQ(static_cast<double>(word_to_unit<float>(w)), word_to_unit<double>(w));
  }
}

TEST(FillUniformUnit, EmptyLeavesStateUnchanged) {
  auto s = philox(3);
  const auto before = s;
  const auto block = fill_uniform_unit(s, 0);
  EXPECT_EQ(block.count(), 0u);
  EXPECT_EQ(s, before);
}

TEST(FillUniformUnit, SeedZeroFirstBlock) {
  auto s = philox(0);
  const auto block = fill_uniform_unit(s, 4);
  ASSERT_EQ(block.count(), 4u);
  EXPECT_EQ(block.values[0], word_to_unit(0x6627e8d5u));
  EXPECT_EQ(block.values[1], word_to_unit(0xe169c58du));
  EXPECT_EQ(block.values[2], word_to_unit(0xbc57ac4cu));
  EXPECT_EQ(block.values[3], word_to_unit(0x9b00dbd8u));
  EXPECT_EQ(block.precision, Precision::fp32);
}

TEST(FillUniformUnit, AdvancesStateByExactlyN) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = rng() % 5000;
    auto s = philox(rng());
    const auto origin = s;
    fill_uniform_unit<double>(s, n);
    EXPECT_EQ(s, skip_ahead(origin, n));
  }
}

TEST(FillUniformUnit, MrgUsesSameWordMapping) {
  auto s = seed_engine(EngineKind::mrg32k3a, Seed{0});
  const auto block = fill_uniform_unit(s, 1);
  EXPECT_EQ(block.values[0], word_to_unit(545508589u));
}

TEST(FillUniformUnit, SampleMeanOfMillion) {
  auto s = philox(99);
  const auto block = fill_uniform_unit(s, 1'000'000);
  double sum = 0.0;
  for (float x : block.values) {
    ASSERT_GE(x, 0.0f);
    ASSERT_LT(x, 1.0f);
    sum += x;
  }
  EXPECT_NEAR(sum / 1e6, 0.5, 0.002);
}

TEST(FillUniformUnit, ChiSquareWithinOneToNinetyNinePercentBand) {
  const boost::math::chi_squared dist(99);
  const double lo = boost::math::quantile(dist, 0.01);
  const double hi = boost::math::quantile(dist, 0.99);
  EXPECT_NEAR(lo, 69.2299, 1e-3);
  EXPECT_NEAR(hi, 134.6416, 1e-3);
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    auto s = philox(seed);
    const auto block = fill_uniform_unit(s, 1'000'000);
    std::vector<double> bins(100, 0.0);
    for (float x : block.values) bins[static_cast<std::size_t>(double{x} * 100.0)] += 1.0;
    double chi2 = 0.0;
    for (double c : bins) chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
    EXPECT_GT(chi2, lo) << "seed " << seed;
    EXPECT_LT(chi2, hi) << "seed " << seed;
  }
}

TEST(RangeTransform, Examples) {
  RandomBlock<float> a{{0.5f}};
  range_transform(a, -1.0, 1.0);
  EXPECT_EQ(a.values[0], 0.0f);

  RandomBlock<float> b{{0.25f}};
  range_transform(b, 10.0, 20.0);
  EXPECT_EQ(b.values[0], 12.5f);

  auto s = philox(4);
  auto c = fill_uniform_unit(s, 1000);
  const auto original = c.values;
  range_transform(c, 0.0, 1.0);
  EXPECT_EQ(c.values, original);
}

TEST(RangeTransform, RejectsBadRanges) {
  RandomBlock<float> b{{0.5f}};
  expect_error(ErrorCode::invalid_range, [&] { range_transform(b, 1.0, 1.0); });
  expect_error(ErrorCode::invalid_range, [&] { range_transform(b, 2.0, 1.0); });
  expect_error(ErrorCode::invalid_range,
               [&] { range_transform(b, 0.0, std::numeric_limits<double>::infinity()); });
  expect_error(ErrorCode::invalid_range,
               [&] { range_transform(b, std::numeric_limits<double>::quiet_NaN(), 1.0); });
  // Finite in fp64 but the width overflows fp32.
  expect_error(ErrorCode::invalid_range, [&] { range_transform(b, -3e38, 3e38); });
  EXPECT_EQ(b.values[0], 0.5f);
}

TEST(RangeTransform, TopOfUnitIntervalStaysBelowHi) {
  // The width is one fp32 ulp, so the top unit value rounds up to hi before clamping.
  RandomBlock<float> b{{16777215.0f / 16777216.0f}};
  range_transform(b, 1.0, 1.0000001);
  EXPECT_LT(b.values[0], 1.0000001f);
  EXPECT_GE(b.values[0], 1.0f);
}

// Property: generate + transform equals an independent elementwise affine
// map evaluated in extended precision, and stays inside [lo, hi).
TEST(RangeTransform, MatchesElementwiseOracleForRandomRanges) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> centre(-1e4, 1e4);
  std::uniform_real_distribution<double> log_width(-6.0, 6.0);
  auto s = philox(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const double lo = centre(rng);
    const double hi = lo + std::pow(10.0, log_width(rng));
    if (!(static_cast<float>(lo) < static_cast<float>(hi))) continue;
    auto unit = fill_uniform_unit(s, 64);
    auto out = unit;
    range_transform(out, lo, hi);
    const long double flo = static_cast<float>(lo), fhi = static_cast<float>(hi);
    const float ulp = std::max(std::abs(std::nextafter(static_cast<float>(lo), 1e30f) - static_cast<float>(lo)),
                               std::abs(std::nextafter(static_cast<float>(hi), 1e30f) - static_cast<float>(hi)));
    for (std::size_t i = 0; i < unit.count(); ++i) {
      const long double exact = flo + static_cast<long double>(unit.values[i]) * (fhi - flo);
      ASSERT_GE(out.values[i], static_cast<float>(lo) ) << lo << " " << hi;
      ASSERT_LT(out.values[i], static_cast<float>(hi)) << lo << " " << hi;
      ASSERT_LE(std::abs(static_cast<long double>(out.values[i]) - exact), 2.0L * ulp)
          << lo << " " << hi << " x=" << unit.values[i];
    }
  }
}

TEST(BoxMuller, UnitFirstUniformGivesZeroRadius) {
  const auto [z0, z1] = box_muller(0.0f, 0.37f);
  EXPECT_EQ(z0, 0.0f);
  EXPECT_EQ(z1, 0.0f);
  // Scaled output collapses to the mean when the radius is zero.
  std::vector<float> v{z0};
  scale_shift<float>(v, 3.5, 2.0);
  EXPECT_EQ(v[0], 3.5f);
}

TEST(BoxMuller, ClosedFormRadiusTwo) {
  const double u1 = 1.0 - std::exp(-2.0);
  const auto [z0, z1] = box_muller(u1, 0.0);
  EXPECT_NEAR(z0, 2.0, 1e-12);
  EXPECT_EQ(z1, 0.0);
}

TEST(BoxMuller, NeverTakesLogOfZero) {
  const float top = word_to_unit(0xFFFFFFFFu);
  const auto [z0, z1] = box_muller(top, 0.25f);
  EXPECT_TRUE(std::isfinite(z0));
  EXPECT_TRUE(std::isfinite(z1));
}

TEST(FillGaussian, PairsFollowTheirUniformWords) {
  auto s = philox(12);
  auto words = s;
  const auto block = fill_gaussian<double>(s, 6, 1.0, 3.0);
  for (std::size_t i = 0; i < 6; i += 2) {
    const double u1 = word_to_unit<double>(next_word(words));
    const double u2 = word_to_unit<double>(next_word(words));
    const auto [z0, z1] = box_muller(u1, u2);
    EXPECT_EQ(block.values[i], z0 * 3.0 + 1.0);
    EXPECT_EQ(block.values[i + 1], z1 * 3.0 + 1.0);
  }
}

TEST(FillGaussian, OddCountDiscardsLastPartnerAndConsumesWholePair) {
  auto a = philox(5);
  auto b = philox(5);
  const auto odd = fill_gaussian(a, 5, 0.0, 1.0);
  const auto even = fill_gaussian(b, 6, 0.0, 1.0);
  EXPECT_EQ(std::vector<float>(even.values.begin(), even.values.begin() + 5), odd.values);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, skip_ahead(philox(5), 6));
}

TEST(FillGaussian, RejectsBadParameters) {
  auto s = philox(1);
  expect_error(ErrorCode::invalid_parameter, [&] { fill_gaussian(s, 4, 0.0, 0.0); });
  expect_error(ErrorCode::invalid_parameter, [&] { fill_gaussian(s, 4, 0.0, -1.0); });
  expect_error(ErrorCode::invalid_parameter,
               [&] { fill_gaussian(s, 4, std::numeric_limits<double>::quiet_NaN(), 1.0); });
  EXPECT_EQ(s, philox(1));
}

TEST(FillGaussian, MomentsOfMillionStandardNormals) {
  auto s = philox(2718);
  const auto block = fill_gaussian(s, 1'000'000, 0.0, 1.0);
  double sum = 0.0, sq = 0.0;
  for (float x : block.values) {
    ASSERT_TRUE(std::isfinite(x));
    sum += x;
    sq += double{x} * x;
  }
  const double mean = sum / 1e6;
  const double sd = std::sqrt((sq - 1e6 * mean * mean) / (1e6 - 1));
  EXPECT_NEAR(mean, 0.0, 0.005);
  EXPECT_NEAR(sd, 1.0, 0.005);
}

TEST(FillGaussian, DeterministicForSeed) {
  auto a = philox(31);
  auto b = philox(31);
  EXPECT_EQ(fill_gaussian(a, 1001, 2.0, 0.5).values, fill_gaussian(b, 1001, 2.0, 0.5).values);
}

TEST(DistributionSpec, LabelRoundTrip) {
  for (const auto& text : {"uniform:-1:1", "uniform:0.25:10.5", "gaussian:0:1", "gaussian:-3.5:0.125"}) {
    EXPECT_EQ(DistributionSpec::parse(text).label(), text);
  }
  EXPECT_THROW(DistributionSpec::parse("uniform:1"), Error);
  EXPECT_THROW(DistributionSpec::parse("poisson:1:2"), Error);
  EXPECT_THROW(DistributionSpec::parse("uniform:2:1"), Error);
  EXPECT_THROW(DistributionSpec::parse("gaussian:0:0"), Error);
  EXPECT_THROW(DistributionSpec::parse("uniform:a:1"), Error);
}

TEST(Generate, OnePassMatchesFillThenTransform) {
  auto a = philox(8);
  auto b = philox(8);
  std::vector<float> one(333);
  generate<float>(a, one, DistributionSpec::uniform(-2.0, 5.0));
  auto two = fill_uniform_unit(b, 333);
  range_transform(two, -2.0, 5.0);
  EXPECT_EQ(one, two.values);
  EXPECT_EQ(a, b);
}
