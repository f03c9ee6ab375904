#include "tdaport/tda_distances.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace tdaport;

namespace {

DistanceSpec spec_of(DistanceKind k, double p = 1.0) {
  DistanceSpec s;
  s.kind = k;
  s.p = p;
  return s;
}

}  // namespace

TEST(Awd, IdenticalSeriesAndSingleBlock) {
  std::mt19937_64 rng(1);
  const auto x = testutil::gaussian_series(rng, 40);
  const auto y = testutil::gaussian_series(rng, 40);
  auto s = spec_of(DistanceKind::AWD);
  EXPECT_EQ(awd(x, x, s), 0.0);
  s.subseries = SubSeriesPlan{40, 40, 1};
  EXPECT_EQ(awd(x, y, s), wd(x, y, s));
  EXPECT_GT(awd(x, y, s), 0.0);
}

TEST(Awd, HalvesCompose) {
  std::mt19937_64 rng(2);
  const auto x = testutil::gaussian_series(rng, 60);
  const auto y = testutil::gaussian_series(rng, 60);
  auto s = spec_of(DistanceKind::AWD);
  s.subseries = SubSeriesPlan{30, 30, 2};
  s.weights = {0.5, 0.5};
  const std::span<const double> xs(x), ys(y);
  const auto dx1 = series_diagrams(xs.first(30), s)[0], dx2 = series_diagrams(xs.last(30), s)[0];
  const auto dy1 = series_diagrams(ys.first(30), s)[0], dy2 = series_diagrams(ys.last(30), s)[0];
  const double expect = 0.5 * wasserstein(dx1, dy1, 1) + 0.5 * wasserstein(dx2, dy2, 1);
  EXPECT_NEAR(awd(x, y, s), expect, 1e-14);
  s.weights = {0.25, 0.75};
  EXPECT_NEAR(awd(x, y, s), 0.25 * wasserstein(dx1, dy1, 1) + 0.75 * wasserstein(dx2, dy2, 1), 1e-14);
  s.weights = {0.5, 0.6};
  EXPECT_THROW(awd(x, y, s), ConfigError);
  s.weights.clear();
  s.subseries = SubSeriesPlan{28, 5, 7};  // 60 - 28 not divisible by 5
  EXPECT_THROW(awd(x, y, s), ConfigError);
  EXPECT_THROW(awd(x, std::vector<double>(59, 0.0), spec_of(DistanceKind::AWD)), DataError);
}

TEST(Awd, InfinitePIsAverageBottleneck) {
  std::mt19937_64 rng(3);
  const auto x = testutil::gaussian_series(rng, 45);
  const auto y = testutil::gaussian_series(rng, 45);
  auto s = spec_of(DistanceKind::AWD, kInfinity);
  EXPECT_EQ(awd(x, y, s), abd(x, y, s));
}

TEST(Ald, Examples) {
  std::mt19937_64 rng(4);
  const auto x = testutil::gaussian_series(rng, 60);
  const auto y = testutil::gaussian_series(rng, 60);
  auto s = spec_of(DistanceKind::ALD);
  EXPECT_EQ(ald(x, x, s), 0.0);
  s.subseries = SubSeriesPlan{60, 60, 1};
  EXPECT_EQ(ald(x, y, s), ld(x, y, s));
  s.subseries = SubSeriesPlan{30, 30, 2};
  const std::span<const double> xs(x), ys(y);
  auto lx = [&](std::span<const double> v) { return landscape(series_diagrams(v, s)[0]); };
  const double expect = 0.5 * landscape_distance(lx(xs.first(30)), lx(ys.first(30)), 1) +
                        0.5 * landscape_distance(lx(xs.last(30)), lx(ys.last(30)), 1);
  EXPECT_NEAR(ald(x, y, s), expect, 1e-14);
}

TEST(Dwd, ConstantShiftIsZero) {
  std::mt19937_64 rng(5);
  const auto x = testutil::gaussian_series(rng, 50);
  auto y = x;
  for (auto& v : y) v += 0.37;
  EXPECT_EQ(dwd(x, y, spec_of(DistanceKind::DWD)), 0.0);
  EXPECT_EQ(dld(x, y, spec_of(DistanceKind::DLD)), 0.0);
  EXPECT_EQ(dld(x, x, spec_of(DistanceKind::DLD)), 0.0);
}

TEST(Dwd, ReversalSeparatesWhereWassersteinCannot) {
  std::mt19937_64 rng(6);
  auto s = spec_of(DistanceKind::DWD);
  s.embed_dim = 3;
  s.delay = 2;
  int positive = 0;
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = testutil::gaussian_series(rng, 50);
    auto y = x;
    std::reverse(y.begin(), y.end());
    EXPECT_EQ(wd(x, y, s), 0.0);
    if (dwd(x, y, s) > 0) ++positive;
  }
  EXPECT_GE(positive, 4);
}

TEST(Dwd, AlternatingDifference) {
  // x - y = (0,1,0,1,0,1): the cloud is two points at distance sqrt(2); no loop.
  const std::vector<double> x{0, 1, 0, 1, 0, 1}, y(6, 0.0);
  EXPECT_EQ(dwd(x, y, spec_of(DistanceKind::DWD)), 0.0);
  auto s0 = spec_of(DistanceKind::DWD);
  s0.homology_dim = 0;
  EXPECT_NEAR(dwd(x, y, s0), std::sqrt(2.0) / 2, 1e-15);
}

TEST(Dwd, SquareDifferenceGivesKnownLoop) {
  // delay-embedded (0,0,1,1,0) traces the unit square: H1 = {(1, sqrt 2)}
  const std::vector<double> x{0, 0, 1, 1, 0}, y(5, 0.0);
  const double half = (std::sqrt(2.0) - 1) / 2;
  EXPECT_NEAR(dwd(x, y, spec_of(DistanceKind::DWD)), half, 1e-15);
  EXPECT_NEAR(dld(x, y, spec_of(DistanceKind::DLD)), half * half, 1e-15);
  EXPECT_NEAR(dld(x, y, spec_of(DistanceKind::DLD, kInfinity)), half, 1e-15);
  auto both = spec_of(DistanceKind::DWD, 2.0);
  both.homology_dim = kBothDims;
  // H0 adds three merges at distance 1
  EXPECT_NEAR(dwd(x, y, both), std::sqrt(3 * 0.25 + half * half), 1e-15);
}

TEST(CorrDistance, Examples) {
  const std::vector<double> x{1, 2, 3, 4}, y{1, 3, 2, 4};
  std::vector<double> lin, neg;
  for (double v : x) {
    lin.push_back(2 * v + 3);
    neg.push_back(-v);
  }
  EXPECT_NEAR(corr_distance(x, lin, CorrKind::Pearson), 0.0, 1e-7);
  EXPECT_NEAR(corr_distance(x, neg, CorrKind::Pearson), 2.0, 1e-12);
  EXPECT_NEAR(correlation(x, y, CorrKind::Spearman), 0.8, 1e-15);
  EXPECT_NEAR(corr_distance(x, y, CorrKind::Spearman), std::sqrt(0.4), 1e-15);
  EXPECT_THROW(corr_distance(x, std::vector<double>(4, 1.0), CorrKind::Pearson), DataError);
  EXPECT_THROW(corr_distance(std::vector<double>{1}, std::vector<double>{2}, CorrKind::Pearson), DataError);
}

TEST(CorrDistance, SpearmanTiesUseAverageRanks) {
  const std::vector<double> x{1, 2, 2, 3}, y{1, 2, 3, 4};
  // ranks of x: 1, 2.5, 2.5, 4
  const double rho = correlation(x, y, CorrKind::Spearman);
  EXPECT_NEAR(rho, 4.5 / std::sqrt(4.5 * 5.0), 1e-15);
}

TEST(EuclidSqNeg, Examples) {
  const std::vector<double> a{0, 0}, b{1, 1}, c{3, 4};
  EXPECT_EQ(euclid_sq_neg(a, a), 0.0);
  EXPECT_EQ(euclid_sq_neg(b, a), -2.0);
  EXPECT_EQ(euclid_sq_neg(c, a), -25.0);
  EXPECT_THROW(euclid_sq_neg(a, std::vector<double>{1}), DataError);
}

TEST(Stability, BottleneckAndHausdorffBoundedBySeriesGap) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> scale(0.001, 1.0);
  DistanceSpec s = spec_of(DistanceKind::ABD, kInfinity);
  s.subseries = SubSeriesPlan{64, 64, 1};
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = testutil::gaussian_series(rng, 64);
    auto y = x;
    const double sc = scale(rng);
    for (auto& v : y) v += sc * std::normal_distribution<double>()(rng);
    const double gap = std::sqrt(squared_gap(x, y));
    EXPECT_LE(abd(x, y, s), gap + 1e-9);
    EXPECT_LE(hausdorff_distance(takens_embed(x, 2, 1), takens_embed(y, 2, 1)), gap);
  }
}

TEST(PseudoMetric, AxiomsOnRandomTriples) {
  std::mt19937_64 rng(8);
  for (auto k : {DistanceKind::AWD, DistanceKind::DWD, DistanceKind::ALD, DistanceKind::DLD}) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto x = testutil::gaussian_series(rng, 31), y = testutil::gaussian_series(rng, 31);
      const auto s = spec_of(k);
      const double xy = distance(x, y, s), yx = distance(y, x, s);
      EXPECT_GE(xy, 0.0);
      EXPECT_NEAR(xy, yx, 1e-12);
      EXPECT_EQ(distance(x, x, s), 0.0);
    }
  }
}

TEST(PseudoMetric, TriangleForAveragedDistances) {
  std::mt19937_64 rng(9);
  for (auto k : {DistanceKind::AWD, DistanceKind::ALD}) {
    for (int trial = 0; trial < 50; ++trial) {
      const auto x = testutil::gaussian_series(rng, 31), y = testutil::gaussian_series(rng, 31),
                 z = testutil::gaussian_series(rng, 31);
      const auto s = spec_of(k);
      EXPECT_LE(distance(x, z, s), distance(x, y, s) + distance(y, z, s) + 1e-10);
    }
  }
}

TEST(DistanceMatrix, MatchesPairwiseAndIsThreadIndependent) {
  std::mt19937_64 rng(10);
  std::vector<std::vector<double>> data;
  for (int i = 0; i < 7; ++i) data.push_back(testutil::gaussian_series(rng, 37));
  std::vector<std::span<const double>> views(data.begin(), data.end());
  for (auto k : {DistanceKind::AWD, DistanceKind::DWD, DistanceKind::ALD, DistanceKind::DLD, DistanceKind::WD, DistanceKind::LD,
                 DistanceKind::ABD, DistanceKind::Pearson, DistanceKind::Spearman, DistanceKind::Euclid}) {
    const auto s = spec_of(k);
    const Matrix a = distance_matrix(views, s, 1);
    const Matrix b = distance_matrix(views, s, 3);
    EXPECT_TRUE(a == b) << distance_name(k);
    EXPECT_TRUE(a == a.transpose());
    for (int i = 0; i < 7; ++i) {
      EXPECT_EQ(a(i, i), 0.0);
      for (int j = i + 1; j < 7; ++j) EXPECT_NEAR(a(i, j), distance(data[i], data[j], s), 1e-14) << distance_name(k);
    }
  }
}

TEST(DistanceKind, NameRoundTrip) {
  for (auto k : {DistanceKind::AWD, DistanceKind::DLD, DistanceKind::EuclidSq}) EXPECT_EQ(parse_distance_kind(distance_name(k)), k);
  EXPECT_THROW(parse_distance_kind("XYZ"), ConfigError);
}
