#include "tdaport/market_data.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace tdaport;

namespace {

std::string write_temp(const std::string& name, const std::string& body) {
  const auto p = std::filesystem::temp_directory_path() / ("tdaport_md_" + name);
  std::ofstream(p) << body;
  return p.string();
}

template <typename F>
std::string error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(LoadCsv, ThreeRows) {
  const auto path = write_temp("ok.csv", "date,SPX,AAA\n2020-01-01,100,50\n2020-01-02,101,51\n2020-01-03,102,52\n");
  const auto p = load_csv_prices(path, "SPX");
  EXPECT_EQ(p.periods(), 3u);
  EXPECT_EQ(p.assets(), 1u);
  EXPECT_EQ(p.asset_ids[0], "AAA");
  EXPECT_DOUBLE_EQ(p.index_prices[2], 102);
  EXPECT_DOUBLE_EQ(p.asset_prices(0, 1), 51);
}

TEST(LoadCsv, IndexColumnNeedNotBeFirst) {
  const auto path = write_temp("order.csv", "date,AAA,SPX,BBB\n1,5,100,7\n2,6,101,8\n");
  const auto p = load_csv_prices(path, "SPX");
  ASSERT_EQ(p.assets(), 2u);
  EXPECT_EQ(p.asset_ids[1], "BBB");
  EXPECT_DOUBLE_EQ(p.index_prices[1], 101);
}

TEST(LoadCsv, NonPositivePrice) {
  const auto path = write_temp("zero.csv", "date,SPX,AAA\n1,100,50\n2,101,0\n3,102,52\n");
  EXPECT_NE(error_of([&] { load_csv_prices(path, "SPX"); }).find("non-positive price"), std::string::npos);
}

TEST(LoadCsv, ShuffledDates) {
  const auto path = write_temp("shuf.csv", "date,SPX,AAA\n2020-01-02,100,50\n2020-01-01,101,51\n2020-01-03,102,52\n");
  EXPECT_NE(error_of([&] { load_csv_prices(path, "SPX"); }).find("dates not increasing"), std::string::npos);
}

TEST(LoadCsv, MissingRowsDropped) {
  const auto path = write_temp("miss.csv", "date,SPX,AAA\n1,100,50\n2,,51\n3,102,NA\n4,103,53\n");
  const auto p = load_csv_prices(path, "SPX");
  ASSERT_EQ(p.periods(), 2u);
  EXPECT_EQ(p.dates[1], "4");
}

TEST(LoadCsv, Errors) {
  EXPECT_THROW(load_csv_prices("/nonexistent/file.csv", "SPX"), DataError);
  EXPECT_THROW(load_csv_prices(write_temp("noidx.csv", "date,AAA\n1,2\n2,3\n"), "SPX"), DataError);
  EXPECT_THROW(load_csv_prices(write_temp("one.csv", "date,SPX,AAA\n1,2,3\n"), "SPX"), DataError);
  const auto msg = error_of([&] { load_csv_prices(write_temp("bad.csv", "date,SPX,AAA\n1,2,3\n2,x,3\n"), "SPX"); });
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(LoadOrlib, SeriesMajorIndexFirst) {
  // N=2, T=3: index, S1, S2
  std::string body = "2\n";
  body += "100 101 102\n 10 11 12\n 20 21 22\n";
  IndtrackLayout lay;
  lay.default_periods = 3;
  const auto p = load_orlib_indtrack(write_temp("ot.txt", body), lay);
  EXPECT_EQ(p.assets(), 2u);
  EXPECT_EQ(p.periods(), 3u);
  EXPECT_DOUBLE_EQ(p.index_prices[1], 101);
  EXPECT_DOUBLE_EQ(p.asset_prices(1, 2), 22);
  EXPECT_EQ(p.dates.front(), "1");
  EXPECT_EQ(p.dates.back(), "3");
}

TEST(LoadOrlib, TimeMajorIndexLast) {
  std::string body = "2 3\n10 20 100\n11 21 101\n12 22 102\n";
  IndtrackLayout lay;
  lay.major = IndtrackLayout::Major::Time;
  lay.index_first = false;
  const auto p = load_orlib_indtrack(write_temp("ot2.txt", body), lay);
  EXPECT_DOUBLE_EQ(p.index_prices[2], 102);
  EXPECT_DOUBLE_EQ(p.asset_prices(0, 1), 11);
  EXPECT_DOUBLE_EQ(p.asset_prices(1, 0), 20);
}

TEST(LoadOrlib, Truncated) {
  const auto msg = error_of([&] { load_orlib_indtrack(write_temp("trunc.txt", "31\n1 2 3\n")); });
  EXPECT_NE(msg.find("token count mismatch"), std::string::npos) << msg;
  EXPECT_THROW(load_orlib_indtrack(write_temp("nonnum.txt", "1\n1 2 abc\n")), DataError);
}

TEST(Returns, Examples) {
  EXPECT_NEAR(series_returns(std::vector<double>{100, 110}, ReturnKind::Simple)[0], 0.10, 1e-15);
  const auto z = series_returns(std::vector<double>{100, 100, 100}, ReturnKind::Log);
  EXPECT_EQ(z, (Series{0, 0}));
  const auto l = series_returns(std::vector<double>{100, 110, 99}, ReturnKind::Log);
  EXPECT_NEAR(l[0], std::log(1.1), 1e-15);
  EXPECT_NEAR(l[1], std::log(0.9), 1e-15);
}

TEST(Returns, LogSimpleRoundTrip) {
  std::mt19937_64 rng(7);
  std::lognormal_distribution<double> ln(0.0, 0.03);
  PricePanel p;
  const int T = 50;
  p.asset_prices.resize(3, T);
  double px = 100;
  for (int t = 0; t < T; ++t) {
    p.dates.push_back(std::to_string(t));
    px *= ln(rng);
    p.index_prices.push_back(px);
    for (int i = 0; i < 3; ++i) p.asset_prices(i, t) = 10 + i + t * ln(rng);
  }
  p.asset_ids = {"a", "b", "c"};
  const auto r = compute_returns(p, ReturnKind::Simple);
  const auto g = compute_returns(p, ReturnKind::Log);
  ASSERT_EQ(r.periods(), static_cast<std::size_t>(T - 1));
  ASSERT_EQ(r.asset_returns.cols(), T - 1);
  for (int t = 0; t < T - 1; ++t) {
    EXPECT_NEAR(g.index_returns[t], std::log1p(r.index_returns[t]), 1e-12);
    for (int i = 0; i < 3; ++i) {
      EXPECT_GT(r.asset_returns(i, t), -1.0);
      EXPECT_NEAR(g.asset_returns(i, t), std::log1p(r.asset_returns(i, t)), 1e-12);
    }
  }
}

TEST(Windows, Examples) {
  EXPECT_EQ(make_windows(168, 126, 21, 21).size(), 2u);
  EXPECT_EQ(make_windows(147, 126, 21, 21).size(), 1u);
  const auto w = make_windows(31, 21, 5, 5);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[1].in_start, 5u);
  EXPECT_EQ(w[1].out_end, 31u);
  EXPECT_THROW(make_windows(10, 8, 3, 1), ConfigError);
  EXPECT_THROW(make_windows(10, 5, 3, 0), ConfigError);
}

TEST(Windows, OutOfSampleSegmentsDisjointWhenStepEqualsOutLen) {
  for (std::size_t T : {60u, 97u, 250u}) {
    const auto w = make_windows(T, 20, 7, 7);
    for (std::size_t k = 0; k < w.size(); ++k) {
      EXPECT_LT(w[k].in_start, w[k].in_end);
      EXPECT_EQ(w[k].in_end, w[k].out_start);
      EXPECT_LE(w[k].out_end, T);
      if (k > 0) EXPECT_LE(w[k - 1].out_end, w[k].out_start) << "overlap";
    }
  }
}

TEST(SubSeries, Examples) {
  const Series x{1, 2, 3, 4, 5, 6};
  const auto s = make_subseries(x, 4, 2);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0], (Series{1, 2, 3, 4}));
  EXPECT_EQ(s[1], (Series{3, 4, 5, 6}));
  EXPECT_EQ(make_subseries(x, 6, 3), std::vector<Series>{x});
  EXPECT_THROW(make_subseries(Series{1, 2, 3, 4, 5, 6, 7}, 4, 2), ConfigError);
  EXPECT_THROW(make_subseries(x, 7, 1), ConfigError);
}

TEST(SubSeries, DisjointBlocksReconstruct) {
  Series x(24);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(static_cast<double>(i));
  for (std::size_t l : {1u, 2u, 3u, 4u, 6u, 8u, 12u, 24u}) {
    Series joined;
    for (const auto& s : make_subseries(x, l, l)) joined.insert(joined.end(), s.begin(), s.end());
    EXPECT_EQ(joined, x);
  }
}

TEST(SubSeries, DefaultPlanSatisfiesConstraint) {
  for (std::size_t T = 1; T <= 400; ++T) {
    const auto p = default_subseries_plan(T);
    ASSERT_GE(p.shift, 1u);
    ASSERT_LE(p.shift, p.length);
    ASSERT_LE(p.length, T);
    EXPECT_EQ(T - p.length, p.shift * (p.count - 1)) << T;
  }
  const auto p = default_subseries_plan(125);
  EXPECT_EQ(p.length, 41u);
  EXPECT_EQ(p.shift, 21u);
  EXPECT_EQ(p.count, 5u);
}

TEST(Weights, Validation) {
  EXPECT_NO_THROW(validate_weights(uniform_weights(3), 3));
  EXPECT_NO_THROW(validate_weights({0.2, 0.8}, 2));
  EXPECT_THROW(validate_weights({0.5, 0.6}, 2), ConfigError);
  EXPECT_THROW(validate_weights({1.0, 0.0}, 2), ConfigError);
  EXPECT_THROW(validate_weights({1.0}, 2), ConfigError);
}
