#include <gtest/gtest.h>

#include <cmath>

#include "kpzlab/kpz.hpp"

using namespace kpzlab;

namespace {

MelonEnsemble sample_melon(std::uint64_t seed, std::size_t n, std::size_t steps = 2048) {
  Stream rng(seed, "kpz-test");
  return random_melon(n, TimeGrid(0, 2, steps), rng);
}

InitialData wedge(double x, double h = 0.0) { return {{{x, h}}, std::abs(h), {x, x}, std::nullopt}; }

InitialData three_points() { return {{{1.0, 0.3}, {1.2, -0.5}, {1.4, 0.1}}, 1.0, {1.0, 1.5}, std::nullopt}; }

std::vector<double> ys(double lo, double hi, std::size_t count) {
  std::vector<double> v;
  for (std::size_t j = 0; j <= count; ++j) v.push_back(lo + (hi - lo) * j / count);
  return v;
}

}  // namespace

TEST(InitialData, Validation) {
  EXPECT_NO_THROW(three_points().validate());
  InitialData d = three_points();
  d.support.push_back({0.5, 0.0});
  EXPECT_THROW(d.validate(), ValidationError);
  d = three_points();
  d.Mtilde = 0.2;
  EXPECT_THROW(d.validate(), ValidationError);
  d = three_points();
  d.support.push_back({2.0, 0.0});
  EXPECT_THROW(d.validate(), ValidationError);
  EXPECT_THROW(InitialData{}.validate(), ValidationError);
}

TEST(FixedPoint, SingletonEqualsSheet) {
  const std::size_t n = 32;
  auto m = sample_melon(1, n);
  auto y = ys(0.0, 1.0, 8);
  for (double h0 : {0.0, 0.7, -1.3}) {
    auto out = kpz_fixed_point(m, n, wedge(1.1, h0), y);
    ASSERT_EQ(out.h.size(), y.size());
    for (std::size_t j = 0; j < y.size(); ++j) EXPECT_NEAR(out.h[j], h0 + prelimit_airy_sheet(m, n, 1.1, y[j]), 1e-8);
  }
}

TEST(FixedPoint, MaxPlusStructure) {
  const std::size_t n = 32;
  auto m = sample_melon(2, n);
  auto y = ys(0.0, 1.0, 10);
  InitialData a{{{1.0, 0.3}}, 1.0, {1.0, 1.5}, std::nullopt};
  InitialData b{{{1.2, -0.5}, {1.4, 0.1}}, 1.0, {1.0, 1.5}, std::nullopt};
  auto ha = kpz_fixed_point(m, n, a, y), hb = kpz_fixed_point(m, n, b, y);
  auto hu = kpz_fixed_point(m, n, three_points(), y);
  for (std::size_t j = 0; j < y.size(); ++j) {
    EXPECT_EQ(hu.h[j], std::max(ha.h[j], hb.h[j]));
    EXPECT_GE(hu.h[j], ha.h[j]);
  }
  InitialData shifted = three_points();
  for (auto& [x, h] : shifted.support) h += 0.25;
  shifted.Mtilde = 2.0;
  auto hs = kpz_fixed_point(m, n, shifted, y);
  for (std::size_t j = 0; j < y.size(); ++j) EXPECT_NEAR(hs.h[j], hu.h[j] + 0.25, 1e-8);
}

TEST(FixedPoint, WindowErrors) {
  auto m = sample_melon(3, 32);
  EXPECT_THROW(kpz_fixed_point(m, 32, wedge(1.0), {5.0}), WindowError);
  EXPECT_THROW(kpz_fixed_point(m, 32, wedge(1.0), {-2.0}), WindowError);
  EXPECT_THROW(kpz_fixed_point(m, 16, wedge(1.0), {0.0}), ValidationError);
}

TEST(Boundary, FirstEntryIsFixedPointAtZero) {
  const std::size_t n = 32;
  auto m = sample_melon(4, n);
  auto d = three_points();
  auto bd = boundary_data(m, n, d, 1, n);
  ASSERT_EQ(bd.G.size(), 1u);
  EXPECT_TRUE(bd.exact_start && bd.stabilized);
  double want = kNegInf;
  for (auto [x, h] : d.support) want = std::max(want, h + prelimit_airy_sheet(m, n, x, 0.0));
  EXPECT_NEAR(bd.G[0], want, 1e-8);
  EXPECT_NEAR(bd.G[0], kpz_fixed_point(m, n, d, {0.0}).h[0], 1e-8);
}

TEST(Boundary, DifferencesObeyTriangleBound) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t n = 32;
    auto m = sample_melon(10 + seed, n);
    auto d = three_points();
    auto bd = boundary_data(m, n, d, 6, n);
    ScaledCoordinates sc(n, m.grid());
    double spread = 0, lpp_term = 0;
    for (auto [x1, h1] : d.support)
      for (auto [x2, h2] : d.support) spread = std::max(spread, std::abs(h1 - h2));
    for (std::size_t l = 2; l <= 6; ++l) {
      for (auto [x, h] : d.support) {
        ForwardLpp dp(m.inner, sc.x_index(x), static_cast<int>(n), 1, TieBreak::rightmost, sc.origin_index());
        lpp_term = std::max(lpp_term, sc.s() * std::abs(dp.value(static_cast<int>(l), sc.origin_index()) -
                                                         dp.value(1, sc.origin_index())));
      }
      EXPECT_LE(std::abs(bd.G[l - 1] - bd.G[0]), spread + lpp_term + 1e-9);
      EXPECT_LE(bd.G[l - 1], bd.G[0]);
    }
  }
}

TEST(Boundary, ConstantShiftCancelsInDifferences) {
  const std::size_t n = 32;
  auto m = sample_melon(5, n);
  auto a = boundary_data(m, n, wedge(1.0, 0.0), 5, n);
  auto b = boundary_data(m, n, wedge(1.0, 0.9), 5, n);
  for (std::size_t l = 1; l < 5; ++l) EXPECT_NEAR(a.G[l] - a.G[0], b.G[l] - b.G[0], 1e-8);
}

TEST(Boundary, DeepStartReportsStabilization) {
  const std::size_t n = 64;
  auto m = sample_melon(6, n, 4096);
  auto bd = boundary_data(m, n, wedge(1.0), 3, 6);
  EXPECT_FALSE(bd.exact_start);
  EXPECT_EQ(bd.k_start, 6u);
  EXPECT_EQ(bd.stabilized, bd.stabilization_gap <= 1e-6);
  EXPECT_EQ(bd.G.size(), 3u);
  // Depth 1 reproduces S(x, 0) for every deep start.
  EXPECT_NEAR(bd.G[0], prelimit_airy_sheet(m, n, 1.0, 0.0), 1e-8);
  // sqrt(60 / 2) = 5.5 Airy units back lies before the grid.
  EXPECT_THROW(boundary_data(m, n, wedge(1.0), 3, 60), WindowError);
  EXPECT_THROW(boundary_data(m, n, wedge(1.0), 0, 6), ValidationError);
}

TEST(Truncation, DepthOneIsTopLineIncrement) {
  const std::size_t n = 32;
  auto m = sample_melon(7, n);
  auto d = three_points();
  auto bd = boundary_data(m, n, d, 4, n);
  auto proxy = AiryWindowProxy::from_melon(m, n);
  TimeGrid yg(0, 1, 8);
  auto a = rescale_to_airy(m, n, yg);
  std::vector<double> y = ys(0, 1, 8);
  auto h1 = finite_depth_truncation(proxy, bd, 1, y);
  for (std::size_t j = 0; j < y.size(); ++j) EXPECT_NEAR(h1.h[j], bd.G[0] + a.line(1)[j] - a.line(1)[0], 1e-8);
  std::vector<double> prev = h1.h;
  for (std::size_t depth = 2; depth <= 4; ++depth) {
    auto hm = finite_depth_truncation(proxy, bd, depth, y);
    for (std::size_t j = 0; j < y.size(); ++j) EXPECT_GE(hm.h[j], prev[j]);
    prev = hm.h;
  }
  EXPECT_THROW(finite_depth_truncation(proxy, bd, 5, y), ValidationError);
  EXPECT_THROW(finite_depth_truncation(proxy, bd, 2, {-0.5}), WindowError);
}

TEST(Truncation, EqualsFixedPointWhenInterceptIsShallow) {
  std::size_t hits = 0, misses = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 32, depth = 4;
    auto m = sample_melon(20 + seed, n);
    const double x0 = 1.0;
    auto bd = boundary_data(m, n, wedge(x0), depth, n);
    auto proxy = AiryWindowProxy::from_melon(m, n);
    auto y = ys(0, 1, 8);
    auto h = kpz_fixed_point(m, n, wedge(x0), y);
    auto hm = finite_depth_truncation(proxy, bd, depth, y);
    for (std::size_t j = 0; j < y.size(); ++j) {
      EXPECT_LE(hm.h[j], h.h[j]);
      if (intercept_line(m, n, x0, y[j]) <= static_cast<int>(depth)) {
        EXPECT_EQ(hm.h[j], h.h[j]) << seed << " y " << y[j];
        ++hits;
      } else {
        ++misses;
      }
    }
  }
  EXPECT_GT(hits, 0u);
}

TEST(Increments, AnchoredAndShiftInvariant) {
  const std::size_t n = 32;
  auto m = sample_melon(8, n);
  auto y = ys(0.0, 1.0, 8);
  auto inc = increment_process(kpz_fixed_point(m, n, wedge(1.0), y), 0.25);
  EXPECT_EQ(inc[0], 0.0);
  EXPECT_EQ(inc.size(), 7u);
  EXPECT_DOUBLE_EQ(inc.grid().b(), 0.75);
  auto inc2 = increment_process(kpz_fixed_point(m, n, wedge(1.0, 0.6), y), 0.25);
  for (std::size_t j = 0; j < inc.size(); ++j) EXPECT_NEAR(inc[j], inc2[j], 1e-9);
  EXPECT_THROW(increment_process(kpz_fixed_point(m, n, wedge(1.0), y), 0.3), ValidationError);
  EXPECT_THROW(increment_process(kpz_fixed_point(m, n, wedge(1.0), y), 1.0), ValidationError);
}
