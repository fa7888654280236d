#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "kpzlab/core_paths.hpp"
#include "kpzlab/stats.hpp"

using namespace kpzlab;

namespace {

// Composite Simpson rule on [lo, hi] with an even number of panels.
template <class F>
double simpson(F f, double lo, double hi, int panels = 4000) {
  double h = (hi - lo) / panels, s = f(lo) + f(hi);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4 : 2) * f(lo + i * h);
  return s * h / 3;
}

double gauss_pdf(double w, double var) { return std::exp(-w * w / (2 * var)) / std::sqrt(2 * std::numbers::pi * var); }

// Reflection form of P(sup_{[0,1]}|B| <= z), independent of the Feller series.
double reflection_stay(double z) {
  double s = 0;
  for (int k = -40; k <= 40; ++k)
    s += (k % 2 == 0 ? 1 : -1) * (normal_cdf((2 * k + 1) * z) - normal_cdf((2 * k - 1) * z));
  return s;
}

}  // namespace

TEST(TimeGrid, RejectsBadDomains) {
  EXPECT_THROW(TimeGrid(1.0, 1.0, 4), ValidationError);
  EXPECT_THROW(TimeGrid(0.0, 1.0, 0), ValidationError);
  TimeGrid g(0.0, 2.0, 8);
  EXPECT_DOUBLE_EQ(g.delta(), 0.25);
  EXPECT_EQ(g.index_of(1.5), 6u);
  EXPECT_THROW(g.index_of(0.3), ValidationError);
  EXPECT_EQ(g.node(8), 2.0);
}

TEST(SampleBrownian, RejectsNonPositiveRate) {
  Stream rng(1, "t");
  EXPECT_THROW(sample_brownian(TimeGrid(0, 1, 16), 0.0, rng), ValidationError);
  EXPECT_THROW(sample_bridge(TimeGrid(0, 1, 16), -1.0, 0, 0, rng), ValidationError);
}

TEST(SampleBrownian, SameSeedIsBitIdentical) {
  Stream a(42, "paths"), b(42, "paths");
  TimeGrid g(0, 1, 1024);
  EXPECT_EQ(sample_brownian(g, 2, a).values(), sample_brownian(g, 2, b).values());
  Stream c(42, "paths", 1);
  EXPECT_NE(sample_brownian(g, 2, c).values(), sample_brownian(g, 2, a).values());
}

TEST(SampleBrownian, QuadraticVariationMatchesRate) {
  TimeGrid g(0, 1, 1024);
  std::vector<double> qv;
  for (int r = 0; r < 1000; ++r) {
    Stream rng(7, "qv", r);
    auto p = sample_brownian(g, 2.0, rng);
    double s = 0;
    for (std::size_t j = 1; j < p.size(); ++j) s += (p[j] - p[j - 1]) * (p[j] - p[j - 1]);
    qv.push_back(s / 2.0);
  }
  auto m = moments(qv);
  EXPECT_LT(std::abs(m.mean - 1.0), 3 * m.se_mean());
  EXPECT_LT(std::abs(m.mean - 1.0), 0.1);
}

TEST(SampleBridge, EndpointsArePinnedExactly) {
  Stream rng(3, "bridge");
  auto b = sample_bridge(TimeGrid(0, 0.7, 333), 2.0, 0.0, 0.0, rng);
  EXPECT_EQ(b[0], 0.0);
  EXPECT_EQ(b.values().back(), 0.0);
  auto c = sample_bridge(TimeGrid(-1, 3, 100), 2.0, 1.3, -0.1, rng);
  EXPECT_EQ(c[0], 1.3);
  EXPECT_EQ(c.values().back(), -0.1);
}

TEST(SampleBridge, MidpointMeanAndVariance) {
  TimeGrid g(0, 1, 64);
  std::vector<double> mid_lin, mid_zero;
  for (int r = 0; r < 10000; ++r) {
    Stream rng(11, "bridge-mid", r);
    mid_lin.push_back(sample_bridge(g, 2.0, 0.0, 2.0, rng)[32]);
    mid_zero.push_back(sample_bridge(g, 2.0, 0.0, 0.0, rng)[32]);
  }
  auto a = moments(mid_lin);
  EXPECT_LT(std::abs(a.mean - 1.0), 3 * a.se_mean());
  auto b = moments(mid_zero);
  EXPECT_NEAR(b.variance, 0.5, 0.05);
}

TEST(AffineShift, LinearPathVanishes) {
  TimeGrid g(0, 1, 100);
  std::vector<double> v;
  for (std::size_t j = 0; j <= 100; ++j) v.push_back(3 * g.node(j));
  auto s = affine_shift(SampledPath(g, v), 0.0, 1.0);
  for (double e : s.values()) EXPECT_NEAR(e, 0.0, 1e-15);
}

TEST(AffineShift, QuadraticPlugIn) {
  TimeGrid g(0, 1, 100);
  std::vector<double> v;
  for (std::size_t j = 0; j <= 100; ++j) v.push_back(g.node(j) * g.node(j));
  auto s = affine_shift(SampledPath(g, v), 0.0, 1.0);
  EXPECT_NEAR(s.at(0.5), -0.25, 1e-15);
  EXPECT_EQ(s[0], 0.0);
  EXPECT_EQ(s.values().back(), 0.0);
}

TEST(AffineShift, IdempotentAndRejectsOffGrid) {
  Stream rng(5, "shift");
  auto p = sample_brownian(TimeGrid(0, 2, 256), 2, rng);
  auto once = affine_shift(p, 0.5, 1.5);
  auto twice = affine_shift(once, 0.5, 1.5);
  EXPECT_EQ(once.values(), twice.values());
  EXPECT_THROW(affine_shift(p, 0.501, 1.5), ValidationError);
  EXPECT_THROW(affine_shift(p, 1.5, 0.5), ValidationError);
}

TEST(BridgeRn, PlugInValues) {
  std::vector<double> zero{0.0}, two{2.0};
  EXPECT_NEAR(bridge_rn_density(zero, 1, 1, 2, zero), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(bridge_rn_density(two, 1, 1, 2, zero), std::sqrt(2.0) * std::exp(-1.0), 1e-15);
  EXPECT_THROW(bridge_rn_density(zero, 1, 2, 1, zero), ValidationError);
  EXPECT_THROW(bridge_rn_density(zero, 1, 0, 1, zero), ValidationError);
  EXPECT_THROW(bridge_rn_density(two, 2, 1, 2, zero), ValidationError);
}

TEST(BridgeRn, DensityNormalizesByQuadrature) {
  struct Case { double x, y, a; };
  for (auto c : {Case{1, 2, 0}, Case{1, 2, 1}, Case{0.5, 3, -2}, Case{2, 2.5, 0.7}, Case{0.1, 1, 3}}) {
    double var = 2 * c.x, L = 12 * std::sqrt(var) + std::abs(c.a);
    std::vector<double> a{c.a};
    double mass = simpson([&](double w) { std::vector<double> o{w}; return bridge_rn_density(o, 1, c.x, c.y, a) * gauss_pdf(w, var); }, -L, L);
    EXPECT_NEAR(mass, 1.0, 0.01) << c.x << " " << c.y << " " << c.a;
  }
}

TEST(BridgeRn, LpNormMatchesQuadrature) {
  struct Case { double p; std::size_t m; double x, y, a; };
  for (auto c : {Case{2, 1, 1, 2, 1}, Case{2, 2, 1, 2, 1}, Case{4, 1, 1, 2, 1}, Case{3, 1, 0.5, 1.5, -0.4}}) {
    double var = 2 * c.x, L = 12 * std::sqrt(var) + std::abs(c.a);
    std::vector<double> a(c.m, c.a);
    double integral;
    if (c.m == 1) {
      integral = simpson([&](double w) { std::vector<double> o{w}; return std::pow(bridge_rn_density(o, 1, c.x, c.y, a), c.p) * gauss_pdf(w, var); }, -L, L);
    } else {
      integral = simpson([&](double u) {
        return simpson([&](double v) { std::vector<double> o{u, v}; return std::pow(bridge_rn_density(o, 2, c.x, c.y, a), c.p) * gauss_pdf(u, var) * gauss_pdf(v, var); }, -L, L, 800);
      }, -L, L, 800);
    }
    double quad = std::pow(integral, 1.0 / c.p);
    EXPECT_NEAR(bridge_rn_lp_norm(c.p, c.m, c.x, c.y, a) / quad, 1.0, 0.01) << c.p << " " << c.m;
  }
}

TEST(BridgeRn, LpNormSpecialValues) {
  std::vector<double> z1{0.0}, z2{0.0, 0.0};
  double inf = std::numeric_limits<double>::infinity();
  EXPECT_NEAR(bridge_rn_lp_norm(inf, 1, 1, 2, z1), std::sqrt(2.0), 1e-15);
  // a = 0, m = 2, x = 1, y = 2, p = 2: 2 * 3^{-1/2}.
  EXPECT_NEAR(bridge_rn_lp_norm(2, 2, 1, 2, z2), 2 / std::sqrt(3.0), 1e-14);
  EXPECT_THROW(bridge_rn_lp_norm(1.0, 1, 1, 2, z1), ValidationError);
  std::vector<double> a{0.8};
  double prev = 0;
  for (double p : {1.1, 1.5, 2.0, 4.0, 10.0, 100.0, inf}) {
    double v = bridge_rn_lp_norm(p, 1, 1, 2, a);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(BridgeRn, LinfBoundIsTheSupremum) {
  std::vector<double> a{1.3};
  double best = 0;
  for (double w = -10; w <= 10; w += 1e-3) {
    std::vector<double> o{w};
    best = std::max(best, bridge_rn_density(o, 1, 1, 2, a));
  }
  EXPECT_NEAR(best / bridge_rn_linf_bound(1, 1, 2, a), 1.0, 1e-6);
}

TEST(StayProbability, SeriesAtUnitScale) {
  auto v = bridge_max_stay_prob(1, 1, 5, false);
  EXPECT_NEAR(v.probability, reflection_stay(1.0), 1e-12);
  EXPECT_NEAR(v.probability, 0.37085, 1e-3);
  auto one = bridge_max_stay_prob(1, 1, 1, false);
  EXPECT_NEAR(one.probability, 4 / std::numbers::pi * std::exp(-std::numbers::pi * std::numbers::pi / 8), 1e-15);
  EXPECT_NEAR(one.truncation_bound, 6.3927e-6, 1e-9);
  EXPECT_LE(std::abs(one.probability - reflection_stay(1.0)), one.truncation_bound);
}

TEST(StayProbability, TruncationBoundCertifies) {
  for (double z : {0.3, 0.6, 1.0, 1.5, 2.5})
    for (int terms : {1, 2, 3, 6}) {
      auto v = feller_series(z, terms);
      EXPECT_LE(std::abs(v.probability - reflection_stay(z)), v.truncation_bound + 1e-15) << z << " " << terms;
    }
}

TEST(StayProbability, LargeBarrierTendsToOne) {
  EXPECT_NEAR(bridge_max_stay_prob(50, 1, 200, false).probability, 1.0, 1e-9);
  EXPECT_THROW(bridge_max_stay_prob(0, 1, 3, false), ValidationError);
  // Rate-two chain evaluates at a/(2 sqrt T).
  EXPECT_DOUBLE_EQ(bridge_max_stay_prob(2, 4, 3, true).argument, 0.5);
}

TEST(Lattice, SumsAreExact) {
  Stream rng(9, "lattice");
  auto p = snap_to_lattice(sample_brownian(TimeGrid(0, 1, 64), 2, rng));
  for (std::size_t j = 1; j < p.size(); ++j) {
    double d = p[j] - p[j - 1];
    EXPECT_EQ(d + p[j - 1], p[j]);
  }
}
