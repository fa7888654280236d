#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "kpzlab/gibbs.hpp"
#include "kpzlab/melon.hpp"

using namespace kpzlab;

namespace {

NoIntSpec two_bridges(double top, double bottom, std::size_t steps) {
  NoIntSpec s;
  s.k = 2;
  s.grid = TimeGrid(0, 1, steps);
  s.entry = EndpointVector({top, bottom});
  s.exit = EndpointVector({top, bottom});
  return s;
}

// Largest excess of the empirical CDF of a over that of b.
double one_sided_ks(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size());
  }
  return d;
}

}  // namespace

TEST(NoInt, VacuousConstraintAcceptsEverything) {
  NoIntSpec s;
  s.k = 1;
  s.grid = TimeGrid(0, 1, 64);
  s.entry = EndpointVector({0.0});
  s.exit = EndpointVector({0.5});
  Stream rng(1, "gibbs-test");
  auto est = acceptance_probability(s, 200, rng);
  EXPECT_EQ(est.p_hat, 1.0);
  EXPECT_TRUE(est.ci95.contains(est.p_hat));

  s.floor = SampledPath(s.grid, std::vector<double>(65, -1e6), 2.0);
  EXPECT_EQ(acceptance_probability(s, 100, rng).p_hat, 1.0);
  EXPECT_THROW(acceptance_probability(s, 99, rng), ValidationError);
}

TEST(NoInt, WideGapsGiveOrderedSamples) {
  auto s = two_bridges(50.0, 0.0, 128);
  Stream rng(2, "gibbs-test");
  for (int r = 0; r < 20; ++r) {
    auto e = sample_noint_bridges(s, rng);
    for (std::size_t j = 0; j <= 128; ++j) EXPECT_GT(e.line(1)[j], e.line(2)[j]);
    EXPECT_EQ(e.line(1)[0], 50.0);
    EXPECT_EQ(e.line(2)[128], 0.0);
  }
}

TEST(NoInt, SpecValidation) {
  auto s = two_bridges(1.0, 0.0, 16);
  s.entry = EndpointVector({0.0, 1.0}, false);
  EXPECT_THROW(s.validate(), ValidationError);
  s = two_bridges(1.0, 0.0, 16);
  s.floor = SampledPath(s.grid, std::vector<double>(17, 0.5), 2.0);
  EXPECT_THROW(s.validate(), ValidationError);
  s.floor.reset();
  s.region = {{0.5, 2.0}};
  EXPECT_THROW(s.validate(), ValidationError);
}

TEST(NoInt, ExhaustionIsReported) {
  auto s = two_bridges(1e-3, 0.0, 256);
  s.floor = SampledPath(s.grid, std::vector<double>(257, -1e-3), 2.0);
  Stream rng(3, "gibbs-test");
  try {
    sample_noint_bridges(s, rng, 50);
    FAIL() << "expected exhaustion";
  } catch (const SamplerExhausted& e) {
    EXPECT_EQ(e.attempts(), 50u);
  }
}

TEST(NoInt, AcceptanceMatchesUnconditionedBruteForce) {
  auto s = two_bridges(1.0, 0.0, 64);
  Stream rng(4, "gibbs-est");
  auto est = acceptance_probability(s, 20000, rng);

  Stream raw(4, "gibbs-brute");
  const std::size_t trials = 100000;
  std::size_t ok = 0;
  for (std::size_t r = 0; r < trials; ++r) {
    auto b1 = sample_bridge(s.grid, 2.0, 1.0, 1.0, raw);
    auto b2 = sample_bridge(s.grid, 2.0, 0.0, 0.0, raw);
    bool good = true;
    for (std::size_t j = 0; j <= 64 && good; ++j) good = b1[j] > b2[j];
    ok += good;
  }
  double p = static_cast<double>(ok) / trials;
  double se = std::sqrt(p * (1 - p) / trials + est.p_hat * (1 - est.p_hat) / est.n_trials);
  EXPECT_LT(std::abs(p - est.p_hat), 3 * se) << p << " vs " << est.p_hat;
}

// The gap of two rate-2 bridges is a rate-4 bridge from 2 to 2; reflection gives
// P(gap stays positive) = 1 - exp(-2 * 2 * 2 / 4) = 1 - e^{-2}. Node-only monitoring is matched
// by shifting the barrier by 0.5826 sigma sqrt(dt).
TEST(NoInt, AcceptanceMatchesReflectionFormula) {
  const std::size_t steps = 1024;
  auto s = two_bridges(2.0, 0.0, steps);
  Stream rng(5, "gibbs-refl");
  auto est = acceptance_probability(s, 20000, rng);
  const double shift = 0.5826 * 2.0 * std::sqrt(1.0 / steps);
  const double oracle = 1.0 - std::exp(-2.0 * (2.0 + shift) * (2.0 + shift) / 4.0);
  const double se = std::sqrt(oracle * (1 - oracle) / est.n_trials);
  EXPECT_LT(std::abs(est.p_hat - oracle), 3 * se) << est.p_hat << " vs " << oracle;
  EXPECT_NEAR(1.0 - std::exp(-2.0), 0.8647, 1e-4);
}

TEST(NoInt, IndependentEstimatorsAgree) {
  auto s = two_bridges(0.7, 0.0, 128);
  s.k = 3;
  s.entry = EndpointVector({1.4, 0.7, 0.0});
  s.exit = EndpointVector({1.0, 0.5, 0.0});
  Stream a(6, "est-a"), b(6, "est-b");
  auto e1 = acceptance_probability(s, 5000, a), e2 = acceptance_probability(s, 5000, b);
  double se = std::sqrt(e1.p_hat * (1 - e1.p_hat) / 5000 + e2.p_hat * (1 - e2.p_hat) / 5000);
  EXPECT_LT(std::abs(e1.p_hat - e2.p_hat), 3 * se + 1e-12);
}

TEST(NoInt, EndpointLiftDominatesLowerLine) {
  auto base = two_bridges(0.5, 0.0, 64);
  auto lift = two_bridges(0.9, 0.4, 64);
  Stream r1(7, "lift-base"), r2(7, "lift-up");
  std::vector<double> lo, hi;
  for (int r = 0; r < 1500; ++r) {
    lo.push_back(sample_noint_bridges(base, r1).line(2)[32]);
    hi.push_back(sample_noint_bridges(lift, r2).line(2)[32]);
  }
  const double crit = std::sqrt(-0.5 * std::log(0.00135) * 2.0 / 1500.0);
  EXPECT_LT(one_sided_ks(hi, lo), crit);
  EXPECT_GT(one_sided_ks(lo, hi), crit);
}

TEST(GibbsResample, FarFloorGivesBridgeMeanAndExactPinning) {
  TimeGrid g(0, 1, 200);
  std::vector<double> top(201), low(201, -100.0);
  for (std::size_t j = 0; j <= 200; ++j) top[j] = std::sin(7.0 * g.node(j));
  PathEnsemble env(std::vector<SampledPath>{SampledPath(g, top, 2.0), SampledPath(g, low, 2.0)});
  Stream rng(8, "resample");
  std::vector<double> mid;
  for (int r = 0; r < 1000; ++r) {
    auto out = gibbs_resample(env, 1, 0.2, 0.6, rng);
    mid.push_back(out.line(1)[80]);
    EXPECT_EQ(out.line(1)[40], top[40]);
    EXPECT_EQ(out.line(1)[120], top[120]);
    EXPECT_EQ(out.line(1)[10], top[10]);
    EXPECT_EQ(out.line(1)[150], top[150]);
    EXPECT_EQ(out.line(2).values(), low);
  }
  auto mo = moments(mid);
  const double interp = 0.5 * (top[40] + top[120]);
  EXPECT_LT(std::abs(mo.mean - interp), 3 * mo.se_mean());
  // Bridge variance at the midpoint of a strip of width 0.4, rate 2: 2 * 0.2 * 0.2 / 0.4.
  EXPECT_LT(std::abs(mo.variance - 0.2), 3 * mo.se_variance());
}

TEST(GibbsResample, RespectsFloorAndValidates) {
  Stream rng(9, "resample");
  auto m = random_melon(4, TimeGrid(0, 1, 256), rng, 2.0);
  auto out = gibbs_resample(m.inner, 2, 0.25, 0.5, rng);
  for (std::size_t j = 64; j <= 128; ++j) {
    EXPECT_GT(out.line(1)[j], out.line(2)[j]);
    EXPECT_GT(out.line(2)[j], out.line(3)[j]);
  }
  EXPECT_THROW(gibbs_resample(m.inner, 4, 0.25, 0.5, rng), ValidationError);
  EXPECT_THROW(gibbs_resample(m.inner, 1, 0.5, 0.25, rng), ValidationError);
}

TEST(ShiftTilt, ClosedFormCases) {
  TimeGrid g(0, 3, 30);
  PathEnsemble f(std::vector<SampledPath>{SampledPath(g, std::vector<double>(31, 2.0), 2.0)});
  EXPECT_EQ(bridge_shift_tilt(f, 0, 0, 1, 2, EndpointVector({1.0}), EndpointVector({1.0})), 1.0);
  EXPECT_NEAR(bridge_shift_tilt(f, 1, 0, 1, 2, EndpointVector({1.0}), EndpointVector({1.0})), std::exp(-0.75), 1e-15);
  EXPECT_NEAR(bridge_shift_tilt(f, 1, 0.5, 1, 2, EndpointVector({5.0}), EndpointVector({5.0})),
              std::exp(-1.5 * 1.5 / 4), 1e-15);
  EXPECT_THROW(bridge_shift_tilt(f, 1, 0, 2, 1, EndpointVector({1.0}), EndpointVector({1.0})), ValidationError);
  EXPECT_THROW(bridge_shift_tilt(f, -1, 0, 1, 2, EndpointVector({1.0}), EndpointVector({1.0})), ValidationError);
}
