#include <gtest/gtest.h>

#include "brute_force.hpp"
#include "kpzlab/lpp.hpp"

using namespace kpzlab;

namespace {

PathEnsemble from_functions(const TimeGrid& g, std::vector<std::function<double(double)>> fs) {
  std::vector<SampledPath> lines;
  for (auto& f : fs) {
    std::vector<double> v;
    for (std::size_t j = 0; j < g.size(); ++j) v.push_back(f(g.node(j)));
    lines.emplace_back(g, v);
  }
  return PathEnsemble(lines);
}

PathEnsemble random_env(std::uint64_t seed, std::size_t lines, std::size_t steps) {
  Stream rng(seed, "lpp-test");
  return sample_environment(TimeGrid(0, 1, steps), lines, 2.0, rng);
}

}  // namespace

TEST(PathLength, SingleLineAndHandExample) {
  TimeGrid g(0, 1, 4);
  auto env = from_functions(g, {[](double) { return 0.0; }, [](double t) { return t; }});
  EXPECT_EQ(path_length(env, {{0.25, 1}, {0.75, 1}, {}}), 0.0);
  EXPECT_DOUBLE_EQ(path_length(env, {{0.0, 2}, {1.0, 1}, {1.0}}), 1.0);
  auto flat = from_functions(g, {[](double) { return 3.0; }, [](double) { return -1.0; }});
  EXPECT_EQ(path_length(flat, {{0.0, 2}, {1.0, 1}, {0.5}}), 0.0);
  EXPECT_THROW(path_length(env, {{0.0, 2}, {1.0, 1}, {0.3}}), ValidationError);
  EXPECT_THROW(path_length(env, {{0.0, 3}, {1.0, 1}, {0.5, 0.5}}), ValidationError);
}

TEST(LastPassage, OneLineAndTwoLineHandValue) {
  TimeGrid g(0, 1, 8);
  auto env = from_functions(g, {[](double) { return 0.0; }, [](double t) { return t; }});
  auto one = last_passage(env, {0.25, 1}, {0.75, 1});
  EXPECT_EQ(one.value, 0.0);
  EXPECT_TRUE(one.geodesic.jumps.empty());
  auto two = last_passage(env, {0.0, 2}, {1.0, 1});
  EXPECT_DOUBLE_EQ(two.value, 1.0);
  ASSERT_EQ(two.geodesic.jumps.size(), 1u);
  EXPECT_EQ(two.geodesic.jumps[0], 1.0);
  EXPECT_TRUE(two.rightmost());
  EXPECT_THROW(last_passage(env, {0.0, 1}, {1.0, 2}), ValidationError);
  EXPECT_THROW(last_passage(env, {0.5, 2}, {0.25, 1}), ValidationError);
}

TEST(LastPassage, TieBreaksPickExtremeMaximizers) {
  // Constant lines: every path has length 0, so rightmost jumps at y and leftmost at x.
  TimeGrid g(0, 1, 8);
  auto env = from_functions(g, {[](double) { return 0.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }});
  auto r = last_passage(env, {0.25, 3}, {0.75, 1}, TieBreak::rightmost);
  auto l = last_passage(env, {0.25, 3}, {0.75, 1}, TieBreak::leftmost);
  EXPECT_EQ(r.geodesic.jumps, (std::vector<double>{0.75, 0.75}));
  EXPECT_EQ(l.geodesic.jumps, (std::vector<double>{0.25, 0.25}));
}

TEST(LastPassage, MatchesBruteForceExactly) {
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    std::size_t lines = 2 + seed % 3, steps = 8 + 4 * (seed % 7);
    auto env = random_env(seed, lines, steps);
    const auto& g = env.grid();
    std::size_t x = seed % 3, y = steps - seed % 2;
    int l = static_cast<int>(lines), m = 1 + static_cast<int>(seed % 2 == 0 && lines > 2);
    BruteForce bf(env, x, l, y, m);
    auto r = last_passage(env, {g.node(x), l}, {g.node(y), m}, TieBreak::rightmost);
    auto lf = last_passage(env, {g.node(x), l}, {g.node(y), m}, TieBreak::leftmost);
    EXPECT_EQ(r.value, bf.best) << seed;
    EXPECT_EQ(lf.value, bf.best) << seed;
    std::vector<std::size_t> rj, lj;
    for (double t : r.geodesic.jumps) rj.push_back(g.index_of(t));
    for (double t : lf.geodesic.jumps) lj.push_back(g.index_of(t));
    for (const auto& mx : bf.maximizers)
      for (std::size_t i = 0; i < mx.size(); ++i) {
        EXPECT_GE(rj[i], mx[i]) << seed;
        EXPECT_LE(lj[i], mx[i]) << seed;
      }
    EXPECT_EQ(path_length(env, r.geodesic), r.value);
    EXPECT_EQ(path_length(env, lf.geodesic), lf.value);
  }
}

TEST(LastPassage, MonotoneUnderNonNegativeBump) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto env = random_env(100 + seed, 4, 64);
    double before = last_passage(env, {0.0, 4}, {1.0, 1}).value;
    auto bumped = env;
    auto& v = bumped.mutable_lines()[seed % 4].mutable_values();
    for (std::size_t j = 20; j < v.size(); ++j) v[j] += 0.25;
    EXPECT_GE(last_passage(bumped, {0.0, 4}, {1.0, 1}).value, before);
  }
}

TEST(MetricComposition, SingleLineIsTelescoping) {
  auto env = random_env(7, 1, 64);
  EXPECT_EQ(check_metric_composition(env, {0.0, 1}, {1.0, 1}, 1, CompositionMode::same_line), 0.0);
  EXPECT_EQ(check_metric_composition(env, {0.0, 1}, {1.0, 1}, 1, CompositionMode::point_split), 0.0);
  EXPECT_THROW(check_metric_composition(env, {0.0, 1}, {1.0, 1}, 1, CompositionMode::line_split), ValidationError);
}

TEST(MetricComposition, AllModesOnRandomEnsembles) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto env = random_env(200 + seed, 4, 256);
    LatticePoint from{0.0, 4}, to{1.0, 1};
    for (int k = 1; k <= 4; ++k) {
      EXPECT_LE(check_metric_composition(env, from, to, k, CompositionMode::same_line), 1e-9);
      if (k >= 2) {
        EXPECT_LE(check_metric_composition(env, from, to, k, CompositionMode::line_split), 1e-9);
      }
    }
    EXPECT_LE(check_metric_composition(env, from, to, 1, CompositionMode::point_split), 1e-9);
  }
}

TEST(MetricComposition, PointSplitAgainstBruteForce) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto env = random_env(300 + seed, 3, 12);
    const auto& g = env.grid();
    std::size_t z = 1 + seed % 11;
    BruteForce whole(env, 0, 3, 12, 1);
    double best = -1e300;
    for (int k = 1; k <= 3; ++k) {
      double left = BruteForce(env, 0, 3, z, k).best, right = BruteForce(env, z, k, 12, 1).best;
      best = std::max(best, left + right);
    }
    EXPECT_EQ(best, whole.best);
    EXPECT_EQ(check_metric_composition(env, {0.0, 3}, {1.0, 1}, 1, CompositionMode::point_split, g.node(z)), 0.0);
  }
}

TEST(InhomogeneousBlpp, OneLineAndEqualBoundary) {
  auto env = random_env(11, 3, 32);
  auto h1 = inhomogeneous_blpp({0.5}, env);
  for (std::size_t j = 0; j < h1.size(); ++j) EXPECT_EQ(h1[j], 0.5 + env.line(1)[j]);
  auto heq = inhomogeneous_blpp({0.25, 0.25, 0.25}, env);
  ForwardLpp dp(env, 0, 3, 1);
  for (std::size_t j = 0; j < heq.size(); ++j) EXPECT_EQ(heq[j], 0.25 + dp.value(1, j));
}

TEST(InhomogeneousBlpp, MatchesComponentwiseOracle) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    auto env = random_env(400 + seed, 3, 16);
    const auto& g = env.grid();
    std::vector<double> gv{0.75, lattice_round(0.3 - 0.01 * seed), -0.5};
    auto h = inhomogeneous_blpp(gv, env);
    for (std::size_t j = 0; j < g.size(); ++j) {
      double oracle = -1e300;
      for (int l = 1; l <= 3; ++l) oracle = std::max(oracle, gv[l - 1] + BruteForce(env, 0, l, j, 1).best);
      EXPECT_EQ(h[j], oracle) << seed << " " << j;
    }
  }
}

TEST(InhomogeneousBlpp, RejectsIncreasingBoundary) {
  auto env = random_env(12, 3, 16);
  EXPECT_THROW(inhomogeneous_blpp({0.0, 1.0}, env), ValidationError);
}
