#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "kpzlab/gibbs.hpp"
#include "kpzlab/harness.hpp"
#include "kpzlab/meagre.hpp"

namespace kpzlab {

struct CriterionResult {
  int id;
  std::string name;
  bool passed;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  std::function<CriterionResult()> run;
};

namespace verify_detail {

inline std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

// Exhaustive oracle: every non-decreasing jump vector from (x, l) to (y, m), iteratively.
inline double enumerate_best(const PathEnsemble& env, std::size_t x, int l, std::size_t y, int m) {
  const std::size_t jumps = static_cast<std::size_t>(l - m);
  std::vector<std::size_t> j(jumps, x);
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    double len = 0;
    std::size_t prev = x;
    for (std::size_t i = 0; i <= jumps; ++i) {
      std::size_t next = i < jumps ? j[i] : y;
      const auto& f = env.line(static_cast<std::size_t>(l) - i);
      len += f[next] - f[prev];
      prev = next;
    }
    best = std::max(best, len);
    // advance as an odometer over x <= j[0] <= ... <= j[jumps-1] <= y
    std::size_t i = jumps;
    while (i > 0 && j[i - 1] == y) --i;
    if (i == 0) break;
    ++j[i - 1];
    for (std::size_t r = i; r < jumps; ++r) j[r] = j[i - 1];
  }
  return best;
}

template <class F>
double simpson(F f, double lo, double hi, int panels = 4000) {
  const double h = (hi - lo) / panels;
  double s = f(lo) + f(hi);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4 : 2) * f(lo + i * h);
  return s * h / 3;
}

inline double gauss_pdf(double w, double var) { return std::exp(-w * w / (2 * var)) / std::sqrt(2 * std::numbers::pi * var); }

// P(sup |bridge| <= a) for a rate-2 bridge 0 -> 0 on [0, T].
inline double kolmogorov_bridge_stay(double a, double T) {
  double s = 1;
  for (int k = 1; k <= 200; ++k) s += 2 * (k % 2 ? -1.0 : 1.0) * std::exp(-static_cast<double>(k) * k * a * a / T);
  return s;
}

// Probability that a rate-1 Brownian bridge over one step of length dt from u to v stays in
// (-a, a), to first order in the two reflections.
inline double step_stay(double u, double v, double a, double dt) {
  if (std::abs(u) >= a || std::abs(v) >= a) return 0.0;
  double p = 1 - std::exp(-2 * (a - u) * (a - v) / dt) - std::exp(-2 * (a + u) * (a + v) / dt);
  return std::max(0.0, p);
}

inline MelonEnsemble melon_for(std::uint64_t seed, std::string_view tag, std::uint64_t replica, std::size_t n,
                               const TimeGrid& g) {
  Stream rng(seed, tag, replica);
  return random_melon(n, g, rng);
}

}  // namespace verify_detail

// ---------------------------------------------------------------- exact identities

inline CriterionResult verify_melon_identity(std::size_t seeds = 50) {
  using namespace verify_detail;
  double worst = 0;
  const TimeGrid g(0, 2, 4096);
  for (std::size_t n : {2u, 3u, 4u, 6u}) {
    for (std::size_t s = 0; s < seeds; ++s) {
      Stream rng(1, "verify/melon", n * 1000 + s);
      auto env = sample_environment(g, n, 1.0, rng);
      auto m = melon(env);
      ForwardLpp dp(env, 0, static_cast<int>(n), 1);
      for (std::size_t probe = 1; probe <= 8; ++probe) {
        std::size_t t = probe * 512;
        worst = std::max(worst, std::abs(m.inner.line(1)[t] - dp.value(1, t)));
      }
    }
  }
  return {1, "melon top line equals last passage", worst <= 1e-9,
          "n in {2,3,4,6}, " + std::to_string(seeds) + " seeds, max |diff| " + fmt(worst)};
}

inline CriterionResult verify_composition(std::size_t instances = 100) {
  using namespace verify_detail;
  double worst = 0;
  const TimeGrid g(0, 1, 256);
  for (std::size_t r = 0; r < instances; ++r) {
    Stream rng(2, "verify/composition", r);
    auto env = sample_environment(g, 4, 1.0, rng);
    std::size_t a = static_cast<std::size_t>(rng.uniform() * 128);
    std::size_t b = 128 + static_cast<std::size_t>(rng.uniform() * 129);
    LatticePoint from{g.node(a), 4}, to{g.node(b), 1};
    int k_same = 1 + static_cast<int>(rng.uniform() * 4);
    int k_split = 2 + static_cast<int>(rng.uniform() * 3);
    double z = g.node(a + static_cast<std::size_t>(rng.uniform() * (b - a + 1)));
    worst = std::max(worst, check_metric_composition(env, from, to, k_same, CompositionMode::same_line));
    worst = std::max(worst, check_metric_composition(env, from, to, k_split, CompositionMode::line_split));
    worst = std::max(worst, check_metric_composition(env, from, to, 1, CompositionMode::point_split, z));
  }
  return {2, "metric composition", worst <= 1e-9,
          std::to_string(instances) + " four-line instances, three modes, max residual " + fmt(worst)};
}

inline CriterionResult verify_dp_brute_force(std::size_t instances = 100) {
  std::size_t mismatches = 0;
  for (std::size_t r = 0; r < instances; ++r) {
    Stream rng(3, "verify/brute", r);
    const std::size_t lines = 2 + r % 3, steps = 8 + (r % 4) * 8;
    auto env = sample_environment(TimeGrid(0, 1, steps), lines, 1.0, rng);
    std::size_t x = static_cast<std::size_t>(rng.uniform() * (steps / 2));
    std::size_t y = steps / 2 + static_cast<std::size_t>(rng.uniform() * (steps / 2 + 1));
    int l = static_cast<int>(lines);
    int m = 1 + static_cast<int>(rng.uniform() * lines);
    const auto& g = env.grid();
    double oracle = verify_detail::enumerate_best(env, x, l, y, m);
    for (TieBreak tie : {TieBreak::rightmost, TieBreak::leftmost}) {
      auto res = last_passage(env, {g.node(x), l}, {g.node(y), m}, tie);
      mismatches += res.value != oracle;
    }
  }
  return {3, "DP agrees with exhaustive enumeration", mismatches == 0,
          std::to_string(instances) + " instances, both tie-breaks, " + std::to_string(mismatches) + " mismatches"};
}

// ---------------------------------------------------------------- bridge formulas

inline CriterionResult verify_feller_series(std::size_t replicas = 100000) {
  using namespace verify_detail;
  const std::size_t steps = 4096;
  const double a = 1.0, dt = 1.0 / steps;
  const TimeGrid g(0, 1, steps);
  std::vector<double> weight(replicas), raw(replicas);
  parallel_for(replicas, 0, [&](std::size_t r) {
    Stream rng(4, "verify/feller", r);
    auto w = sample_brownian(g, 1.0, rng);
    double p = 1;
    bool inside = true;
    for (std::size_t j = 0; j < steps && p > 0; ++j) {
      p *= step_stay(w[j], w[j + 1], a, dt);
      inside = inside && std::abs(w[j + 1]) <= a;
    }
    weight[r] = p;
    raw[r] = inside;
  });
  auto mo = moments(weight);
  const double series = bridge_max_stay_prob(a, 1.0, 20, false).probability;
  const bool mc_ok = std::abs(mo.mean - series) < 3 * mo.se_mean();

  // Lower bound c exp(-pi^2 T / (2 a^2)) against the rate-two series, the exact bridge law and
  // a small bridge Monte Carlo.
  struct Pair { double a, T; };
  const Pair pairs[] = {{0.5, 0.1}, {0.5, 0.25}, {1, 0.5}, {1, 1}, {1, 2},
                        {1.5, 1}, {2, 1}, {2, 4}, {3, 2}, {0.8, 0.3}};
  bool bound_ok = true;
  std::size_t pair_idx = 0;
  std::string worst_pair;
  for (auto [pa, pT] : pairs) {
    const double bound = 0.3 * std::exp(-std::numbers::pi * std::numbers::pi * pT / (2 * pa * pa));
    const double chain = bridge_max_stay_prob(pa, pT, 40, true).lower_bound();
    const double exact = kolmogorov_bridge_stay(pa, pT);
    Stream rng(4, "verify/bound", pair_idx++);
    const TimeGrid bg(0, pT, 256);
    std::size_t ok = 0;
    const std::size_t trials = 2000;
    for (std::size_t r = 0; r < trials; ++r) {
      auto b = sample_bridge(bg, 2.0, 0.0, 0.0, rng);
      bool in = true;
      for (std::size_t j = 0; j <= 256 && in; ++j) in = std::abs(b[j]) <= pa;
      ok += in;
    }
    const bool good = bound < chain && bound < exact && bound <= wilson_interval(ok, trials).hi;
    if (!good && worst_pair.empty()) worst_pair = " (fails at a=" + fmt(pa) + ", T=" + fmt(pT) + ")";
    bound_ok = bound_ok && good;
  }
  return {4, "bridge-max series vs Monte Carlo", mc_ok && bound_ok,
          "series " + fmt(series, 6) + ", MC " + fmt(mo.mean, 6) + " +- " + fmt(mo.se_mean(), 2) +
              " (grid-only " + fmt(moments(raw).mean, 6) + "); lower bound c=0.3 at 10 pairs " +
              (bound_ok ? "holds" : "violated") + worst_pair};
}

inline CriterionResult verify_rn_formulas() {
  using namespace verify_detail;
  struct Norm { double x, y, a; };
  double worst_mass = 0;
  for (auto c : {Norm{1, 2, 0}, Norm{1, 2, 1}, Norm{0.5, 3, -2}, Norm{2, 2.5, 0.7}, Norm{0.1, 1, 3}}) {
    const double var = 2 * c.x, L = 12 * std::sqrt(var) + std::abs(c.a);
    std::vector<double> a{c.a};
    double mass = simpson(
        [&](double w) {
          std::vector<double> o{w};
          return bridge_rn_density(o, 1, c.x, c.y, a) * gauss_pdf(w, var);
        },
        -L, L);
    worst_mass = std::max(worst_mass, std::abs(mass - 1));
  }
  struct Lp { double p; std::size_t m; };
  double worst_lp = 0;
  const double x = 1, y = 2, var = 2 * x, L = 12 * std::sqrt(var) + 1;
  for (auto c : {Lp{2, 1}, Lp{2, 2}, Lp{4, 1}}) {
    std::vector<double> a(c.m, 1.0);
    double integral;
    if (c.m == 1) {
      integral = simpson(
          [&](double w) {
            std::vector<double> o{w};
            return std::pow(bridge_rn_density(o, 1, x, y, a), c.p) * gauss_pdf(w, var);
          },
          -L, L);
    } else {
      integral = simpson(
          [&](double u) {
            return simpson(
                [&](double v) {
                  std::vector<double> o{u, v};
                  return std::pow(bridge_rn_density(o, 2, x, y, a), c.p) * gauss_pdf(u, var) * gauss_pdf(v, var);
                },
                -L, L, 800);
          },
          -L, L, 800);
    }
    worst_lp = std::max(worst_lp, std::abs(bridge_rn_lp_norm(c.p, c.m, x, y, a) / std::pow(integral, 1 / c.p) - 1));
  }
  return {5, "Radon-Nikodym density and L^p norm", worst_mass <= 0.01 && worst_lp <= 0.01,
          "max normalization error " + fmt(worst_mass) + ", max relative L^p error " + fmt(worst_lp)};
}

// ---------------------------------------------------------------- Monte Carlo laws

inline CriterionResult verify_lpp_mean(std::size_t replicas = 500) {
  using namespace verify_detail;
  bool ok = true;
  std::string detail;
  for (std::size_t n : {16u, 64u}) {
    std::vector<double> ratio(replicas);
    parallel_for(replicas, 0, [&](std::size_t r) {
      Stream rng(6, "verify/lpp-mean/" + std::to_string(n), r);
      auto env = sample_environment(TimeGrid(0, 1, 8192), n, 1.0, rng);
      ForwardLpp dp(env, 0, static_cast<int>(n), 1);
      ratio[r] = dp.value(1, 8192) / (2 * std::sqrt(static_cast<double>(n)));
    });
    auto mo = moments(ratio);
    ok = ok && mo.mean >= 0.85 && mo.mean <= 1.0;
    detail += (detail.empty() ? "" : ", ") + std::string("n=") + std::to_string(n) + " ratio " + fmt(mo.mean) +
              " +- " + fmt(mo.se_mean(), 2);
  }
  return {6, "mean last passage against 2 sqrt(n)", ok, detail + " (window [0.85, 1])"};
}

inline CriterionResult verify_jump_centering(std::size_t replicas = 500) {
  using namespace verify_detail;
  auto cfg = parse_config_text("op = jump-times\nreplicas = " + std::to_string(replicas) +
                               "\nseed = 7\nn = 128\ngrid = 0,1.05,4096\nx = 1\ny = 0\nks = 4,9,16\n");
  auto rec = run_replicated(cfg);
  bool ok = !rec.aborted && rec.failures == 0;
  std::string detail;
  for (const auto& s : rec.summary) {
    ok = ok && std::abs(s.mean) < 0.5;
    detail += (detail.empty() ? "" : ", ") + s.name + " " + fmt(s.mean) + " +- " + fmt(s.se, 2);
  }
  return {7, "jump-time centering", ok, "n=128, x=1: " + detail};
}

inline CriterionResult verify_gibbs_invariance(std::size_t resamples = 1000) {
  using namespace verify_detail;
  const std::size_t n = 16;
  const TimeGrid g(0, 1, 1024);
  const double a = 0.5, b = 0.75;
  const std::size_t mid = 640;
  std::vector<MelonEnsemble> melons;
  for (std::size_t r = 0; r < resamples; ++r) melons.push_back(melon_for(8, "verify/gibbs-melon", r, n, g));
  bool ok = true;
  std::string detail;
  for (std::size_t k = 1; k <= 3; ++k) {
    std::vector<std::vector<double>> before(2, std::vector<double>(resamples)), after = before;
    parallel_for(resamples, 0, [&](std::size_t r) {
      Stream rng(8, "verify/gibbs-resample/" + std::to_string(k), r);
      auto out = gibbs_resample(melons[r].inner, k, a, b, rng);
      for (std::size_t which = 0; which < 2; ++which) {
        std::size_t line = which == 0 ? 1 : k;
        before[which][r] = melons[r].inner.line(line)[mid];
        after[which][r] = out.line(line)[mid];
      }
    });
    for (std::size_t which = 0; which < (k == 1 ? 1u : 2u); ++which) {
      auto m0 = moments(before[which]), m1 = moments(after[which]);
      double zmean = std::abs(m0.mean - m1.mean) / std::hypot(m0.se_mean(), m1.se_mean());
      double zvar = std::abs(m0.variance - m1.variance) / std::hypot(m0.se_variance(), m1.se_variance());
      double zq = 0;
      for (double p : {0.25, 0.5, 0.75}) {
        double q = quantile(before[which], p);
        double below = static_cast<double>(std::count_if(after[which].begin(), after[which].end(),
                                                         [&](double v) { return v <= q; })) /
                       resamples;
        zq = std::max(zq, std::abs(below - p) / std::sqrt(2 * p * (1 - p) / resamples));
      }
      ok = ok && zmean < 3 && zvar < 3 && zq < 3;
      detail += (detail.empty() ? "" : "; ") + std::string("k=") + std::to_string(k) + " line " +
                std::to_string(which == 0 ? 1 : k) + " z(mean,var,quartile) " + fmt(zmean, 2) + "," + fmt(zvar, 2) +
                "," + fmt(zq, 2);
    }
  }
  return {8, "Gibbs resampling invariance", ok, detail};
}

// Lifts are componentwise and gap-non-decreasing: c_1 >= ... >= c_k >= 0 on both ends.
inline CriterionResult verify_lift_monotonicity(std::size_t specs = 20, std::size_t trials = 4000) {
  using namespace verify_detail;
  bool ok = true;
  std::size_t crn_violations = 0, ci_violations = 0;
  for (std::size_t s = 0; s < specs; ++s) {
    Stream rng(9, "verify/lift-spec", s);
    NoIntSpec base;
    base.k = 1 + s % 3;
    base.grid = TimeGrid(0, 1, 64);
    std::vector<double> entry(base.k), exit(base.k), ce(base.k), cx(base.k);
    double e = 0, x = 0;
    for (std::size_t i = base.k; i-- > 0;) {
      e += 0.05 + 0.6 * rng.uniform();
      x += 0.05 + 0.6 * rng.uniform();
      entry[i] = e;
      exit[i] = x;
    }
    double le = 0, lx = 0;
    for (std::size_t i = base.k; i-- > 0;) {
      le += 0.3 * rng.uniform();
      lx += 0.3 * rng.uniform();
      ce[i] = le;
      cx[i] = lx;
    }
    base.entry = EndpointVector(entry);
    base.exit = EndpointVector(exit);
    if (s % 4 != 3) {
      auto floor = sample_bridge(base.grid, 2.0, -0.2 * rng.uniform(), -0.2 * rng.uniform(), rng);
      auto shifted = floor.values();
      for (double& v : shifted) v = std::min(v, -0.01);
      base.floor = SampledPath(base.grid, shifted, 2.0);
    }
    NoIntSpec lift = base;
    for (std::size_t i = 0; i < base.k; ++i) {
      entry[i] += ce[i];
      exit[i] += cx[i];
    }
    lift.entry = EndpointVector(entry);
    lift.exit = EndpointVector(exit);
    base.validate();
    lift.validate();

    // Common noise: bridges 0 -> 0 plus the linear interpolation of each spec's endpoints.
    std::size_t acc_base = 0, acc_lift = 0;
    Stream noise(9, "verify/lift-noise", s);
    const std::size_t len = base.grid.size();
    for (std::size_t t = 0; t < trials; ++t) {
      std::vector<SampledPath> br;
      for (std::size_t i = 0; i < base.k; ++i) br.push_back(sample_bridge(base.grid, 2.0, 0.0, 0.0, noise));
      auto accepted = [&](const NoIntSpec& sp) {
        for (std::size_t j = 0; j < len; ++j) {
          double u = base.grid.node(j);
          double below = sp.floor ? (*sp.floor)[j] : -std::numeric_limits<double>::infinity();
          for (std::size_t i = sp.k; i-- > 0;) {
            double v = br[i][j] + (1 - u) * sp.entry[i] + u * sp.exit[i];
            if (v <= below) return false;
            below = v;
          }
        }
        return true;
      };
      bool ab = accepted(base), al = accepted(lift);
      acc_base += ab;
      acc_lift += al;
      crn_violations += ab && !al;
    }
    Stream r1(9, "verify/lift-base", s), r2(9, "verify/lift-up", s);
    auto e1 = acceptance_probability(base, trials, r1), e2 = acceptance_probability(lift, trials, r2);
    if (e2.ci95.hi < e1.ci95.lo) ++ci_violations;
    if (acc_lift < acc_base) ok = false;
  }
  ok = ok && crn_violations == 0 && ci_violations == 0;
  return {9, "acceptance monotone under endpoint lifts", ok,
          std::to_string(specs) + " specs: coupled violations " + std::to_string(crn_violations) +
              ", independent decreases beyond CI " + std::to_string(ci_violations)};
}

inline CriterionResult verify_meagre() {
  bool ok = true;
  for (double r : {0.1, 0.5, 2.0}) {
    ok = ok && classify_meagre(finite_set({0.0, 0.5, 1.0}), 1.5, r, 10).verdict == MeagreVerdict::meagre;
    ok = ok && classify_meagre(finite_set({0.3}), 2.0, r, 10).verdict == MeagreVerdict::meagre;
  }
  auto cantor = classify_meagre(middle_third_cantor(40), 2.0, 0.5, 40).verdict;
  auto thin = classify_meagre(generate_thin_cantor(2.0, 40), 2.0, 0.5, 40).verdict;
  ok = ok && cantor == MeagreVerdict::not_meagre && thin == MeagreVerdict::meagre;
  return {10, "meagre classifier examples", ok,
          std::string("finite sets meagre, middle-third ") + to_string(cantor) + ", thin Cantor " + to_string(thin)};
}

// ---------------------------------------------------------------- KPZ

inline CriterionResult verify_truncation(std::size_t instances = 200) {
  using namespace verify_detail;
  const std::size_t n = 128;
  const std::size_t depths[2] = {2, 8};
  const TimeGrid g(0, 1.5, 8192);
  const InitialData data{{{1.0, 0.0}, {1.3, 0.2}}, 1.0, {1.0, 1.5}, std::nullopt};
  std::vector<double> ys;
  for (std::size_t j = 0; j <= 16; ++j) ys.push_back(j / 16.0);
  // per instance and depth: nodes with a shallow intercept, and mismatches among them
  std::vector<std::array<std::size_t, 4>> tally(instances);
  parallel_for(instances, 0, [&](std::size_t r) {
    auto m = melon_for(11, "verify/truncation", r, n, g);
    ScaledCoordinates sc(n, g);
    auto h = kpz_fixed_point(m, n, data, ys);
    auto proxy = AiryWindowProxy::from_melon(m, n);
    const std::size_t o = sc.origin_index(), last = sc.y_index(ys.back());
    std::vector<ForwardLpp> dps;
    for (auto [x, h0] : data.support)
      dps.emplace_back(m.inner, sc.x_index(x), static_cast<int>(n), 1, TieBreak::rightmost, last);
    std::vector<int> intercept(ys.size());
    for (std::size_t j = 0; j < ys.size(); ++j) {
      const std::size_t ye = sc.y_index(ys[j]);
      std::size_t arg = 0;
      double best = kNegInf;
      for (std::size_t i = 0; i < data.support.size(); ++i) {
        double v = data.support[i].second + prelimit_airy_sheet(m, n, data.support[i].first, ys[j]);
        if (v > best) {
          best = v;
          arg = i;
        }
      }
      detail::MelonGeodesic geo{sc.x_index(data.support[arg].first), dps[arg].jump_indices(1, ye), ye,
                                static_cast<int>(n)};
      intercept[j] = geo.line_at(o);
    }
    for (std::size_t d = 0; d < 2; ++d) {
      auto hm = finite_depth_truncation(proxy, boundary_data(m, n, data, depths[d], n), depths[d], ys);
      for (std::size_t j = 0; j < ys.size(); ++j) {
        if (intercept[j] > static_cast<int>(depths[d])) continue;
        ++tally[r][2 * d];
        tally[r][2 * d + 1] += hm.h[j] != h.h[j];
      }
    }
  });
  std::array<std::size_t, 4> sum{};
  for (const auto& t : tally)
    for (std::size_t i = 0; i < 4; ++i) sum[i] += t[i];
  const std::size_t nodes = instances * ys.size();
  return {11, "finite-depth truncation equals the fixed point", sum[1] == 0 && sum[3] == 0 && sum[0] > 0,
          std::to_string(instances) + " instances at n=128, " + std::to_string(nodes) + " nodes: depth 2 " +
              std::to_string(sum[0]) + " shallow / " + std::to_string(sum[1]) + " mismatches, depth 8 " +
              std::to_string(sum[2]) + " shallow / " + std::to_string(sum[3]) + " mismatches"};
}

inline CriterionResult verify_regularity(std::size_t replicas = 500) {
  using namespace verify_detail;
  auto cfg = parse_config_text("op = kpz-increments\nreplicas = " + std::to_string(replicas) +
                               "\nseed = 12\nn = 128\ngrid = 0,1.65,4096\nwindow = 1,1.5\nevents = 20\n");
  auto rec = run_replicated(cfg);
  std::size_t flagged = 0, evaluable = 0;
  for (const auto& row : rec.probe) {
    flagged += row.flagged;
    evaluable += row.evaluable;
  }
  // Positive control: rate-2 Brownian paths with a drift of 4 against untilted reference paths.
  const TimeGrid ig(0, 0.5, 32);
  std::vector<SampledPath> tilted, reference;
  Stream a(12, "verify/control-tilted"), b(12, "verify/control-reference");
  for (std::size_t r = 0; r < replicas; ++r) {
    auto p = sample_brownian(ig, 2.0, a);
    auto v = p.values();
    for (std::size_t j = 0; j < v.size(); ++j) v[j] += 4 * ig.node(j);
    tilted.emplace_back(ig, std::move(v), 2.0);
    reference.push_back(sample_brownian(ig, 2.0, b));
  }
  std::vector<PathEvent> crossings;
  for (double level : {0.5, 1.0, 1.5, 2.0}) crossings.push_back(threshold_crossing("max>=" + fmt(level), level));
  std::size_t control_flags = 0;
  for (const auto& row : brownian_regularity_probe(tilted, crossings, reference)) control_flags += row.flagged;
  const bool ok = !rec.aborted && rec.probe.size() == 20 && evaluable >= 15 && flagged == 0 && control_flags > 0;
  return {12, "Brownian regularity of KPZ increments", ok,
          "n=128 narrow wedge, " + std::to_string(rec.probe.size()) + " ball events (" + std::to_string(evaluable) +
              " evaluable), " + std::to_string(flagged) + " flagged; tilted control flagged " +
              std::to_string(control_flags) + "/4 crossing events"};
}

// ---------------------------------------------------------------- suites

inline std::vector<Criterion> acceptance_criteria() {
  return {{1, "melon identity", [] { return verify_melon_identity(); }},
          {2, "composition", [] { return verify_composition(); }},
          {3, "brute force", [] { return verify_dp_brute_force(); }},
          {4, "bridge series", [] { return verify_feller_series(); }},
          {5, "RN formulas", [] { return verify_rn_formulas(); }},
          {6, "LPP mean", [] { return verify_lpp_mean(); }},
          {7, "jump centering", [] { return verify_jump_centering(); }},
          {8, "Gibbs invariance", [] { return verify_gibbs_invariance(); }},
          {9, "lift monotonicity", [] { return verify_lift_monotonicity(); }},
          {10, "meagre", [] { return verify_meagre(); }},
          {11, "truncation", [] { return verify_truncation(); }},
          {12, "regularity probe", [] { return verify_regularity(); }}};
}

// Exact identities at reduced instance counts; runs in a few seconds.
inline std::vector<Criterion> quick_criteria() {
  return {{1, "melon identity", [] { return verify_melon_identity(5); }},
          {2, "composition", [] { return verify_composition(20); }},
          {3, "brute force", [] { return verify_dp_brute_force(30); }},
          {5, "RN formulas", [] { return verify_rn_formulas(); }},
          {10, "meagre", [] { return verify_meagre(); }}};
}

inline std::string format_result(const CriterionResult& r) {
  return std::string(r.passed ? "PASS" : "FAIL") + " criterion " + std::to_string(r.id) + ": " + r.name + " -- " +
         r.detail;
}

}  // namespace kpzlab
