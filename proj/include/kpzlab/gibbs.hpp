#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "kpzlab/core_paths.hpp"
#include "kpzlab/stats.hpp"

namespace kpzlab {

struct NoIntSpec {
  std::size_t k = 1;
  TimeGrid grid;  // [a, b] and its nodes
  EndpointVector entry;
  EndpointVector exit;
  std::optional<SampledPath> floor;                  // nullopt: floor at -infinity
  std::vector<std::pair<double, double>> region;     // empty: all of [a, b]
  double rate = 2.0;

  void validate() const {
    require(k >= 1, "NoInt spec needs k >= 1");
    require(entry.size() == k && exit.size() == k, "entry/exit length must equal k");
    EndpointVector(entry.values, true);
    EndpointVector(exit.values, true);
    require(rate > 0, "bridge rate must be positive");
    if (floor) {
      require(floor->grid() == grid, "floor must live on the spec grid");
      require(entry[k - 1] > floor->values().front(), "lowest entry must lie above the floor");
      require(exit[k - 1] > floor->values().back(), "lowest exit must lie above the floor");
    }
    for (auto [lo, hi] : region) require(lo <= hi && lo >= grid.a() && hi <= grid.b(), "region outside [a, b]");
  }

  std::vector<char> region_mask() const {
    std::vector<char> mask(grid.size(), region.empty() ? 1 : 0);
    for (auto [lo, hi] : region)
      for (std::size_t j = 0; j < grid.size(); ++j)
        if (grid.node(j) >= lo && grid.node(j) <= hi) mask[j] = 1;
    return mask;
  }
};

struct AcceptanceEstimate {
  double p_hat;
  std::size_t n_trials;
  Interval ci95;
  bool attempts_exhausted = false;
};

namespace detail {

// One attempt: bridges sampled top-down, rejected at the first NoInt violation.
inline std::optional<std::vector<SampledPath>> noint_attempt(const NoIntSpec& spec, const std::vector<char>& mask,
                                                             Stream& rng) {
  std::vector<SampledPath> lines;
  lines.reserve(spec.k);
  for (std::size_t i = 0; i < spec.k; ++i) {
    SampledPath b = sample_bridge(spec.grid, spec.rate, spec.entry[i], spec.exit[i], rng);
    const auto& v = b.values();
    if (i > 0) {
      const auto& above = lines.back().values();
      for (std::size_t j = 0; j < v.size(); ++j)
        if (mask[j] && !(above[j] > v[j])) return std::nullopt;
    }
    if (i + 1 == spec.k && spec.floor) {
      const auto& f = spec.floor->values();
      for (std::size_t j = 0; j < v.size(); ++j)
        if (mask[j] && !(v[j] > f[j])) return std::nullopt;
    }
    lines.push_back(std::move(b));
  }
  return lines;
}

}  // namespace detail

// Independent bridges conditioned on NoInt at the grid nodes of the region, by rejection.
// Exhausting max_attempts (default 1e5) means the acceptance is below ~1e-4 with
// overwhelming probability; that is reported, never worked around.
inline PathEnsemble sample_noint_bridges(const NoIntSpec& spec, Stream& rng, std::size_t max_attempts = 100000) {
  spec.validate();
  auto mask = spec.region_mask();
  for (std::size_t attempt = 1; attempt <= max_attempts; ++attempt)
    if (auto lines = detail::noint_attempt(spec, mask, rng)) return PathEnsemble(std::move(*lines));
  throw SamplerExhausted("non-intersecting bridge sampler exhausted", max_attempts);
}

inline AcceptanceEstimate acceptance_probability(const NoIntSpec& spec, std::size_t n_trials, Stream& rng) {
  require(n_trials >= 100, "acceptance estimate needs at least 100 trials");
  spec.validate();
  auto mask = spec.region_mask();
  std::size_t ok = 0;
  for (std::size_t i = 0; i < n_trials; ++i)
    if (detail::noint_attempt(spec, mask, rng)) ++ok;
  return {static_cast<double>(ok) / static_cast<double>(n_trials), n_trials, wilson_interval(ok, n_trials), false};
}

// Replaces lines 1..k on [a, b] by non-intersecting bridges between the current values at a
// and b, conditioned to stay above line k+1.
inline PathEnsemble gibbs_resample(const PathEnsemble& env, std::size_t k, double a, double b, Stream& rng,
                                   std::size_t max_attempts = 100000) {
  require(k >= 1 && k < env.line_count(), "Gibbs resampling needs 1 <= k < line count");
  require(a < b, "strip needs a < b");
  const auto& g = env.grid();
  std::size_t ia = g.index_of(a), ib = g.index_of(b);
  TimeGrid sub(g.node(ia), g.node(ib), ib - ia);
  NoIntSpec spec;
  spec.k = k;
  spec.grid = sub;
  spec.rate = env.rate();
  std::vector<double> x(k), y(k);
  for (std::size_t i = 0; i < k; ++i) {
    x[i] = env.line(i + 1)[ia];
    y[i] = env.line(i + 1)[ib];
  }
  spec.entry = EndpointVector(x);
  spec.exit = EndpointVector(y);
  const auto& fl = env.line(k + 1).values();
  spec.floor = SampledPath(sub, std::vector<double>(fl.begin() + static_cast<std::ptrdiff_t>(ia),
                                                    fl.begin() + static_cast<std::ptrdiff_t>(ib) + 1),
                           env.rate());
  PathEnsemble fresh = sample_noint_bridges(spec, rng, max_attempts);
  PathEnsemble out = env;
  for (std::size_t i = 0; i < k; ++i) {
    auto& v = out.mutable_lines()[i].mutable_values();
    const auto& w = fresh.line(i + 1).values();
    for (std::size_t j = 1; j + 1 < w.size(); ++j) v[ia + j] = w[j];
  }
  return out;
}

// Lower bound on the density of shifted bridges:
// exp(-zeta^2 m c^2/4 - zeta c sum_i [(f_i(s)-x_i)^+ + (f_i(t)-y_i)^+]/4), c = alpha/m + beta,
// zeta = 1/min(s-a, b-t).
inline double bridge_shift_tilt(const PathEnsemble& f, double alpha, double beta, double s, double t,
                                const EndpointVector& x, const EndpointVector& y) {
  require(alpha >= 0 && beta >= 0, "tilt needs alpha, beta >= 0");
  const auto& g = f.grid();
  require(g.a() < s && s < t && t < g.b(), "tilt needs a < s < t < b");
  const std::size_t m = f.line_count();
  require(x.size() == m && y.size() == m, "tilt endpoint vectors must match the ensemble");
  std::size_t is = g.index_of(s), it = g.index_of(t);
  const double zeta = 1.0 / std::min(s - g.a(), g.b() - t);
  const double c = alpha / static_cast<double>(m) + beta;
  double over = 0;
  for (std::size_t i = 0; i < m; ++i)
    over += std::max(0.0, f.line(i + 1)[is] - x[i]) + std::max(0.0, f.line(i + 1)[it] - y[i]);
  return std::exp(-zeta * zeta * static_cast<double>(m) * c * c / 4 - zeta * c * over / 4);
}

}  // namespace kpzlab
