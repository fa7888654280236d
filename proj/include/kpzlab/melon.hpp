#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "kpzlab/lpp.hpp"

namespace kpzlab {

struct MelonEnsemble {
  PathEnsemble inner;
  std::uint64_t source_hash = 0;

  std::size_t n() const { return inner.line_count(); }
  const TimeGrid& grid() const { return inner.grid(); }
};

inline std::uint64_t ensemble_hash(const PathEnsemble& env) {
  const auto& g = env.grid();
  std::array<double, 3> head{g.a(), g.b(), env.rate()};
  std::uint64_t h = fnv1a(head.data(), sizeof(head));
  std::uint64_t steps = g.steps(), lines = env.line_count();
  h = fnv1a(&steps, sizeof(steps), h);
  h = fnv1a(&lines, sizeof(lines), h);
  for (const auto& l : env.lines()) h = fnv1a(l.values().data(), l.values().size() * sizeof(double), h);
  return h;
}

namespace detail {

// In-place Pitman transform of (top, bottom); returns whether anything moved.
inline bool pitman_inplace(std::vector<double>& top, std::vector<double>& bottom) {
  double gap = 0.0;
  bool changed = false;
  for (std::size_t t = 0; t < top.size(); ++t) {
    gap = std::max(gap, bottom[t] - top[t]);
    if (gap > 0) {
      top[t] += gap;
      bottom[t] -= gap;
      changed = true;
    }
  }
  return changed;
}

}  // namespace detail

inline std::pair<SampledPath, SampledPath> pitman_transform(const SampledPath& f1, const SampledPath& f2) {
  require(f1.grid() == f2.grid(), "Pitman transform needs a shared grid");
  std::vector<double> top(f1.values()), bottom(f2.values());
  detail::pitman_inplace(top, bottom);
  return {SampledPath(f1.grid(), std::move(top), f1.rate()), SampledPath(f2.grid(), std::move(bottom), f2.rate())};
}

// Sorts an ensemble into its melon by bubble-sort Pitman passes: pass p transforms pairs
// (n-1, n), (n-2, n-1), ..., (p, p+1), so after pass p line p carries the last passage value
// from line n. A final sweep must be a no-op and the top line must match the DP last passage
// value at probe nodes.
inline MelonEnsemble melon(const PathEnsemble& env) {
  const std::size_t n = env.line_count();
  for (const auto& l : env.lines()) require(l[0] == 0.0, "melon input lines must start at 0");
  std::vector<std::vector<double>> w;
  w.reserve(n);
  for (const auto& l : env.lines()) w.push_back(l.values());
  for (std::size_t p = 0; p + 1 < n; ++p)
    for (std::size_t i = n - 1; i-- > p;) detail::pitman_inplace(w[i], w[i + 1]);

  std::size_t sweeps = 0;
  for (bool changed = true; changed; ++sweeps) {
    if (sweeps > n) throw InvariantViolation("melon passes did not reach a fixed point");
    changed = false;
    for (std::size_t i = 0; i + 1 < n; ++i) changed |= detail::pitman_inplace(w[i], w[i + 1]);
  }

  const auto& grid = env.grid();
  if (n > 1) {
    ForwardLpp dp(env, 0, static_cast<int>(n), 1);
    for (std::size_t p = 1; p <= 8; ++p) {
      std::size_t t = grid.steps() * p / 8;
      double lpp = dp.value(1, t);
      if (std::abs(lpp - w[0][t]) > 1e-9 * std::max(1.0, std::abs(lpp)))
        throw InvariantViolation("melon top line diverges from last passage value at node " + std::to_string(t));
    }
  }

  std::vector<SampledPath> lines;
  lines.reserve(n);
  for (auto& v : w) lines.emplace_back(grid, std::move(v), env.rate());
  return {PathEnsemble(std::move(lines)), ensemble_hash(env)};
}

// v^{1/k} for v >= 1 by Newton's method in plain arithmetic. Unlike pow and cbrt, the result is
// the same whether the compiler folds it at a constant call site or evaluates it at run time,
// which keeps identities between separately inlined height computations exact.
inline double integer_root(double v, int k) {
  double r = std::max(1.0, v);
  for (int i = 0; i < 400; ++i) {
    double p = 1;
    for (int j = 1; j < k; ++j) p *= r;
    double next = r - (p * r - v) / (k * p);
    if (next >= r) break;
    r = next;
  }
  return r;
}

// Maps x >= 0 to the melon time 2x n^{-1/3} and y to 1 + 2y n^{-1/3}, snapping to the nearest
// node. Effective (snapped) Airy coordinates are reported so centering terms stay consistent.
class ScaledCoordinates {
 public:
  ScaledCoordinates(std::size_t n, TimeGrid grid) : n_(n), grid_(grid) {
    require(n >= 1, "melon size must be positive");
    cbrt_ = integer_root(static_cast<double>(n), 3);
    s_ = integer_root(static_cast<double>(n), 6);
    scale_ = 2.0 / cbrt_;
  }

  std::size_t n() const { return n_; }
  const TimeGrid& grid() const { return grid_; }
  double scale() const { return scale_; }  // 2 n^{-1/3}
  double s() const { return s_; }                // n^{1/6}
  double n_third() const { return cbrt_; }        // n^{1/3}
  double n_two_thirds() const { return cbrt_ * cbrt_; }

  std::size_t x_index(double x) const {
    require(x >= 0, "speed x must be non-negative");
    return checked(scale_ * x, "x");
  }
  std::size_t y_index(double y) const { return checked(1.0 + scale_ * y, "y"); }
  std::size_t origin_index() const { return checked(1.0, "origin"); }
  double x_of(std::size_t idx) const { return grid_.node(idx) / scale_; }
  double y_of(std::size_t idx) const { return (grid_.node(idx) - 1.0) / scale_; }

 private:
  std::size_t checked(double t, const char* what) const {
    if (t < grid_.a() - 0.5 * grid_.delta() || t > grid_.b() + 0.5 * grid_.delta())
      throw WindowError(std::string("scaled ") + what + " coordinate " + std::to_string(t) +
                        " outside melon grid [" + std::to_string(grid_.a()) + ", " + std::to_string(grid_.b()) + "]");
    return grid_.nearest(std::clamp(t, grid_.a(), grid_.b()));
  }

  std::size_t n_;
  TimeGrid grid_;
  double scale_, cbrt_, s_;
};

// A^n_i(y) = n^{1/6} (WB_i(1 + 2y n^{-1/3}) - 2 sqrt(n) - 2y n^{1/6}) at the nearest melon node
// to each requested y. Requested y must sit at least 10 steps inside the melon grid.
inline PathEnsemble rescale_to_airy(const MelonEnsemble& m, std::size_t n, const TimeGrid& y_grid) {
  require(n == m.n(), "n must equal the melon line count");
  ScaledCoordinates sc(n, m.grid());
  const double s = sc.s(), rn = std::sqrt(static_cast<double>(n));
  std::vector<std::size_t> idx(y_grid.size());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    idx[j] = sc.y_index(y_grid.node(j));
    if (idx[j] < 10 || idx[j] + 10 > m.grid().steps())
      throw WindowError("Airy window within 10 steps of the melon grid edge");
  }
  std::vector<SampledPath> lines;
  for (const auto& l : m.inner.lines()) {
    std::vector<double> v(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) {
      double y = sc.y_of(idx[j]);
      v[j] = s * (l[idx[j]] - 2 * rn - 2 * y * s);
    }
    lines.emplace_back(y_grid, std::move(v), 2.0 * l.rate());
  }
  return PathEnsemble(std::move(lines));
}

// The Airy window at native melon resolution over melon nodes [i0, i1].
inline PathEnsemble airy_window(const MelonEnsemble& m, std::size_t i0, std::size_t i1) {
  require(i0 < i1 && i1 <= m.grid().steps(), "Airy window node range invalid");
  ScaledCoordinates sc(m.n(), m.grid());
  const double s = sc.s(), rn = std::sqrt(static_cast<double>(m.n()));
  TimeGrid yg(sc.y_of(i0), sc.y_of(i1), i1 - i0);
  std::vector<SampledPath> lines;
  for (const auto& l : m.inner.lines()) {
    std::vector<double> v(i1 - i0 + 1);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = s * (l[i0 + j] - 2 * rn - 2 * sc.y_of(i0 + j) * s);
    lines.emplace_back(yg, std::move(v), 2.0 * l.rate());
  }
  return PathEnsemble(std::move(lines));
}

}  // namespace kpzlab

namespace kpzlab {

// Melon of n independent lattice-snapped motions (standard rate by default: the Airy
// rescaling above assumes rate 1 inputs).
inline MelonEnsemble random_melon(std::size_t n, const TimeGrid& grid, Stream& rng, double rate = 1.0) {
  return melon(sample_environment(grid, n, rate, rng));
}

}  // namespace kpzlab
