#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "kpzlab/melon.hpp"

namespace kpzlab {

// Z[k-1] is the (rescaled) supremum of times spent on line k by the rightmost geodesic
// from (x-bar, n) to (y-hat, 1). Stored 0-based; Z.size() == n.
struct JumpTimeProfile {
  double x;
  double y;
  std::vector<double> Z;
  double start;   // rescaled start time, (x-bar - 1) n^{1/3} / 2
  double origin;  // rescaled time of the node nearest Airy time 0
  double z(std::size_t k) const { return Z.at(k - 1); }
};

struct CoalescenceRecord {
  double x;
  int ell;
  std::optional<int> depth;  // nullopt: not coalesced within the window
  std::optional<double> meet_time;
  bool coalesced() const { return depth.has_value(); }
};

namespace detail {

struct MelonGeodesic {
  std::size_t start_idx;
  std::vector<std::size_t> jumps;  // jumps[i]: from line n-i to n-i-1
  std::size_t end_idx;
  int start_line;

  // Cadlag line at node t: start_line minus the number of jumps at or before t.
  int line_at(std::size_t t) const {
    int line = start_line;
    for (std::size_t j : jumps)
      if (j <= t) --line;
    return line;
  }
  // Closed range of lines occupied at node t (a jump at t occupies both ends).
  std::pair<int, int> lines_at(std::size_t t) const {
    int lo = line_at(t);
    int hi = lo;
    for (std::size_t j : jumps)
      if (j == t) ++hi;
    return {lo, hi};
  }
};

inline MelonGeodesic melon_geodesic(const MelonEnsemble& m, std::size_t start_idx, int start_line, std::size_t end_idx,
                                    int end_line) {
  if (start_idx > end_idx) throw WindowError("geodesic start lies after its end");
  ForwardLpp dp(m.inner, start_idx, start_line, end_line, TieBreak::rightmost, end_idx);
  return {start_idx, dp.jump_indices(end_line, end_idx), end_idx, start_line};
}

}  // namespace detail

inline JumpTimeProfile jump_times(const MelonEnsemble& m, std::size_t n, double x, double y) {
  require(n == m.n(), "n must equal the melon line count");
  require(x > 0, "speed x must be positive");
  ScaledCoordinates sc(n, m.grid());
  std::size_t xs = sc.x_index(x), ye = sc.y_index(y);
  auto g = detail::melon_geodesic(m, xs, static_cast<int>(n), ye, 1);
  JumpTimeProfile p{x, y, std::vector<double>(n), sc.y_of(xs), sc.y_of(sc.origin_index())};
  p.Z[0] = sc.y_of(ye);
  // jumps[i] leaves line n-i, so the last time on line k >= 2 is jumps[n-k].
  for (std::size_t k = 2; k <= n; ++k) p.Z[k - 1] = sc.y_of(g.jumps[n - k]);
  return p;
}

// Cadlag intercept from a profile: min{k : Z_{k+1} <= 0}, with Z_{n+1} the start time.
inline int intercept_from_profile(const JumpTimeProfile& p) {
  const std::size_t n = p.Z.size();
  for (std::size_t k = 1; k < n; ++k)
    if (p.Z[k] <= p.origin) return static_cast<int>(k);
  return static_cast<int>(n);
}

// Line occupied by the rightmost geodesic (x-bar, n) -> (y-hat, 1) at Airy time 0, read
// directly off the path.
inline int intercept_line(const MelonEnsemble& m, std::size_t n, double x, double y) {
  require(n == m.n(), "n must equal the melon line count");
  ScaledCoordinates sc(n, m.grid());
  std::size_t xs = sc.x_index(x), ye = sc.y_index(y), o = sc.origin_index();
  if (!(xs <= o && o <= ye)) throw WindowError("geodesic does not cross Airy time 0 inside the window");
  auto g = detail::melon_geodesic(m, xs, static_cast<int>(n), ye, 1);
  return g.line_at(o);
}

// True iff the rightmost geodesics from x-eps to y1 and from x+eps to y2 share no grid point.
inline bool disjointness_probe(const MelonEnsemble& m, std::size_t n, double x, double eps, double y1, double y2) {
  require(n == m.n(), "n must equal the melon line count");
  require(y1 <= y2, "disjointness probe needs y1 <= y2");
  require(eps >= 0 && x - eps >= 0, "disjointness probe needs 0 <= eps <= x");
  ScaledCoordinates sc(n, m.grid());
  const int top = static_cast<int>(n);
  auto left = detail::melon_geodesic(m, sc.x_index(x - eps), top, sc.y_index(y1), 1);
  auto right = detail::melon_geodesic(m, sc.x_index(x + eps), top, sc.y_index(y2), 1);
  std::size_t lo = std::max(left.start_idx, right.start_idx), hi = std::min(left.end_idx, right.end_idx);
  for (std::size_t t = lo; t <= hi; ++t) {
    auto [a0, a1] = left.lines_at(t);
    auto [b0, b1] = right.lines_at(t);
    if (std::max(a0, b0) <= std::min(a1, b1)) return false;
  }
  return true;
}

// Finite-n coalescence depth: least k >= 1 such that the rightmost geodesics from (x-bar, n)
// to (0, 1) and to (0, ell) agree at every node s <= -sqrt(k/(2x)).
inline CoalescenceRecord coalescence_depth(const MelonEnsemble& m, std::size_t n, double x, int ell) {
  require(n == m.n(), "n must equal the melon line count");
  require(ell >= 2 && static_cast<std::size_t>(ell) <= n, "coalescence needs 2 <= ell <= n");
  require(x > 0, "speed x must be positive");
  ScaledCoordinates sc(n, m.grid());
  std::size_t xs = sc.x_index(x), o = sc.origin_index();
  if (xs > o) throw WindowError("start lies after Airy time 0");
  ForwardLpp dp(m.inner, xs, static_cast<int>(n), 1, TieBreak::rightmost, o);
  detail::MelonGeodesic g1{xs, dp.jump_indices(1, o), o, static_cast<int>(n)};
  detail::MelonGeodesic gl{xs, dp.jump_indices(ell, o), o, static_cast<int>(n)};
  std::size_t t = xs;
  while (t <= o && g1.line_at(t) == gl.line_at(t)) ++t;
  CoalescenceRecord rec{x, ell, std::nullopt, std::nullopt};
  if (t == xs) return rec;
  const double meet = sc.y_of(t - 1);
  const double split = sc.y_of(t);
  const double start = sc.y_of(xs);
  for (int k = 1;; ++k) {
    double thr = sc.y_of(o) - std::sqrt(k / (2 * x));
    if (thr < start) break;
    if (thr < split) {
      rec.depth = k;
      rec.meet_time = meet;
      break;
    }
  }
  return rec;
}

// S_n(x, y) = n^{1/6} WB[(x-bar, n) -> (y-hat, 1)] - 2 n^{2/3} - 2 (y - x) n^{1/3}, with x, y the
// snapped effective coordinates.
inline double prelimit_airy_sheet(const MelonEnsemble& m, std::size_t n, double x, double y) {
  require(n == m.n(), "n must equal the melon line count");
  ScaledCoordinates sc(n, m.grid());
  std::size_t xs = sc.x_index(x), ye = sc.y_index(y);
  if (xs > ye) throw WindowError("sheet start lies after its end");
  ForwardLpp dp(m.inner, xs, static_cast<int>(n), 1, TieBreak::rightmost, ye);
  return sc.s() * dp.value(1, ye) - 2 * sc.n_two_thirds() - 2 * (sc.y_of(ye) - sc.x_of(xs)) * sc.n_third();
}

}  // namespace kpzlab
