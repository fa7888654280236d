#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "kpzlab/geodesic.hpp"
#include "kpzlab/stats.hpp"

namespace kpzlab {

struct InitialData {
  std::vector<std::pair<double, double>> support;  // (x, h0(x))
  double Mtilde = 0.0;
  Interval K{1.0, 1.0};
  std::optional<std::pair<double, double>> meagre_params;  // (M, r)

  void validate() const {
    require(!support.empty(), "initial data needs a non-empty support");
    require(K.lo >= 1.0 && K.lo <= K.hi, "support window K must lie in [1, inf)");
    for (auto [x, h] : support) {
      require(x >= 1.0, "support points must satisfy x >= 1");
      require(K.contains(x), "support point outside K");
      require(std::abs(h) <= Mtilde, "height exceeds the bound Mtilde");
    }
  }
};

struct BoundaryData {
  std::vector<double> G;    // Airy units; -inf where the line is unreachable
  std::vector<double> raw;  // melon units, G = s * raw - 2 n^{2/3}
  std::size_t k_start = 0;  // == n: exact finite-n start (x-bar, n)
  bool exact_start = false;
  bool stabilized = false;
  double stabilization_gap = 0.0;
};

struct FixedPointSample {
  std::vector<double> y_requested;
  std::vector<double> y;  // effective (snapped) coordinates
  std::vector<double> h;
  std::size_t n = 0;
  std::size_t m = 0;  // truncation depth; 0 for the untruncated formula
  std::uint64_t source_hash = 0;
};

namespace detail {

// Heights carried in melon units: h0(x) + S_n(x, y) = s (w(x) + WB[x-bar -> y-hat]) - C(y) with
// w(x) = h0/s + 2 x n^{1/6} rounded to the exact-arithmetic lattice.
inline double raw_offset(const ScaledCoordinates& sc, std::size_t xs, double h0) {
  return lattice_round(h0 / sc.s() + 2 * sc.x_of(xs) * sc.s());
}

inline double centering(const ScaledCoordinates& sc, std::size_t ye) {
  return 2 * sc.n_two_thirds() + 2 * sc.y_of(ye) * sc.n_third();
}

inline FixedPointSample new_sample(const MelonEnsemble& m, const ScaledCoordinates& sc,
                                   const std::vector<double>& y_nodes, std::vector<std::size_t>& ye) {
  FixedPointSample out;
  out.y_requested = y_nodes;
  out.n = m.n();
  out.source_hash = m.source_hash;
  for (double y : y_nodes) {
    ye.push_back(sc.y_index(y));
    out.y.push_back(sc.y_of(ye.back()));
  }
  return out;
}

}  // namespace detail

// h(y) = max over the support of h0(x) + S_n(x, y).
inline FixedPointSample kpz_fixed_point(const MelonEnsemble& m, std::size_t n, const InitialData& data,
                                        const std::vector<double>& y_nodes) {
  require(n == m.n(), "n must equal the melon line count");
  require(!y_nodes.empty(), "need at least one y node");
  data.validate();
  ScaledCoordinates sc(n, m.grid());
  std::vector<std::size_t> ye;
  FixedPointSample out = detail::new_sample(m, sc, y_nodes, ye);
  std::vector<double> best(ye.size(), kNegInf);
  const std::size_t last = *std::max_element(ye.begin(), ye.end());
  for (auto [x, h0] : data.support) {
    std::size_t xs = sc.x_index(x);
    for (std::size_t e : ye)
      if (e < xs) throw WindowError("y node lies before the scaled support point");
    ForwardLpp dp(m.inner, xs, static_cast<int>(n), 1, TieBreak::rightmost, last);
    const double w = detail::raw_offset(sc, xs, h0);
    for (std::size_t j = 0; j < ye.size(); ++j) best[j] = std::max(best[j], w + dp.value(1, ye[j]));
  }
  for (std::size_t j = 0; j < ye.size(); ++j) out.h.push_back(sc.s() * best[j] - detail::centering(sc, ye[j]));
  return out;
}

namespace detail {

// raw_l = max_x (w(x) + D_x(l) - D_x(1) + WB[(x-bar, n) -> (1, 1)]) with D_x the LPP from the
// deep start of depth k; k == n uses (x-bar, n) itself and reduces to max_x (w + WB[x-bar -> (1, l)]).
inline std::vector<double> boundary_raw(const MelonEnsemble& m, const ScaledCoordinates& sc, const InitialData& data,
                                        std::size_t depth, std::size_t k) {
  const std::size_t n = m.n();
  const std::size_t o = sc.origin_index();
  std::vector<double> raw(depth, kNegInf);
  for (auto [x, h0] : data.support) {
    std::size_t xs = sc.x_index(x);
    if (xs > o) throw WindowError("scaled support point lies after Airy time 0");
    ForwardLpp exact(m.inner, xs, static_cast<int>(n), 1, TieBreak::rightmost, o);
    const double w = raw_offset(sc, xs, h0);
    if (k == n) {
      for (std::size_t l = 1; l <= depth; ++l) raw[l - 1] = std::max(raw[l - 1], w + exact.value(static_cast<int>(l), o));
      continue;
    }
    const double tau = -std::sqrt(static_cast<double>(k) / (2 * x));
    const double t = 1.0 + sc.scale() * tau;
    if (t < m.grid().a()) throw WindowError("deep start (-sqrt(k/2x), k) lies before the melon grid");
    std::size_t tk = sc.y_index(tau);
    ForwardLpp deep(m.inner, tk, static_cast<int>(k), 1, TieBreak::rightmost, o);
    const double base = exact.value(1, o) - deep.value(1, o);
    for (std::size_t l = 1; l <= std::min(depth, k); ++l)
      raw[l - 1] = std::max(raw[l - 1], w + deep.value(static_cast<int>(l), o) + base);
  }
  return raw;
}

}  // namespace detail

// G_l = max over the support of h0(x) + A[x -> (0, l)], l = 1..depth. k_start == n gives the
// exact finite-n start; smaller k_start uses the deep start (-sqrt(k/2x), k) and reports
// whether depth floor(2k/3) reproduces G within 1e-6.
inline BoundaryData boundary_data(const MelonEnsemble& m, std::size_t n, const InitialData& data, std::size_t depth,
                                  std::size_t k_start) {
  require(n == m.n(), "n must equal the melon line count");
  require(depth >= 1 && depth <= n, "boundary depth must lie in 1..n");
  require(k_start >= 1 && k_start <= n, "deep start depth must lie in 1..n");
  data.validate();
  ScaledCoordinates sc(n, m.grid());
  BoundaryData bd;
  bd.k_start = k_start;
  bd.exact_start = k_start == n;
  bd.raw = detail::boundary_raw(m, sc, data, depth, k_start);
  const double shift = 2 * sc.n_two_thirds();
  for (double r : bd.raw) bd.G.push_back(std::isfinite(r) ? sc.s() * r - shift : kNegInf);
  if (bd.exact_start) {
    bd.stabilized = true;
    return bd;
  }
  std::size_t k2 = std::max<std::size_t>(1, 2 * k_start / 3);
  auto other = detail::boundary_raw(m, sc, data, depth, k2);
  double gap = 0;
  for (std::size_t l = 0; l < depth; ++l) {
    if (std::isinf(other[l]) || std::isinf(bd.raw[l])) {
      if (std::isinf(other[l]) != std::isinf(bd.raw[l])) gap = std::numeric_limits<double>::infinity();
      continue;
    }
    gap = std::max(gap, sc.s() * std::abs(other[l] - bd.raw[l]));
  }
  bd.stabilization_gap = gap;
  bd.stabilized = gap <= 1e-6;
  return bd;
}

// Melon lines on [Airy 0, end of grid], re-anchored to start at 0; raw melon units.
struct AiryWindowProxy {
  PathEnsemble env;
  ScaledCoordinates coords;
  std::size_t origin_index;
  std::uint64_t source_hash;

  static AiryWindowProxy from_melon(const MelonEnsemble& m, std::size_t n) {
    require(n == m.n(), "n must equal the melon line count");
    ScaledCoordinates sc(n, m.grid());
    std::size_t o = sc.origin_index();
    require(o < m.grid().steps(), "melon grid ends at Airy time 0");
    TimeGrid g(m.grid().node(o), m.grid().b(), m.grid().steps() - o);
    std::vector<SampledPath> lines;
    for (const auto& l : m.inner.lines()) {
      std::vector<double> v(l.values().begin() + static_cast<std::ptrdiff_t>(o), l.values().end());
      const double v0 = v.front();
      for (double& e : v) e -= v0;
      lines.emplace_back(g, std::move(v), l.rate());
    }
    return {PathEnsemble(std::move(lines)), sc, o, m.source_hash};
  }
};

// H_m(y) = max_{l <= m} (G_l + A[(0, l) -> (y, 1)]), one inhomogeneous DP sweep.
inline FixedPointSample finite_depth_truncation(const AiryWindowProxy& proxy, const BoundaryData& G, std::size_t m,
                                                const std::vector<double>& y_nodes) {
  require(m >= 1, "truncation depth must be positive");
  if (m > G.raw.size() || m > proxy.env.line_count())
    throw ValidationError("truncation depth exceeds the available boundary data");
  const auto& sc = proxy.coords;
  std::vector<double> g(G.raw.begin(), G.raw.begin() + static_cast<std::ptrdiff_t>(m));
  SampledPath H = inhomogeneous_blpp(g, proxy.env);
  FixedPointSample out;
  out.y_requested = y_nodes;
  out.n = sc.n();
  out.m = m;
  out.source_hash = proxy.source_hash;
  for (double y : y_nodes) {
    std::size_t ye = sc.y_index(y);
    if (ye < proxy.origin_index) throw WindowError("truncation needs y >= 0");
    out.y.push_back(sc.y_of(ye));
    out.h.push_back(sc.s() * H[ye - proxy.origin_index] - detail::centering(sc, ye));
  }
  return out;
}

// h(.) - h(base) on nodes at or after base, re-anchored at 0.
inline SampledPath increment_process(const FixedPointSample& sample, double base) {
  std::size_t j0 = sample.y.size();
  for (std::size_t j = 0; j < sample.y.size(); ++j)
    if (std::abs(sample.y_requested[j] - base) <= 1e-9 || std::abs(sample.y[j] - base) <= 1e-9) {
      j0 = j;
      break;
    }
  if (j0 == sample.y.size()) throw ValidationError("increment base is not a sample node");
  require(j0 + 1 < sample.y.size(), "increment process needs nodes after the base");
  std::vector<double> v;
  for (std::size_t j = j0; j < sample.h.size(); ++j) v.push_back(sample.h[j] - sample.h[j0]);
  v.front() = 0.0;
  TimeGrid g(0.0, sample.y_requested.back() - sample.y_requested[j0], v.size() - 1);
  return SampledPath(g, std::move(v), 2.0);
}

}  // namespace kpzlab
