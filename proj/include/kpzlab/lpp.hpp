#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "kpzlab/core_paths.hpp"

namespace kpzlab {

enum class TieBreak { rightmost, leftmost };

inline const char* to_string(TieBreak t) { return t == TieBreak::rightmost ? "rightmost" : "leftmost"; }

struct LatticePoint {
  double time;
  int line;
};

// Path from (start.time, start.line) down to (end.time, end.line); jumps[i] is the time of
// the jump from line start.line - i to start.line - i - 1.
struct GeodesicPath {
  LatticePoint start;
  LatticePoint end;
  std::vector<double> jumps;

  // Line occupied at time t under the cadlag convention.
  int line_at(double t) const {
    int line = start.line;
    for (double j : jumps)
      if (j <= t) --line;
    return line;
  }
};

struct LppResult {
  double value;
  GeodesicPath geodesic;
  TieBreak tie_break;
  bool rightmost() const { return tie_break == TieBreak::rightmost; }
};

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

namespace detail {

inline void check_line(const PathEnsemble& env, int line) {
  if (line < 1 || static_cast<std::size_t>(line) > env.line_count())
    throw ValidationError("line " + std::to_string(line) + " outside ensemble 1.." +
                          std::to_string(env.line_count()));
}

// Kahan-compensated accumulator.
struct KahanSum {
  double sum = 0, c = 0;
  void add(double v) {
    double y = v - c;
    double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

}  // namespace detail

inline double path_length(const PathEnsemble& env, const GeodesicPath& g) {
  detail::check_line(env, g.start.line);
  detail::check_line(env, g.end.line);
  require(g.start.line >= g.end.line, "path must descend from start line to end line");
  require(g.jumps.size() == static_cast<std::size_t>(g.start.line - g.end.line), "jump count must equal line drop");
  const auto& grid = env.grid();
  std::vector<std::size_t> t;
  t.push_back(grid.index_of(g.start.time));
  for (double j : g.jumps) t.push_back(grid.index_of(j));
  t.push_back(grid.index_of(g.end.time));
  for (std::size_t i = 1; i < t.size(); ++i) require(t[i - 1] <= t[i], "jump times must be non-decreasing");
  detail::KahanSum s;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const auto& f = env.line(static_cast<std::size_t>(g.start.line) - i).values();
    s.add(f[t[i + 1]] - f[t[i]]);
  }
  return s.sum;
}

// Forward DP from a fixed start (start_idx, start_line) over lines start_line..min_line and
// grid indices start_idx..end_idx. value(k, t) = f[(x, start_line) -> (t, k)].
class ForwardLpp {
 public:
  ForwardLpp(const PathEnsemble& env, std::size_t start_idx, int start_line, int min_line = 1,
             TieBreak tie = TieBreak::rightmost, std::size_t end_idx = SIZE_MAX)
      : start_idx_(start_idx), start_line_(start_line), min_line_(min_line), tie_(tie) {
    detail::check_line(env, start_line);
    detail::check_line(env, min_line);
    require(min_line <= start_line, "target line must not be below the start line");
    if (end_idx == SIZE_MAX) end_idx = env.grid().steps();
    require(start_idx <= end_idx && end_idx <= env.grid().steps(), "DP time range invalid");
    end_idx_ = end_idx;
    const std::size_t len = end_idx - start_idx + 1;
    const std::size_t nl = static_cast<std::size_t>(start_line - min_line + 1);
    value_.assign(nl, std::vector<double>(len));
    arg_.assign(nl, std::vector<std::uint32_t>(len));
    const auto& top = env.line(static_cast<std::size_t>(start_line)).values();
    for (std::size_t t = 0; t < len; ++t) value_[0][t] = top[start_idx + t] - top[start_idx];
    for (std::size_t r = 1; r < nl; ++r) {
      const auto& f = env.line(static_cast<std::size_t>(start_line) - r).values();
      const auto& prev = value_[r - 1];
      auto& cur = value_[r];
      auto& arg = arg_[r];
      double run = kNegInf;
      std::uint32_t best = 0;
      const bool right = tie == TieBreak::rightmost;
      for (std::size_t t = 0; t < len; ++t) {
        double cand = prev[t] - f[start_idx + t];
        if (right ? cand >= run : cand > run) {
          run = cand;
          best = static_cast<std::uint32_t>(t);
        }
        cur[t] = run + f[start_idx + t];
        arg[t] = best;
      }
    }
  }

  std::size_t start_index() const { return start_idx_; }
  std::size_t end_index() const { return end_idx_; }
  int start_line() const { return start_line_; }
  int min_line() const { return min_line_; }
  TieBreak tie_break() const { return tie_; }

  bool covers(int line, std::size_t t) const {
    return line >= min_line_ && line <= start_line_ && t >= start_idx_ && t <= end_idx_;
  }
  double value(int line, std::size_t t) const {
    require(covers(line, t), "point outside DP table");
    return value_[static_cast<std::size_t>(start_line_ - line)][t - start_idx_];
  }
  // Grid indices of the jumps (non-decreasing), first jump first.
  std::vector<std::size_t> jump_indices(int line, std::size_t t) const {
    require(covers(line, t), "point outside DP table");
    std::size_t drop = static_cast<std::size_t>(start_line_ - line);
    std::vector<std::size_t> out(drop);
    std::size_t cur = t - start_idx_;
    for (std::size_t r = drop; r >= 1; --r) {
      cur = arg_[r][cur];
      out[r - 1] = cur + start_idx_;
    }
    return out;
  }

 private:
  std::size_t start_idx_, end_idx_ = 0;
  int start_line_, min_line_;
  TieBreak tie_;
  std::vector<std::vector<double>> value_;
  std::vector<std::vector<std::uint32_t>> arg_;
};

// Backward DP to a fixed end: value(k, z) = f[(z, k) -> (end, end_line)] for
// k in end_line..max_line, z in begin_idx..end_idx.
class BackwardLpp {
 public:
  BackwardLpp(const PathEnsemble& env, std::size_t end_idx, int end_line, int max_line, std::size_t begin_idx = 0)
      : begin_idx_(begin_idx), end_idx_(end_idx), end_line_(end_line), max_line_(max_line) {
    detail::check_line(env, end_line);
    detail::check_line(env, max_line);
    require(end_line <= max_line, "start line must not be above the end line");
    require(begin_idx <= end_idx && end_idx <= env.grid().steps(), "DP time range invalid");
    const std::size_t len = end_idx - begin_idx + 1;
    const std::size_t nl = static_cast<std::size_t>(max_line - end_line + 1);
    value_.assign(nl, std::vector<double>(len));
    const auto& bottom = env.line(static_cast<std::size_t>(end_line)).values();
    for (std::size_t z = 0; z < len; ++z) value_[0][z] = bottom[end_idx] - bottom[begin_idx + z];
    for (std::size_t r = 1; r < nl; ++r) {
      const auto& f = env.line(static_cast<std::size_t>(end_line) + r).values();
      const auto& prev = value_[r - 1];
      auto& cur = value_[r];
      double run = kNegInf;
      for (std::size_t z = len; z-- > 0;) {
        run = std::max(run, f[begin_idx + z] + prev[z]);
        cur[z] = run - f[begin_idx + z];
      }
    }
  }

  bool covers(int line, std::size_t z) const {
    return line >= end_line_ && line <= max_line_ && z >= begin_idx_ && z <= end_idx_;
  }
  double value(int line, std::size_t z) const {
    require(covers(line, z), "point outside DP table");
    return value_[static_cast<std::size_t>(line - end_line_)][z - begin_idx_];
  }

 private:
  std::size_t begin_idx_, end_idx_;
  int end_line_, max_line_;
  std::vector<std::vector<double>> value_;
};

inline GeodesicPath make_geodesic(const PathEnsemble& env, const ForwardLpp& dp, int line, std::size_t t) {
  const auto& g = env.grid();
  GeodesicPath path{{g.node(dp.start_index()), dp.start_line()}, {g.node(t), line}, {}};
  for (std::size_t j : dp.jump_indices(line, t)) path.jumps.push_back(g.node(j));
  return path;
}

inline LppResult last_passage(const PathEnsemble& env, LatticePoint from, LatticePoint to,
                              TieBreak tie = TieBreak::rightmost) {
  detail::check_line(env, from.line);
  detail::check_line(env, to.line);
  require(from.line >= to.line, "last passage needs from.line >= to.line");
  require(from.time <= to.time, "last passage needs from.time <= to.time");
  const auto& g = env.grid();
  std::size_t s = g.index_of(from.time), e = g.index_of(to.time);
  ForwardLpp dp(env, s, from.line, to.line, tie, e);
  return {dp.value(to.line, e), make_geodesic(env, dp, to.line, e), tie};
}

enum class CompositionMode { same_line, line_split, point_split };

// Max residual of the metric composition law. same_line: split on line k;
// line_split: jump from k to k-1; point_split: through (z, k') maximized over k', checked
// at z_time if given, otherwise at every node in [from.time, to.time].
inline double check_metric_composition(const PathEnsemble& env, LatticePoint from, LatticePoint to, int k,
                                       CompositionMode mode, std::optional<double> z_time = std::nullopt) {
  detail::check_line(env, from.line);
  detail::check_line(env, to.line);
  require(from.line >= to.line && from.time <= to.time, "composition endpoints out of order");
  const auto& g = env.grid();
  std::size_t s = g.index_of(from.time), e = g.index_of(to.time);
  if (mode == CompositionMode::same_line)
    require(k >= to.line && k <= from.line, "same-line split needs m <= k <= l");
  if (mode == CompositionMode::line_split)
    require(k >= to.line + 1 && k <= from.line, "line split needs m < k <= l");
  ForwardLpp fwd(env, s, from.line, to.line, TieBreak::rightmost, e);
  BackwardLpp bwd(env, e, to.line, from.line, s);
  const double lhs = fwd.value(to.line, e);
  double rhs = kNegInf;
  double residual = 0;
  switch (mode) {
    case CompositionMode::same_line:
      for (std::size_t z = s; z <= e; ++z) rhs = std::max(rhs, fwd.value(k, z) + bwd.value(k, z));
      residual = std::abs(lhs - rhs);
      break;
    case CompositionMode::line_split:
      for (std::size_t z = s; z <= e; ++z) rhs = std::max(rhs, fwd.value(k, z) + bwd.value(k - 1, z));
      residual = std::abs(lhs - rhs);
      break;
    case CompositionMode::point_split: {
      std::size_t z0 = s, z1 = e;
      if (z_time) {
        z0 = z1 = g.index_of(*z_time);
        require(z0 >= s && z0 <= e, "split time outside [x, y]");
      }
      for (std::size_t z = z0; z <= z1; ++z) {
        double best = kNegInf;
        for (int kk = to.line; kk <= from.line; ++kk) best = std::max(best, fwd.value(kk, z) + bwd.value(kk, z));
        residual = std::max(residual, std::abs(lhs - best));
      }
      break;
    }
  }
  return residual;
}

// H(t) = max_l (g_l + f[(t0, l) -> (t, 1)]) for t >= t0, one DP sweep over lines m..1.
inline std::vector<double> inhomogeneous_lpp_sweep(const std::vector<double>& g_vec, const PathEnsemble& env,
                                                   std::size_t start_idx) {
  const std::size_t m = g_vec.size();
  require(m >= 1, "boundary vector must be non-empty");
  require(m <= env.line_count(), "boundary vector longer than the ensemble");
  require(std::isfinite(g_vec[0]), "first boundary value must be finite");
  for (std::size_t i = 1; i < m; ++i)
    require(g_vec[i] <= g_vec[i - 1], "boundary vector must be non-increasing");
  const std::size_t len = env.grid().size() - start_idx;
  std::vector<double> v(len, kNegInf);
  for (std::size_t r = m; r >= 1; --r) {
    const auto& f = env.line(r).values();
    const double f0 = f[start_idx];
    double run = kNegInf;
    std::vector<double> next(len);
    for (std::size_t t = 0; t < len; ++t) {
      run = std::max(run, v[t] - f[start_idx + t]);
      double via_below = run + f[start_idx + t];
      double fresh = g_vec[r - 1] + (f[start_idx + t] - f0);
      next[t] = std::max(via_below, fresh);
    }
    v = std::move(next);
  }
  return v;
}

inline SampledPath inhomogeneous_blpp(const std::vector<double>& g_vec, const PathEnsemble& env) {
  for (std::size_t i = 1; i <= std::min(g_vec.size(), env.line_count()); ++i)
    require(env.line(i)[0] == 0.0, "inhomogeneous BLPP needs lines starting at 0");
  return SampledPath(env.grid(), inhomogeneous_lpp_sweep(g_vec, env, 0), env.rate());
}

inline std::vector<double> inhomogeneous_blpp(const std::vector<double>& g_vec, const PathEnsemble& env,
                                              const std::vector<double>& y_nodes) {
  SampledPath h = inhomogeneous_blpp(g_vec, env);
  std::vector<double> out;
  out.reserve(y_nodes.size());
  for (double y : y_nodes) out.push_back(h.at(y));
  return out;
}

}  // namespace kpzlab
