#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kpzlab/error.hpp"
#include "kpzlab/rng.hpp"

namespace kpzlab {

class TimeGrid {
 public:
  TimeGrid() = default;
  TimeGrid(double a, double b, std::size_t steps) : a_(a), b_(b), steps_(steps) {
    require(std::isfinite(a) && std::isfinite(b) && a < b, "time grid needs finite a < b");
    require(steps >= 1, "time grid needs at least one step");
  }

  double a() const { return a_; }
  double b() const { return b_; }
  std::size_t steps() const { return steps_; }
  std::size_t size() const { return steps_ + 1; }
  double delta() const { return (b_ - a_) / static_cast<double>(steps_); }
  double node(std::size_t j) const {
    return j == steps_ ? b_ : a_ + (b_ - a_) * static_cast<double>(j) / static_cast<double>(steps_);
  }

  // Index of t if it is a node (relative tolerance 1e-9 of a step), else nullopt.
  std::optional<std::size_t> find(double t) const {
    double u = (t - a_) / delta();
    double j = std::nearbyint(u);
    if (j < 0 || j > static_cast<double>(steps_) || std::abs(u - j) > 1e-9) return std::nullopt;
    return static_cast<std::size_t>(j);
  }
  std::size_t index_of(double t) const {
    auto j = find(t);
    if (!j) throw ValidationError("time " + std::to_string(t) + " is not a grid node");
    return *j;
  }
  // Nearest node; throws if t lies outside [a, b].
  std::size_t nearest(double t) const {
    double tol = 1e-9 * delta();
    if (!(t >= a_ - tol && t <= b_ + tol))
      throw WindowError("time " + std::to_string(t) + " outside grid [" + std::to_string(a_) +
                        ", " + std::to_string(b_) + "]");
    double j = std::nearbyint((t - a_) / delta());
    return static_cast<std::size_t>(std::clamp(j, 0.0, static_cast<double>(steps_)));
  }

  bool operator==(const TimeGrid&) const = default;

 private:
  double a_ = 0.0;
  double b_ = 1.0;
  std::size_t steps_ = 1;
};

class SampledPath {
 public:
  SampledPath() = default;
  SampledPath(TimeGrid grid, std::vector<double> values, double rate = 2.0)
      : grid_(grid), values_(std::move(values)), rate_(rate) {
    require(values_.size() == grid_.size(), "path length does not match grid");
    require(rate_ > 0 && std::isfinite(rate_), "path rate must be positive");
    for (double v : values_) require(std::isfinite(v), "path values must be finite");
  }

  const TimeGrid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }
  double rate() const { return rate_; }
  double operator[](std::size_t j) const { return values_[j]; }
  double at(double t) const { return values_[grid_.index_of(t)]; }
  std::size_t size() const { return values_.size(); }

 private:
  TimeGrid grid_;
  std::vector<double> values_;
  double rate_ = 2.0;
};

// Lines are stored 0-based; line(i) takes the 1-based index i (1 = top).
class PathEnsemble {
 public:
  PathEnsemble() = default;
  explicit PathEnsemble(std::vector<SampledPath> lines) : lines_(std::move(lines)) {
    require(!lines_.empty(), "ensemble needs at least one line");
    for (const auto& l : lines_) require(l.grid() == lines_.front().grid(), "ensemble lines must share a grid");
  }

  const TimeGrid& grid() const { return lines_.front().grid(); }
  std::size_t line_count() const { return lines_.size(); }
  const SampledPath& line(std::size_t i) const {
    require(i >= 1 && i <= lines_.size(), "line index out of range");
    return lines_[i - 1];
  }
  const std::vector<SampledPath>& lines() const { return lines_; }
  std::vector<SampledPath>& mutable_lines() { return lines_; }
  double rate() const { return lines_.front().rate(); }

 private:
  std::vector<SampledPath> lines_;
};

struct EndpointVector {
  std::vector<double> values;
  bool strictly_decreasing = true;

  EndpointVector() = default;
  EndpointVector(std::vector<double> v, bool decreasing = true) : values(std::move(v)), strictly_decreasing(decreasing) {
    if (decreasing)
      for (std::size_t i = 1; i < values.size(); ++i)
        require(values[i] < values[i - 1], "endpoint vector must be strictly decreasing");
  }
  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

inline SampledPath sample_brownian(const TimeGrid& grid, double rate, Stream& rng, double start = 0.0) {
  require(rate > 0 && std::isfinite(rate), "Brownian rate must be positive");
  std::vector<double> v(grid.size());
  double sd = std::sqrt(rate * grid.delta());
  v[0] = start;
  for (std::size_t j = 1; j < v.size(); ++j) v[j] = v[j - 1] + sd * rng.normal();
  return SampledPath(grid, std::move(v), rate);
}

inline std::vector<SampledPath> sample_brownian_lines(const TimeGrid& grid, double rate, std::size_t count, Stream& rng) {
  std::vector<SampledPath> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample_brownian(grid, rate, rng));
  return out;
}

// Motion plus exact affine endpoint correction; endpoints are assigned, not computed.
inline SampledPath sample_bridge(const TimeGrid& grid, double rate, double x0, double x1, Stream& rng) {
  SampledPath b = sample_brownian(grid, rate, rng);
  const auto& w = b.values();
  std::vector<double> v(grid.size());
  const double n = static_cast<double>(grid.steps());
  const double end = w.back();
  for (std::size_t j = 0; j < v.size(); ++j) {
    double s = static_cast<double>(j) / n;
    v[j] = w[j] - s * end + (1.0 - s) * x0 + s * x1;
  }
  v.front() = x0;
  v.back() = x1;
  return SampledPath(grid, std::move(v), rate);
}

// f(x) - ((x-a)/(b-a)) f(b) - ((b-x)/(b-a)) f(a) on the nodes of [a, b].
inline SampledPath affine_shift(const SampledPath& path, double a, double b) {
  require(a < b, "affine shift needs a < b");
  const auto& g = path.grid();
  std::size_t ia = g.index_of(a), ib = g.index_of(b);
  const double fa = path[ia], fb = path[ib];
  const double len = static_cast<double>(ib - ia);
  std::vector<double> v(ib - ia + 1);
  for (std::size_t j = 0; j < v.size(); ++j) {
    double s = static_cast<double>(j) / len;
    v[j] = path[ia + j] - s * fb - (1.0 - s) * fa;
  }
  v.front() = 0.0;
  v.back() = 0.0;
  return SampledPath(TimeGrid(g.node(ia), g.node(ib), ib - ia), std::move(v), path.rate());
}

// Round to the dyadic lattice 2^-bits. With |values| < 2^20 every sum and difference of
// lattice values is exact in double precision, so LPP identities hold bitwise.
inline double lattice_round(double v, int bits = 32) { return std::ldexp(std::nearbyint(std::ldexp(v, bits)), -bits); }

inline SampledPath snap_to_lattice(const SampledPath& p, int bits = 32) {
  std::vector<double> v(p.values());
  for (double& x : v) x = lattice_round(x, bits);
  return SampledPath(p.grid(), std::move(v), p.rate());
}

inline PathEnsemble snap_to_lattice(const PathEnsemble& env, int bits = 32) {
  std::vector<SampledPath> lines;
  for (const auto& l : env.lines()) lines.push_back(snap_to_lattice(l, bits));
  return PathEnsemble(std::move(lines));
}

// Independent rate-`rate` motions from 0, snapped to the exact-arithmetic lattice.
inline PathEnsemble sample_environment(const TimeGrid& grid, std::size_t lines, double rate, Stream& rng) {
  auto raw = sample_brownian_lines(grid, rate, lines, rng);
  for (auto& l : raw) l = snap_to_lattice(l);
  return PathEnsemble(std::move(raw));
}

namespace detail {
inline void check_rn_args(std::size_t m, double x, double y, std::size_t a_len) {
  require(m >= 1, "dimension m must be positive");
  require(x > 0 && x < y, "RN formulas need 0 < x < y");
  require(a_len == m, "vector length must equal m");
}
inline double sq_norm(std::span<const double> v) {
  double s = 0;
  for (double e : v) s += e * e;
  return s;
}
}  // namespace detail

// Density of the time-x marginal of m rate-2 bridges on [0,y] (0 -> a) against m
// rate-2 motions at time x.
inline double bridge_rn_density(std::span<const double> omega_x, std::size_t m, double x, double y,
                                std::span<const double> a_vec) {
  detail::check_rn_args(m, x, y, a_vec.size());
  require(omega_x.size() == m, "omega length must equal m");
  double dev = 0;
  for (std::size_t i = 0; i < m; ++i) {
    double d = omega_x[i] - (x / y) * a_vec[i];
    dev += d * d;
  }
  double log_rho = 0.5 * static_cast<double>(m) * std::log(y / (y - x)) - y * dev / (4 * x * (y - x)) +
                   detail::sq_norm(omega_x) / (4 * x);
  return std::exp(log_rho);
}

inline double bridge_rn_linf_bound(std::size_t m, double x, double y, std::span<const double> a_vec) {
  detail::check_rn_args(m, x, y, a_vec.size());
  return std::exp(0.5 * static_cast<double>(m) * std::log(y / (y - x)) + detail::sq_norm(a_vec) / (4 * y));
}

// L^p norm of bridge_rn_density under the rate-2 Gaussian marginal at time x.
// p = +infinity dispatches to the L^infinity bound.
inline double bridge_rn_lp_norm(double p, std::size_t m, double x, double y, std::span<const double> a_vec) {
  if (std::isinf(p) && p > 0) return bridge_rn_linf_bound(m, x, y, a_vec);
  require(p > 1, "L^p norm needs p > 1 (use infinity for the sup bound)");
  detail::check_rn_args(m, x, y, a_vec.size());
  const double md = static_cast<double>(m);
  double log_norm = 0.5 * md * std::log(y / (y - x)) - md / (2 * p) * std::log1p(p * x / (y - x)) +
                    x * detail::sq_norm(a_vec) / (4 * (y - x)) * (p / ((p - 1) * x + y) - 1 / y);
  return std::exp(log_norm);
}

struct SeriesValue {
  double probability;
  double truncation_bound;  // |first omitted term|
  double argument;          // z at which the unit-interval series was evaluated
  double lower_bound() const { return std::max(0.0, probability - truncation_bound); }
};

// P(sup_{[0,1]} |B| <= z) for standard BM:
// (4/pi) sum_{n>=0} (-1)^n/(2n+1) exp(-(2n+1)^2 pi^2 / (8 z^2)).
inline SeriesValue feller_series(double z, int terms) {
  require(z > 0, "series argument must be positive");
  require(terms >= 1, "series needs at least one term");
  auto term = [z](int n) {
    double k = 2.0 * n + 1.0;
    return 4.0 / std::numbers::pi / k * std::exp(-k * k * std::numbers::pi * std::numbers::pi / (8 * z * z));
  };
  double s = 0;
  for (int n = 0; n < terms; ++n) s += (n % 2 == 0 ? 1.0 : -1.0) * term(n);
  return {s, term(terms), z};
}

// Rate-1 motion on [0,T]: z = a/sqrt(T). rate_two: the rescaling chain for a rate-two
// bridge, z = a/(2 sqrt(T)).
inline SeriesValue bridge_max_stay_prob(double a, double T, int terms, bool rate_two) {
  require(a > 0 && T > 0, "stay probability needs a, T > 0");
  double z = rate_two ? a / (2 * std::sqrt(T)) : a / std::sqrt(T);
  return feller_series(z, terms);
}

}  // namespace kpzlab
