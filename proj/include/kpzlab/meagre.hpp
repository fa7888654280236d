#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kpzlab/error.hpp"

namespace kpzlab {

// A bounded subset of the line: either finitely many points, or a Cantor-type set whose
// level-n construction has 2^n intervals of length eps_n. The schedule is stored as
// log(1/eps_n) so deep levels do not underflow.
struct CompactSetSpec {
  enum class Kind { finite, cantor };
  Kind kind = Kind::finite;
  std::vector<double> points;
  std::vector<double> log_inv_eps;  // level n at index n-1, strictly increasing
  double lo = 0.0, hi = 1.0;

  void validate() const {
    require(lo <= hi, "bounding interval needs lo <= hi");
    if (kind == Kind::finite) {
      require(!points.empty(), "finite set must be non-empty");
      for (double p : points) require(std::isfinite(p), "finite set points must be finite");
    } else {
      require(!log_inv_eps.empty(), "Cantor schedule must be non-empty");
      require(log_inv_eps.front() > 0, "Cantor schedule must start below 1");
      for (std::size_t i = 1; i < log_inv_eps.size(); ++i)
        require(log_inv_eps[i] > log_inv_eps[i - 1], "Cantor schedule must be strictly decreasing");
    }
  }
  std::size_t depth() const { return log_inv_eps.size(); }
};

inline CompactSetSpec finite_set(std::vector<double> points) {
  CompactSetSpec s;
  s.kind = CompactSetSpec::Kind::finite;
  s.points = std::move(points);
  s.validate();
  auto [mn, mx] = std::minmax_element(s.points.begin(), s.points.end());
  s.lo = *mn;
  s.hi = *mx;
  return s;
}

// eps_n = exp(-n^sigma).
inline CompactSetSpec generate_thin_cantor(double sigma, int depth) {
  require(sigma > 1, "thin Cantor set needs sigma > 1");
  require(depth >= 1, "thin Cantor set needs depth >= 1");
  CompactSetSpec s;
  s.kind = CompactSetSpec::Kind::cantor;
  for (int n = 1; n <= depth; ++n) s.log_inv_eps.push_back(std::pow(static_cast<double>(n), sigma));
  return s;
}

// eps_n = 3^{-n}.
inline CompactSetSpec middle_third_cantor(int depth) {
  require(depth >= 1, "Cantor set needs depth >= 1");
  CompactSetSpec s;
  s.kind = CompactSetSpec::Kind::cantor;
  for (int n = 1; n <= depth; ++n) s.log_inv_eps.push_back(n * std::log(3.0));
  return s;
}

// log N(eps) where eps = exp(-log_inv_eps). For Cantor kinds N = 2^level with level the first
// construction level whose interval length is <= eps.
inline double log_covering_number(const CompactSetSpec& set, double log_inv_eps) {
  set.validate();
  if (set.kind == CompactSetSpec::Kind::finite) {
    const double eps = std::exp(-log_inv_eps);
    std::vector<double> p(set.points);
    std::sort(p.begin(), p.end());
    std::size_t count = 0;
    for (std::size_t i = 0; i < p.size();) {
      double end = p[i] + eps;
      ++count;
      while (i < p.size() && p[i] <= end) ++i;
    }
    return std::log(static_cast<double>(count));
  }
  if (log_inv_eps <= 0 && std::exp(-log_inv_eps) >= set.hi - set.lo) return 0.0;
  for (std::size_t n = 0; n < set.log_inv_eps.size(); ++n)
    if (set.log_inv_eps[n] >= log_inv_eps) return static_cast<double>(n + 1) * std::log(2.0);
  throw ValidationError("eps below the deepest level of the Cantor schedule");
}

inline std::uint64_t covering_number(const CompactSetSpec& set, double eps) {
  require(eps > 0, "covering number needs eps > 0");
  return static_cast<std::uint64_t>(std::llround(std::exp(log_covering_number(set, -std::log(eps)))));
}

enum class MeagreVerdict { meagre, not_meagre, inconclusive_at_depth };

inline const char* to_string(MeagreVerdict v) {
  switch (v) {
    case MeagreVerdict::meagre: return "meagre";
    case MeagreVerdict::not_meagre: return "not-meagre";
    default: return "inconclusive-at-depth";
  }
}

struct MeagreRow {
  double log_inv_eps;
  double log_count;  // log N(eps)
  double log_ratio;  // log N(eps) - log^r(1/eps)
};

struct MeagreReport {
  double M;
  double r;
  int depth;
  std::vector<MeagreRow> rows;
  MeagreVerdict verdict;
};

// limsup over the schedule is judged on the last ceil(depth/2) levels: all ratios below M and
// non-increasing -> meagre; non-decreasing and ending at or above M -> not meagre.
// Finite sets are meagre outright: N(eps) <= |S| while exp(log^r(1/eps)) -> infinity.
inline MeagreReport classify_meagre(const CompactSetSpec& set, double M, double r, int depth) {
  require(M > 1, "meagreness needs M > 1");
  require(r > 0, "meagreness needs r > 0");
  require(depth >= 3, "meagreness needs depth >= 3");
  set.validate();
  MeagreReport rep{M, r, depth, {}, MeagreVerdict::inconclusive_at_depth};
  if (set.kind == CompactSetSpec::Kind::cantor)
    require(static_cast<std::size_t>(depth) <= set.depth(), "depth exceeds the Cantor schedule");
  for (int j = 1; j <= depth; ++j) {
    double L = set.kind == CompactSetSpec::Kind::finite ? j * std::log(2.0) : set.log_inv_eps[j - 1];
    double lc = log_covering_number(set, L);
    rep.rows.push_back({L, lc, lc - std::pow(L, r)});
  }
  if (set.kind == CompactSetSpec::Kind::finite) {
    rep.verdict = MeagreVerdict::meagre;
    return rep;
  }
  const std::size_t tail = static_cast<std::size_t>((depth + 1) / 2);
  const double logM = std::log(M);
  bool below = true, nonincreasing = true, nondecreasing = true;
  for (std::size_t i = rep.rows.size() - tail; i < rep.rows.size(); ++i) {
    below &= rep.rows[i].log_ratio < logM;
    if (i > rep.rows.size() - tail) {
      nonincreasing &= rep.rows[i].log_ratio <= rep.rows[i - 1].log_ratio;
      nondecreasing &= rep.rows[i].log_ratio >= rep.rows[i - 1].log_ratio;
    }
  }
  if (below && nonincreasing)
    rep.verdict = MeagreVerdict::meagre;
  else if (nondecreasing && rep.rows.back().log_ratio >= logM)
    rep.verdict = MeagreVerdict::not_meagre;
  return rep;
}

}  // namespace kpzlab
