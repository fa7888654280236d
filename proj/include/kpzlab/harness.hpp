#pragma once

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kpzlab/config.hpp"
#include "kpzlab/kpz.hpp"
#include "kpzlab/stats.hpp"

namespace kpzlab {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------- tails

struct TailFit {
  double c;
  double p;
  double rss;
  std::size_t points;
};

struct TailEstimate {
  std::vector<double> thresholds;
  std::vector<double> survival;  // P(X > t)
  std::vector<Interval> ci95;
  std::optional<TailFit> fit;
  std::string fit_refused;  // reason when fit is empty
};

// Survival with Wilson intervals; stretched-exponential fit S(t) ~ exp(-c t^p) by least
// squares of log(-log S) on log t over thresholds with S in [1e-3, 0.5].
inline TailEstimate empirical_tail(const std::vector<double>& samples, const std::vector<double>& thresholds) {
  require(samples.size() >= 100, "tail estimation needs at least 100 samples");
  require(!thresholds.empty(), "tail estimation needs thresholds");
  require(std::is_sorted(thresholds.begin(), thresholds.end()), "thresholds must be ascending");
  std::vector<double> sorted(samples);
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  TailEstimate te;
  te.thresholds = thresholds;
  std::vector<double> lx, ly;
  for (double t : thresholds) {
    std::size_t above = static_cast<std::size_t>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), t));
    double s = static_cast<double>(above) / static_cast<double>(n);
    te.survival.push_back(s);
    te.ci95.push_back(wilson_interval(above, n));
    if (t > 0 && s >= 1e-3 && s <= 0.5) {
      lx.push_back(std::log(t));
      ly.push_back(std::log(-std::log(s)));
    }
  }
  std::set<double> distinct(lx.begin(), lx.end());
  std::set<double> levels(ly.begin(), ly.end());
  if (distinct.size() < 3 || levels.size() < 2) {
    te.fit_refused = "degenerate survival: fewer than 3 usable thresholds with survival in [1e-3, 0.5]";
    return te;
  }
  LinearFit f = least_squares(lx, ly);
  te.fit = TailFit{std::exp(f.intercept), f.slope, f.rss, lx.size()};
  return te;
}

// Thresholds at evenly spaced sample quantiles.
inline std::vector<double> quantile_thresholds(const std::vector<double>& samples, std::size_t count = 40) {
  std::vector<double> t;
  for (std::size_t i = 1; i <= count; ++i) t.push_back(quantile(samples, static_cast<double>(i) / (count + 1.0)));
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

// ---------------------------------------------------------------- regularity probe

struct PathEvent {
  std::string name;
  std::function<bool(const SampledPath&)> test;
};

inline PathEvent sup_norm_ball(std::string name, std::vector<double> centre, double radius) {
  return {std::move(name), [c = std::move(centre), radius](const SampledPath& p) {
            require(p.size() == c.size(), "event centre and path lengths differ");
            for (std::size_t j = 0; j < c.size(); ++j)
              if (std::abs(p[j] - c[j]) > radius) return false;
            return true;
          }};
}

inline PathEvent threshold_crossing(std::string name, double level) {
  return {std::move(name), [level](const SampledPath& p) {
            return *std::max_element(p.values().begin(), p.values().end()) >= level;
          }};
}

// count sup-norm balls: centred at the zero path and at calibration paths, with radii at
// calibration quantiles of the sup distance (levels cycling 0.1, 0.2, 0.3, 0.5). Calibration
// paths must be independent of the reference used in the probe.
inline std::vector<PathEvent> default_ball_family(const std::vector<SampledPath>& calibration, std::size_t count) {
  require(calibration.size() >= 20, "ball family needs at least 20 calibration paths");
  static constexpr double levels[] = {0.1, 0.2, 0.3, 0.5};
  std::vector<PathEvent> out;
  for (std::size_t e = 0; e < count; ++e) {
    std::vector<double> centre(calibration.front().size(), 0.0);
    std::size_t skip = calibration.size();
    if (e > 0) {
      skip = (e - 1) % calibration.size();
      centre = calibration[skip].values();
    }
    std::vector<double> dist;
    for (std::size_t i = 0; i < calibration.size(); ++i) {
      if (i == skip) continue;
      double d = 0;
      for (std::size_t j = 0; j < centre.size(); ++j) d = std::max(d, std::abs(calibration[i][j] - centre[j]));
      dist.push_back(d);
    }
    double q = levels[e % 4];
    out.push_back(sup_norm_ball("ball" + std::to_string(e) + "_q" + std::to_string(q).substr(0, 3), centre,
                                quantile(dist, q)));
  }
  return out;
}

struct ProbeRow {
  std::string event;
  double p_hat;
  Interval p_ci;
  double mu_hat;
  Interval mu_ci;
  double ratio;
  bool evaluable;  // reference mass >= 10 / replicas
  bool flagged;
};

// Flags an event when the Wilson lower bound of P(A) exceeds kappa times the Wilson upper
// bound of mu(A).
inline std::vector<ProbeRow> brownian_regularity_probe(const std::vector<SampledPath>& samples,
                                                       const std::vector<PathEvent>& events,
                                                       const std::vector<SampledPath>& reference, double kappa = 3.0) {
  require(!events.empty(), "regularity probe needs a non-empty event family");
  require(samples.size() >= 200 && reference.size() >= 200, "regularity probe needs at least 200 paths per side");
  std::vector<ProbeRow> rows;
  for (const auto& ev : events) {
    std::size_t a = 0, b = 0;
    for (const auto& p : samples) a += ev.test(p);
    for (const auto& p : reference) b += ev.test(p);
    ProbeRow r;
    r.event = ev.name;
    r.p_hat = static_cast<double>(a) / samples.size();
    r.mu_hat = static_cast<double>(b) / reference.size();
    r.p_ci = wilson_interval(a, samples.size());
    r.mu_ci = wilson_interval(b, reference.size());
    r.ratio = r.mu_hat > 0 ? r.p_hat / r.mu_hat : std::numeric_limits<double>::infinity();
    r.evaluable = b >= 10;
    r.flagged = r.evaluable && r.p_ci.lo > kappa * r.mu_ci.hi;
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------- L^2 density-ratio growth

struct HistogramNorm {
  double log_norm;  // log sqrt(sum_cells p^2 / q)
  std::size_t dims;
  std::size_t bins;
  std::size_t cells;
};

// Histogram estimate of the L^2(reference) norm of dP/dQ from finite-dimensional marginals.
// Bin edges are reference quantiles per coordinate (equal reference mass per bin).
inline HistogramNorm histogram_l2_norm(const std::vector<std::vector<double>>& samples,
                                       const std::vector<std::vector<double>>& reference, std::size_t bins) {
  require(!samples.empty() && !reference.empty(), "histogram norm needs samples on both sides");
  const std::size_t d = reference.front().size();
  require(d >= 1 && d <= 4, "histogram norm uses 1 to 4 probe coordinates");
  require(bins >= 2, "histogram norm needs at least 2 bins");
  std::vector<std::vector<double>> edges(d);
  for (std::size_t c = 0; c < d; ++c) {
    std::vector<double> col;
    for (const auto& r : reference) col.push_back(r.at(c));
    for (std::size_t b = 1; b < bins; ++b) edges[c].push_back(quantile(col, static_cast<double>(b) / bins));
  }
  auto cell = [&](const std::vector<double>& row) {
    require(row.size() == d, "histogram rows must share a dimension");
    std::size_t idx = 0;
    for (std::size_t c = 0; c < d; ++c)
      idx = idx * bins + static_cast<std::size_t>(std::upper_bound(edges[c].begin(), edges[c].end(), row[c]) -
                                                  edges[c].begin());
    return idx;
  };
  std::size_t cells = 1;
  for (std::size_t c = 0; c < d; ++c) cells *= bins;
  std::vector<double> p(cells, 0.0), q(cells, 0.0);
  for (const auto& r : samples) p[cell(r)] += 1.0 / samples.size();
  for (const auto& r : reference) q[cell(r)] += 1.0 / reference.size();
  double s = 0;
  for (std::size_t i = 0; i < cells; ++i) {
    if (p[i] == 0) continue;
    if (q[i] == 0) throw ValidationError("histogram bins with zero reference mass");
    s += p[i] * p[i] / q[i];
  }
  return {0.5 * std::log(s), d, bins, cells};
}

struct GrowthFit {
  double d_hat;
  double intercept;
  std::vector<double> residuals;
};

// Slope of log-norm against m^2 log m.
inline GrowthFit fit_lp_norm_growth(const std::vector<std::pair<int, double>>& log_norms) {
  std::set<int> ms;
  for (auto [m, v] : log_norms) ms.insert(m);
  require(ms.size() >= 3, "growth fit needs at least 3 values of m");
  std::vector<double> x, y;
  for (auto [m, v] : log_norms) {
    require(m >= 1, "growth fit needs m >= 1");
    x.push_back(m * m * std::log(static_cast<double>(m)));
    y.push_back(v);
  }
  LinearFit f = least_squares(x, y);
  return {f.slope, f.intercept, f.residuals};
}

// ---------------------------------------------------------------- replicated runs

struct ColumnSummary {
  std::string name;
  std::size_t count;
  double mean;
  double sd;
  double se;
  double min;
  double max;
  Interval ci95;  // Wilson for 0/1 columns, mean +- 1.96 se otherwise
};

struct RunRecord {
  std::string version = kVersion;
  ExperimentConfig config;
  std::uint64_t config_hash = 0;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> outputs;  // replica x column; NaN rows for failures
  std::vector<std::string> errors;           // per replica, empty on success
  std::size_t failures = 0;
  bool aborted = false;
  std::vector<ColumnSummary> summary;
  std::vector<ProbeRow> probe;
};

struct ReplicaOp {
  std::vector<std::string> columns;
  std::function<std::vector<double>(Stream&)> run;
};

namespace detail {

inline std::vector<std::string> numbered(const std::string& stem, const std::vector<double>& vals) {
  std::vector<std::string> out;
  for (double v : vals) {
    std::ostringstream s;
    s << stem << v;
    out.push_back(s.str());
  }
  return out;
}

}  // namespace detail

// Builds the per-replica operation named by config.op.
inline ReplicaOp make_replica_op(const ExperimentConfig& c) {
  const std::size_t n = c.count("n", 64);
  const TimeGrid grid = parse_grid(c.get("grid", "0,2,8192"));
  const double rate = c.number("rate", 1.0);
  require(n >= 1, "n must be positive");
  if (c.op == "lpp-mean") {
    return {{"value", "ratio"}, [=](Stream& rng) {
              auto env = sample_environment(grid, n, rate, rng);
              ForwardLpp dp(env, 0, static_cast<int>(n), 1);
              double v = dp.value(1, grid.steps());
              return std::vector<double>{v, v / (2 * std::sqrt(static_cast<double>(n) * (grid.b() - grid.a())))};
            }};
  }
  if (c.op == "melon-identity") {
    return {{"max_abs_diff"}, [=](Stream& rng) {
              auto env = sample_environment(grid, n, rate, rng);
              auto m = melon(env);
              ForwardLpp dp(env, 0, static_cast<int>(n), 1);
              double d = 0;
              for (std::size_t t = 0; t <= grid.steps(); ++t)
                d = std::max(d, std::abs(m.inner.line(1)[t] - dp.value(1, t)));
              return std::vector<double>{d};
            }};
  }
  if (c.op == "airy-top") {
    const double y = c.number("y", 0.0);
    return {{"A1"}, [=](Stream& rng) {
              auto m = random_melon(n, grid, rng, rate);
              return std::vector<double>{rescale_to_airy(m, n, TimeGrid(y, y + 1.0, 1)).line(1)[0]};
            }};
  }
  if (c.op == "jump-times") {
    const double x = c.number("x", 1.0), y = c.number("y", 0.0);
    const auto ks = c.list("ks", "4,9,16");
    for (double k : ks) require(k >= 1 && k <= static_cast<double>(n) && k == std::floor(k), "ks must be lines 1..n");
    return {detail::numbered("centred_k", ks), [=](Stream& rng) {
              auto m = random_melon(n, grid, rng, rate);
              auto p = jump_times(m, n, x, y);
              std::vector<double> out;
              for (double k : ks) out.push_back(p.z(static_cast<std::size_t>(k)) / std::sqrt(k) + 1 / std::sqrt(2 * x));
              return out;
            }};
  }
  if (c.op == "intercept") {
    const double x = c.number("x", 1.0), y = c.number("y", 0.0);
    return {{"L0"}, [=](Stream& rng) {
              auto m = random_melon(n, grid, rng, rate);
              return std::vector<double>{static_cast<double>(intercept_line(m, n, x, y))};
            }};
  }
  if (c.op == "disjointness") {
    const double x = c.number("x", 1.0), y1 = c.number("y1", 0.0), y2 = c.number("y2", 0.0);
    const auto eps = c.list("eps", "0.4,0.2,0.1,0.05");
    return {detail::numbered("disjoint_eps", eps), [=](Stream& rng) {
              auto m = random_melon(n, grid, rng, rate);
              std::vector<double> out;
              for (double e : eps) out.push_back(disjointness_probe(m, n, x, e, y1, y2) ? 1.0 : 0.0);
              return out;
            }};
  }
  if (c.op == "coalescence") {
    const auto speeds = c.list("speeds", "1,1.25,1.5,1.75");
    const int ell = static_cast<int>(c.count("ell", 2));
    return {{"sup_depth", "censored"}, [=](Stream& rng) {
              auto m = random_melon(n, grid, rng, rate);
              double worst = 0, censored = 0;
              for (double x : speeds) {
                auto r = coalescence_depth(m, n, x, ell);
                if (r.coalesced())
                  worst = std::max(worst, static_cast<double>(*r.depth));
                else
                  censored = 1;
              }
              return std::vector<double>{censored ? std::numeric_limits<double>::infinity() : worst, censored};
            }};
  }
  if (c.op == "airy-lpp") {
    const std::size_t k = c.count("k", 4);
    const double x = c.number("x", 1.0);
    require(k >= 1 && k <= n, "k must lie in 1..n");
    return {{"value", "centred"}, [=](Stream& rng) {
              auto m = random_melon(n, grid, rng, rate);
              ScaledCoordinates sc(n, m.grid());
              std::size_t o = sc.origin_index(), e = sc.y_index(x);
              ForwardLpp dp(m.inner, o, static_cast<int>(k), 1, TieBreak::rightmost, e);
              double xe = sc.y_of(e);
              double v = sc.s() * dp.value(1, e) - 2 * xe * sc.n_third();
              return std::vector<double>{v, v - 2 * std::sqrt(2.0 * static_cast<double>(k) * xe)};
            }};
  }
  if (c.op == "kpz-increments") {
    auto win = c.list("window", "1,1.5");
    require(win.size() == 2 && win[0] < win[1], "window must be lo,hi");
    const std::size_t nodes = c.count("nodes", 32);
    const double x0 = c.number("x0", 0.5 * (win[0] + win[1]));
    std::vector<double> ys;
    for (std::size_t j = 0; j <= nodes; ++j) ys.push_back(win[0] + (win[1] - win[0]) * j / nodes);
    std::vector<double> tail(ys.begin() + 1, ys.end());
    return {detail::numbered("inc_y", tail), [=](Stream& rng) {
              auto m = random_melon(n, grid, rng, rate);
              InitialData d{{{x0, 0.0}}, 0.0, {x0, x0}, std::nullopt};
              auto inc = increment_process(kpz_fixed_point(m, n, d, ys), ys.front());
              return std::vector<double>(inc.values().begin() + 1, inc.values().end());
            }};
  }
  throw ValidationError("unknown op '" + c.op + "'");
}

inline std::vector<ColumnSummary> summarize(const std::vector<std::string>& columns,
                                            const std::vector<std::vector<double>>& outputs) {
  std::vector<ColumnSummary> out;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    std::vector<double> v;
    bool indicator = true;
    for (const auto& row : outputs)
      if (!std::isnan(row[c])) {
        v.push_back(row[c]);
        indicator &= row[c] == 0.0 || row[c] == 1.0;
      }
    ColumnSummary s{columns[c], v.size(), NAN, NAN, NAN, NAN, NAN, {NAN, NAN}};
    if (!v.empty()) {
      s.min = *std::min_element(v.begin(), v.end());
      s.max = *std::max_element(v.begin(), v.end());
      double sum = 0;
      for (double e : v) sum += e;
      s.mean = sum / v.size();
      if (v.size() >= 2 && std::isfinite(s.mean)) {
        Moments mo = moments(v);
        s.sd = std::sqrt(mo.variance);
        s.se = mo.se_mean();
      }
      if (indicator) {
        std::size_t ones = static_cast<std::size_t>(std::count(v.begin(), v.end(), 1.0));
        s.ci95 = wilson_interval(ones, v.size());
      } else if (std::isfinite(s.se)) {
        s.ci95 = {s.mean - 1.959963984540054 * s.se, s.mean + 1.959963984540054 * s.se};
      }
    }
    out.push_back(s);
  }
  return out;
}

// Runs config.replicas independent replicas, each with its own keyed stream; results are
// stored by replica index so the record does not depend on the worker count.
inline RunRecord run_replicated(const ExperimentConfig& config, unsigned parallelism = 0) {
  require(config.replicas >= 1, "replicas must be at least 1");
  require(config.seed_set, "experiment needs a seed");
  ReplicaOp op = make_replica_op(config);
  RunRecord rec;
  rec.config = config;
  rec.config_hash = config.hash();
  rec.columns = op.columns;
  rec.outputs.assign(config.replicas, std::vector<double>(op.columns.size(), NAN));
  rec.errors.assign(config.replicas, "");
  parallel_for(config.replicas, parallelism, [&](std::size_t r) {
    Stream rng(config.seed, "replica/" + config.op, r);
    try {
      auto out = op.run(rng);
      if (out.size() != op.columns.size()) throw InvariantViolation("op returned the wrong column count");
      rec.outputs[r] = std::move(out);
    } catch (const std::exception& e) {
      rec.errors[r] = e.what();
    }
  });
  for (const auto& e : rec.errors) rec.failures += !e.empty();
  rec.aborted = 2 * rec.failures > config.replicas;
  rec.summary = summarize(rec.columns, rec.outputs);

  const std::size_t events = config.count("events", 0);
  if (config.op == "kpz-increments" && events > 0 && !rec.aborted) {
    auto win = config.list("window", "1,1.5");
    TimeGrid ig(0.0, win[1] - win[0], rec.columns.size());
    std::vector<SampledPath> samples, reference;
    for (const auto& row : rec.outputs) {
      if (std::isnan(row[0])) continue;
      std::vector<double> v{0.0};
      v.insert(v.end(), row.begin(), row.end());
      samples.emplace_back(ig, std::move(v), 2.0);
    }
    Stream ref(config.seed, "reference/" + config.op), cal(config.seed, "calibration/" + config.op);
    std::vector<SampledPath> calibration;
    for (std::size_t r = 0; r < samples.size(); ++r) reference.push_back(sample_brownian(ig, 2.0, ref));
    for (std::size_t r = 0; r < samples.size(); ++r) calibration.push_back(sample_brownian(ig, 2.0, cal));
    rec.probe = brownian_regularity_probe(samples, default_ball_family(calibration, events), reference);
  }
  return rec;
}

}  // namespace kpzlab
