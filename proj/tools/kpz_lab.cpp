#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include "kpzlab/io.hpp"
#include "kpzlab/verify.hpp"

using namespace kpzlab;
namespace fs = std::filesystem;

namespace {

struct Globals {
  unsigned threads = 0;
  bool force = false;
};

// Hash of the subcommand name and every option that affects results.
std::uint64_t args_hash(const CLI::App& sub) {
  std::map<std::string, std::string> canon;
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_name();
    if (opt->count() == 0 || name == "--out" || name == "--help") continue;
    std::string joined;
    for (const auto& r : opt->results()) joined += (joined.empty() ? "" : ";") + r;
    canon[name] = joined;
  }
  std::string text = sub.get_name() + "\n";
  for (const auto& [k, v] : canon) text += k + "=" + v + "\n";
  return fnv1a(text);
}

void check_output(const std::string& out, const Globals& g) {
  if (!out.empty() && fs::exists(out) && !g.force)
    throw ValidationError("output " + out + " exists; pass --force to overwrite");
}

// Writes text to --out, or to stdout when no path is given.
void emit_text(const std::string& out, const std::string& text) {
  if (out.empty())
    std::cout << text;
  else
    write_atomic(out, text);
}

void emit_ensemble(const PathEnsemble& env, const std::string& out, const FileStamp& st) {
  if (out.empty())
    std::cout << encode_csv(env, st);
  else
    serialize_ensemble(env, out, format_for(out), st);
}

std::pair<double, int> parse_point(const std::string& text, const char* what) {
  auto parts = split(text, ',');
  if (parts.size() != 2) throw ValidationError(std::string(what) + ": expected t,line");
  double t = parse_double(parts[0], what);
  double l = parse_double(parts[1], what);
  if (l < 1 || l != std::floor(l)) throw ValidationError(std::string(what) + ": line must be a positive integer");
  return {t, static_cast<int>(l)};
}

TimeGrid even_grid(const std::vector<double>& ys, const char* what) {
  require(ys.size() >= 2, std::string(what) + " needs at least two values");
  const double step = (ys.back() - ys.front()) / static_cast<double>(ys.size() - 1);
  for (std::size_t j = 0; j < ys.size(); ++j)
    require(std::abs(ys[j] - (ys.front() + step * j)) <= 1e-9 * std::max(1.0, std::abs(step)),
            std::string(what) + " must be evenly spaced");
  return TimeGrid(ys.front(), ys.back(), ys.size() - 1);
}

std::string csv_header(const FileStamp& st, const std::string& columns) {
  return stamp_comment(st) + "\n" + columns + "\n";
}

std::string num(double v) { return detail::format17(v); }

MelonEnsemble load_checked_melon(const std::string& path, std::size_t n) {
  auto m = load_melon(path);
  if (n != 0 && n != m.n())
    throw ValidationError("--n " + std::to_string(n) + " does not match the melon's " + std::to_string(m.n()) +
                          " lines");
  return m;
}

std::uint64_t melon_seed(const std::string& path) { return deserialize_ensemble(path).stamp.seed; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Last passage, Brownian melon and KPZ fixed point laboratory"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--threads", g.threads, "Worker threads (0: KPZ_LAB_THREADS or hardware)");
  app.add_flag("--force", g.force, "Overwrite existing outputs");
  app.set_version_flag("--version", std::string(kVersion));

  // sample
  auto* sample = app.add_subcommand("sample", "Independent Brownian lines on a grid");
  std::size_t s_lines = 0;
  std::string s_grid, s_out;
  double s_rate = 1.0;
  std::uint64_t s_seed = 0;
  sample->add_option("--lines", s_lines, "Number of lines")->required();
  sample->add_option("--grid", s_grid, "a,b,steps")->required();
  sample->add_option("--rate", s_rate, "Quadratic variation rate");
  sample->add_option("--seed", s_seed, "Master seed")->required();
  sample->add_option("--out", s_out, "Output file (.csv for CSV, else binary)");

  // melon
  auto* mel = app.add_subcommand("melon", "Brownian melon of n independent lines");
  std::size_t m_n = 0;
  std::string m_grid, m_out;
  double m_rate = 1.0;
  std::uint64_t m_seed = 0;
  mel->add_option("--n", m_n, "Number of lines")->required();
  mel->add_option("--grid", m_grid, "a,b,steps")->required();
  mel->add_option("--rate", m_rate, "Quadratic variation rate of the input lines");
  mel->add_option("--seed", m_seed, "Master seed")->required();
  mel->add_option("--out", m_out, "Output file; CSV to stdout when omitted");

  // airy
  auto* airy = app.add_subcommand("airy", "Rescale a melon to the Airy window");
  std::string a_melon, a_ys, a_out;
  airy->add_option("--melon", a_melon, "Melon file")->required();
  airy->add_option("--ys", a_ys, "Evenly spaced Airy times, e.g. -1:1:0.05")->required();
  airy->add_option("--out", a_out, "Output file; CSV to stdout when omitted");

  // lpp
  auto* lpp = app.add_subcommand("lpp", "Last passage value and geodesic");
  std::string l_env, l_from, l_to, l_tie = "rightmost", l_out;
  lpp->add_option("--env", l_env, "Ensemble file")->required();
  lpp->add_option("--from", l_from, "Start t,line")->required();
  lpp->add_option("--to", l_to, "End t,line")->required();
  lpp->add_option("--tie", l_tie, "rightmost or leftmost")->check(CLI::IsMember({"rightmost", "leftmost"}));
  lpp->add_option("--out", l_out, "JSON output; stdout when omitted");

  // geodesy
  auto* geo = app.add_subcommand("geodesy", "Geodesic probes in the melon");
  std::string g_melon, g_x = "1", g_y = "0", g_probe, g_eps = "0.4,0.2,0.1,0.05", g_out;
  std::size_t g_n = 0;
  double g_y2 = 0.0;
  int g_ell = 2;
  geo->add_option("--melon", g_melon, "Melon file")->required();
  geo->add_option("--n", g_n, "Expected line count");
  geo->add_option("--x", g_x, "Speed(s)");
  geo->add_option("--y", g_y, "Airy end time(s)");
  geo->add_option("--probe", g_probe, "jump-times, intercept, coalesce or disjoint")
      ->required()
      ->check(CLI::IsMember({"jump-times", "intercept", "coalesce", "disjoint"}));
  geo->add_option("--eps", g_eps, "Separations for the disjointness probe");
  geo->add_option("--y2", g_y2, "Second end time for the disjointness probe");
  geo->add_option("--ell", g_ell, "Comparison line for coalescence");
  geo->add_option("--out", g_out, "CSV output; stdout when omitted");

  // gibbs
  auto* gib = app.add_subcommand("gibbs", "Resample the top k lines on a strip");
  std::string gb_env, gb_strip, gb_out;
  std::size_t gb_k = 1, gb_resamples = 100;
  std::uint64_t gb_seed = 0;
  gib->add_option("--env", gb_env, "Ensemble file")->required();
  gib->add_option("--k", gb_k, "Number of lines to resample");
  gib->add_option("--strip", gb_strip, "a,b (grid nodes)")->required();
  gib->add_option("--resamples", gb_resamples, "Independent resamples");
  gib->add_option("--seed", gb_seed, "Master seed")->required();
  gib->add_option("--out", gb_out, "CSV output; stdout when omitted");

  // meagre
  auto* mea = app.add_subcommand("meagre", "Classify a compact set by covering numbers");
  std::string me_spec, me_out;
  double me_M = 2.0, me_r = 0.5;
  int me_depth = 40;
  mea->add_option("--spec", me_spec, "Set specification JSON")->required();
  mea->add_option("--M", me_M, "Base M > 1");
  mea->add_option("--r", me_r, "Exponent r > 0");
  mea->add_option("--depth", me_depth, "Scales examined");
  mea->add_option("--out", me_out, "JSON output; stdout when omitted");

  // kpz
  auto* kpz = app.add_subcommand("kpz", "KPZ fixed point and finite-depth truncation");
  std::string k_melon, k_data, k_ys, k_out;
  std::size_t k_n = 0, k_depth = 0;
  kpz->add_option("--melon", k_melon, "Melon file")->required();
  kpz->add_option("--n", k_n, "Expected line count");
  kpz->add_option("--data", k_data, "Initial data JSON")->required();
  kpz->add_option("--depth", k_depth, "Truncation depth (0: none)");
  kpz->add_option("--ys", k_ys, "Airy times")->required();
  kpz->add_option("--out", k_out, "CSV output; stdout when omitted");

  // run
  auto* run = app.add_subcommand("run", "Replicated experiment from a config file");
  std::string r_config, r_out = "runs";
  run->add_option("--config", r_config, "Config file")->required();
  run->add_option("--out", r_out, "Output root");

  // verify
  auto* ver = app.add_subcommand("verify", "Self-checks of the exact identities and Monte Carlo laws");
  bool v_quick = false;
  ver->add_flag("--quick", v_quick, "Exact identities only, reduced sizes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "kpz-lab: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*sample) {
      check_output(s_out, g);
      Stream rng(s_seed, "sample");
      auto env = sample_environment(parse_grid(s_grid), s_lines, s_rate, rng);
      emit_ensemble(env, s_out, {s_seed, args_hash(*sample), ensemble_hash(env), EnsembleKind::environment});
    } else if (*mel) {
      check_output(m_out, g);
      Stream rng(m_seed, "melon");
      auto m = random_melon(m_n, parse_grid(m_grid), rng, m_rate);
      emit_ensemble(m.inner, m_out, {m_seed, args_hash(*mel), m.source_hash, EnsembleKind::melon});
    } else if (*airy) {
      check_output(a_out, g);
      auto m = load_melon(a_melon);
      auto yg = even_grid(parse_number_list(a_ys, "--ys"), "--ys");
      auto env = rescale_to_airy(m, m.n(), yg);
      emit_ensemble(env, a_out, {melon_seed(a_melon), args_hash(*airy), ensemble_hash(m.inner), EnsembleKind::airy});
    } else if (*lpp) {
      check_output(l_out, g);
      auto le = deserialize_ensemble(l_env);
      auto [ft, fl] = parse_point(l_from, "--from");
      auto [tt, tl] = parse_point(l_to, "--to");
      auto res = last_passage(le.env, {ft, fl}, {tt, tl}, l_tie == "leftmost" ? TieBreak::leftmost : TieBreak::rightmost);
      auto j = to_json(res);
      j["stamp"] = stamp_json({le.stamp.seed, args_hash(*lpp)});
      emit_text(l_out, j.dump(2) + "\n");
    } else if (*geo) {
      check_output(g_out, g);
      auto m = load_checked_melon(g_melon, g_n);
      const std::size_t n = m.n();
      auto xs = parse_number_list(g_x, "--x"), ys = parse_number_list(g_y, "--y");
      FileStamp st{melon_seed(g_melon), args_hash(*geo), m.source_hash, EnsembleKind::melon};
      std::string text;
      if (g_probe == "jump-times") {
        text = csv_header(st, "x,y,k,Z_k,centred");
        for (double x : xs)
          for (double y : ys) {
            auto p = jump_times(m, n, x, y);
            for (std::size_t k = 1; k <= n; ++k)
              text += num(x) + "," + num(y) + "," + std::to_string(k) + "," + num(p.z(k)) + "," +
                      num(p.z(k) / std::sqrt(static_cast<double>(k)) + 1 / std::sqrt(2 * x)) + "\n";
          }
      } else if (g_probe == "intercept") {
        text = csv_header(st, "x,y,L0");
        for (double x : xs)
          for (double y : ys) text += num(x) + "," + num(y) + "," + std::to_string(intercept_line(m, n, x, y)) + "\n";
      } else if (g_probe == "disjoint") {
        text = csv_header(st, "x,eps,y1,y2,disjoint");
        for (double x : xs)
          for (double eps : parse_number_list(g_eps, "--eps"))
            text += num(x) + "," + num(eps) + "," + num(ys.front()) + "," + num(g_y2) + "," +
                    (disjointness_probe(m, n, x, eps, ys.front(), g_y2) ? "1" : "0") + "\n";
      } else {
        text = csv_header(st, "x,ell,depth,meet_time");
        for (double x : xs) {
          auto rec = coalescence_depth(m, n, x, g_ell);
          text += num(x) + "," + std::to_string(g_ell) + "," + (rec.depth ? std::to_string(*rec.depth) : "") + "," +
                  (rec.meet_time ? num(*rec.meet_time) : "") + "\n";
        }
      }
      emit_text(g_out, text);
    } else if (*gib) {
      check_output(gb_out, g);
      auto le = deserialize_ensemble(gb_env);
      auto strip = parse_number_list(gb_strip, "--strip");
      require(strip.size() == 2, "--strip: expected a,b");
      require(gb_k >= 1 && gb_k < le.env.line_count(), "--k must lie in 1..lines-1");
      const auto& grid = le.env.grid();
      const std::size_t mid = grid.nearest(0.5 * (strip[0] + strip[1]));
      std::vector<std::vector<double>> rows(gb_resamples);
      parallel_for(gb_resamples, g.threads, [&](std::size_t r) {
        Stream rng(gb_seed, "gibbs", r);
        auto out = gibbs_resample(le.env, gb_k, strip[0], strip[1], rng);
        for (std::size_t i = 1; i <= gb_k; ++i) rows[r].push_back(out.line(i)[mid]);
      });
      std::string cols = "resample";
      for (std::size_t i = 1; i <= gb_k; ++i) cols += ",line" + std::to_string(i) + "_at_" + num(grid.node(mid));
      std::string text = csv_header({gb_seed, args_hash(*gib), ensemble_hash(le.env), le.stamp.kind}, cols);
      for (std::size_t r = 0; r < gb_resamples; ++r) {
        text += std::to_string(r);
        for (double v : rows[r]) text += "," + num(v);
        text += "\n";
      }
      emit_text(gb_out, text);
    } else if (*mea) {
      check_output(me_out, g);
      auto spec = parse_set_spec(nlohmann::json::parse(read_file(me_spec)));
      auto j = to_json(classify_meagre(spec, me_M, me_r, me_depth));
      j["stamp"] = stamp_json({0, args_hash(*mea)});
      emit_text(me_out, j.dump(2) + "\n");
    } else if (*kpz) {
      check_output(k_out, g);
      auto m = load_checked_melon(k_melon, k_n);
      const std::size_t n = m.n();
      auto data = parse_initial_data(nlohmann::json::parse(read_file(k_data)));
      auto ys = parse_number_list(k_ys, "--ys");
      auto h = kpz_fixed_point(m, n, data, ys);
      std::optional<FixedPointSample> hm;
      if (k_depth > 0) {
        auto bd = boundary_data(m, n, data, k_depth, n);
        hm = finite_depth_truncation(AiryWindowProxy::from_melon(m, n), bd, k_depth, ys);
      }
      std::string text = csv_header({melon_seed(k_melon), args_hash(*kpz), m.source_hash, EnsembleKind::melon},
                                    "y,y_eff,h,H_m");
      for (std::size_t j = 0; j < ys.size(); ++j)
        text += num(ys[j]) + "," + num(h.y[j]) + "," + num(h.h[j]) + "," + (hm ? num(hm->h[j]) : "") + "\n";
      emit_text(k_out, text);
    } else if (*run) {
      auto cfg = load_config(r_config);
      auto rec = run_replicated(cfg, g.threads);
      auto dir = persist_run(rec, r_out, g.force);
      std::cout << dir.generic_string() << "\n";
      if (rec.aborted)
        throw GateFailure(std::to_string(rec.failures) + " of " + std::to_string(cfg.replicas) +
                          " replicas failed; run aborted");
    } else if (*ver) {
      bool all = true;
      for (const auto& c : v_quick ? quick_criteria() : acceptance_criteria()) {
        auto r = c.run();
        all = all && r.passed;
        std::cout << format_result(r) << std::endl;
      }
      if (!all) throw GateFailure("verification failed");
    }
  } catch (const ValidationError& e) {
    std::cerr << "kpz-lab: " << e.what() << "\n";
    return 2;
  } catch (const GateFailure& e) {
    std::cerr << "kpz-lab: gate failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "kpz-lab: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
