#pragma once

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kpzlab/harness.hpp"
#include "kpzlab/meagre.hpp"
#include "kpzlab/melon.hpp"

namespace kpzlab {

static_assert(std::endian::native == std::endian::little, "binary ensemble format assumes a little-endian host");

inline constexpr std::uint16_t kFormatVersion = 1;

enum class EnsembleKind : std::uint16_t { environment = 0, melon = 1, airy = 2 };

struct FileStamp {
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::uint64_t source_hash = 0;
  EnsembleKind kind = EnsembleKind::environment;
  std::string version = kVersion;
};

struct LoadedEnsemble {
  PathEnsemble env;
  FileStamp stamp;
};

// Writes via a sibling temp file and rename, so readers never see a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ValidationError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : b_(bytes) {}
  template <class T>
  T get(const char* field) {
    if (pos_ + sizeof(T) > b_.size()) throw FormatError(std::string("truncated header field '") + field + "'", pos_);
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes(std::size_t n, const char* field) {
    if (pos_ + n > b_.size()) throw FormatError(std::string("truncated field '") + field + "'", pos_);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  const std::string& b_;
  std::size_t pos_ = 0;
};

inline std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

// Layout (little-endian): "KPZL", u16 version, u16 kind, f64 a, f64 b, u64 steps, f64 rate,
// u64 line_count, u64 seed, u64 config_hash, u64 source_hash, u16 len + tool version bytes,
// then line_count columns of steps+1 f64.
inline std::string encode_binary(const PathEnsemble& env, const FileStamp& st) {
  std::string out = "KPZL";
  detail::put<std::uint16_t>(out, kFormatVersion);
  detail::put<std::uint16_t>(out, static_cast<std::uint16_t>(st.kind));
  const auto& g = env.grid();
  detail::put<double>(out, g.a());
  detail::put<double>(out, g.b());
  detail::put<std::uint64_t>(out, g.steps());
  detail::put<double>(out, env.rate());
  detail::put<std::uint64_t>(out, env.line_count());
  detail::put<std::uint64_t>(out, st.seed);
  detail::put<std::uint64_t>(out, st.config_hash);
  detail::put<std::uint64_t>(out, st.source_hash);
  detail::put<std::uint16_t>(out, static_cast<std::uint16_t>(st.version.size()));
  out += st.version;
  for (const auto& l : env.lines())
    out.append(reinterpret_cast<const char*>(l.values().data()), l.values().size() * sizeof(double));
  return out;
}

inline LoadedEnsemble decode_binary(const std::string& bytes) {
  detail::Reader r(bytes);
  if (r.bytes(std::min<std::size_t>(4, bytes.size()), "magic") != "KPZL")
    throw FormatError("bad magic (expected KPZL)", 0);
  std::size_t vpos = r.pos();
  auto version = r.get<std::uint16_t>("version");
  if (version != kFormatVersion)
    throw FormatError("unsupported ensemble format version " + std::to_string(version) + " (this build reads v" +
                          std::to_string(kFormatVersion) +
                          "); regenerate the file with this kpz-lab build or convert it via CSV export",
                      vpos);
  LoadedEnsemble le;
  std::size_t kpos = r.pos();
  auto kind = r.get<std::uint16_t>("kind");
  if (kind > 2) throw FormatError("unknown ensemble kind " + std::to_string(kind), kpos);
  le.stamp.kind = static_cast<EnsembleKind>(kind);
  std::size_t gpos = r.pos();
  double a = r.get<double>("a"), b = r.get<double>("b");
  auto steps = r.get<std::uint64_t>("steps");
  double rate = r.get<double>("rate");
  auto lines = r.get<std::uint64_t>("line_count");
  if (!(a < b) || steps == 0 || steps > (1ULL << 32) || !(rate > 0) || lines == 0 || lines > (1ULL << 20))
    throw FormatError("corrupt grid header", gpos);
  le.stamp.seed = r.get<std::uint64_t>("seed");
  le.stamp.config_hash = r.get<std::uint64_t>("config_hash");
  le.stamp.source_hash = r.get<std::uint64_t>("source_hash");
  auto vlen = r.get<std::uint16_t>("tool version length");
  le.stamp.version = r.bytes(vlen, "tool version");
  const std::size_t need = lines * (steps + 1) * sizeof(double);
  if (r.remaining() != need)
    throw FormatError("data section holds " + std::to_string(r.remaining()) + " bytes, header implies " +
                          std::to_string(need),
                      r.pos());
  TimeGrid grid(a, b, steps);
  std::vector<SampledPath> out;
  for (std::uint64_t i = 0; i < lines; ++i) {
    std::vector<double> v(steps + 1);
    std::memcpy(v.data(), bytes.data() + r.pos() + i * (steps + 1) * sizeof(double), (steps + 1) * sizeof(double));
    out.emplace_back(grid, std::move(v), rate);
  }
  le.env = PathEnsemble(std::move(out));
  return le;
}

inline const char* kind_name(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::melon: return "melon";
    case EnsembleKind::airy: return "airy";
    default: return "environment";
  }
}

inline std::string stamp_comment(const FileStamp& st) {
  std::ostringstream s;
  s << "# kpz-lab " << st.version << " seed=" << st.seed << " config_hash=" << st.config_hash
    << " source_hash=" << st.source_hash << " kind=" << kind_name(st.kind);
  return s.str();
}

// "# kpz-lab <version> seed=.. config_hash=.. source_hash=.. kind=.. rate=..", a header
// row "t,line1,...", then one row per node at 17 significant digits.
inline std::string encode_csv(const PathEnsemble& env, const FileStamp& st) {
  std::string out = stamp_comment(st) + " rate=" + detail::format17(env.rate()) + "\nt";
  for (std::size_t i = 1; i <= env.line_count(); ++i) out += ",line" + std::to_string(i);
  out += "\n";
  const auto& g = env.grid();
  for (std::size_t j = 0; j < g.size(); ++j) {
    out += detail::format17(g.node(j));
    for (const auto& l : env.lines()) out += "," + detail::format17(l[j]);
    out += "\n";
  }
  return out;
}

inline LoadedEnsemble decode_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  LoadedEnsemble le;
  double rate = 2.0;
  std::vector<double> t;
  std::vector<std::vector<double>> cols;
  std::size_t offset = 0, ncols = 0;
  while (std::getline(in, line)) {
    std::size_t here = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ws(line.substr(1));
      std::string tok;
      while (ws >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
        if (k == "seed") le.stamp.seed = parse_u64(v, k);
        else if (k == "config_hash") le.stamp.config_hash = parse_u64(v, k);
        else if (k == "source_hash") le.stamp.source_hash = parse_u64(v, k);
        else if (k == "rate") rate = parse_double(v, k);
        else if (k == "kind") le.stamp.kind = v == "melon" ? EnsembleKind::melon : v == "airy" ? EnsembleKind::airy : EnsembleKind::environment;
      }
      continue;
    }
    auto fields = split(line, ',');
    if (fields[0] == "t") {
      ncols = fields.size() - 1;
      cols.assign(ncols, {});
      continue;
    }
    if (ncols == 0 || fields.size() != ncols + 1) throw FormatError("malformed CSV row", here);
    try {
      t.push_back(parse_double(fields[0], "t"));
      for (std::size_t c = 0; c < ncols; ++c) cols[c].push_back(parse_double(fields[c + 1], "value"));
    } catch (const ValidationError& e) {
      throw FormatError(e.what(), here);
    }
  }
  if (t.size() < 2 || ncols == 0) throw FormatError("CSV holds no ensemble rows", offset);
  TimeGrid g(t.front(), t.back(), t.size() - 1);
  std::vector<SampledPath> lines;
  for (auto& c : cols) lines.emplace_back(g, std::move(c), rate);
  le.env = PathEnsemble(std::move(lines));
  return le;
}

enum class Format { binary, csv };

inline Format format_for(const std::filesystem::path& p) { return p.extension() == ".csv" ? Format::csv : Format::binary; }

inline void serialize_ensemble(const PathEnsemble& env, const std::filesystem::path& path, Format f,
                               const FileStamp& st = {}) {
  write_atomic(path, f == Format::binary ? encode_binary(env, st) : encode_csv(env, st));
}

inline LoadedEnsemble deserialize_ensemble(const std::filesystem::path& path) {
  std::string bytes = read_file(path);
  if (bytes.rfind("KPZL", 0) == 0) return decode_binary(bytes);
  if (!bytes.empty() && (bytes[0] == '#' || bytes[0] == 't')) return decode_csv(bytes);
  throw FormatError("unrecognised ensemble file (neither KPZL binary nor CSV)", 0);
}

inline MelonEnsemble load_melon(const std::filesystem::path& path) {
  auto le = deserialize_ensemble(path);
  if (le.stamp.kind != EnsembleKind::melon) throw ValidationError(path.string() + " does not hold a melon ensemble");
  return {std::move(le.env), le.stamp.source_hash};
}

// ---------------------------------------------------------------- JSON

inline nlohmann::json stamp_json(const FileStamp& st) {
  return {{"version", st.version}, {"seed", st.seed}, {"config_hash", st.config_hash}};
}

inline nlohmann::json to_json(const Interval& i) { return nlohmann::json::array({i.lo, i.hi}); }

inline nlohmann::json to_json(const LppResult& r) {
  return {{"value", r.value}, {"jumps", r.geodesic.jumps}, {"tie_break", to_string(r.tie_break)},
          {"from", {r.geodesic.start.time, r.geodesic.start.line}}, {"to", {r.geodesic.end.time, r.geodesic.end.line}}};
}

inline nlohmann::json to_json(const MeagreReport& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"log_inv_eps", r.log_inv_eps}, {"log_N", r.log_count}, {"log_ratio", r.log_ratio}});
  return {{"M", rep.M}, {"r", rep.r}, {"depth", rep.depth}, {"verdict", to_string(rep.verdict)}, {"rows", rows}};
}

inline nlohmann::json to_json(const ProbeRow& r) {
  return {{"event", r.event}, {"p_hat", r.p_hat}, {"p_ci95", to_json(r.p_ci)}, {"mu_hat", r.mu_hat},
          {"mu_ci95", to_json(r.mu_ci)}, {"ratio", std::isfinite(r.ratio) ? nlohmann::json(r.ratio) : nlohmann::json("inf")},
          {"evaluable", r.evaluable}, {"flagged", r.flagged}};
}

inline nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline nlohmann::json to_json(const RunRecord& rec) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& s : rec.summary)
    cols.push_back({{"name", s.name}, {"count", s.count}, {"mean", number_or_null(s.mean)}, {"sd", number_or_null(s.sd)},
                    {"se", number_or_null(s.se)}, {"min", number_or_null(s.min)}, {"max", number_or_null(s.max)},
                    {"ci95", {number_or_null(s.ci95.lo), number_or_null(s.ci95.hi)}}});
  nlohmann::json probe = nlohmann::json::array();
  for (const auto& r : rec.probe) probe.push_back(to_json(r));
  nlohmann::json params(rec.config.params);
  return {{"version", rec.version},     {"experiment", rec.config.experiment}, {"op", rec.config.op},
          {"seed", rec.config.seed},    {"config_hash", rec.config_hash},       {"replicas", rec.config.replicas},
          {"params", params},           {"failures", rec.failures},             {"aborted", rec.aborted},
          {"summary", cols},            {"probe", probe}};
}

inline std::string replicas_csv(const RunRecord& rec) {
  std::string out = stamp_comment({rec.config.seed, rec.config_hash, 0, EnsembleKind::environment, rec.version}) +
                    "\nreplica";
  for (const auto& c : rec.columns) out += "," + c;
  out += ",error\n";
  for (std::size_t r = 0; r < rec.outputs.size(); ++r) {
    out += std::to_string(r);
    for (double v : rec.outputs[r]) out += "," + detail::format17(v);
    std::string err = rec.errors[r];
    std::replace(err.begin(), err.end(), ',', ';');
    out += "," + err + "\n";
  }
  return out;
}

// runs/<experiment>/{summary.json, replicas.csv}, each written atomically.
inline std::filesystem::path persist_run(const RunRecord& rec, const std::filesystem::path& root, bool force) {
  auto dir = root / rec.config.experiment;
  std::filesystem::create_directories(dir);
  auto summary = dir / "summary.json", reps = dir / "replicas.csv";
  if (!force && (std::filesystem::exists(summary) || std::filesystem::exists(reps)))
    throw ValidationError("output " + dir.string() + " exists; pass --force to overwrite");
  write_atomic(reps, replicas_csv(rec));
  write_atomic(summary, to_json(rec).dump(2) + "\n");
  return dir;
}

// ---------------------------------------------------------------- input documents

inline InitialData parse_initial_data(const nlohmann::json& j) {
  InitialData d;
  if (!j.contains("support") || !j["support"].is_array()) throw ValidationError("data.json needs a 'support' array");
  for (const auto& p : j["support"]) d.support.emplace_back(p.at("x").get<double>(), p.at("h").get<double>());
  d.Mtilde = j.value("Mtilde", 0.0);
  if (j.contains("K")) d.K = {j["K"].at(0).get<double>(), j["K"].at(1).get<double>()};
  if (j.contains("meagre")) d.meagre_params = std::make_pair(j["meagre"].at("M").get<double>(), j["meagre"].at("r").get<double>());
  d.validate();
  return d;
}

// {"kind":"finite","points":[...]}, {"kind":"thin-cantor","sigma":s,"depth":d},
// {"kind":"middle-third","depth":d}, or {"kind":"cantor","log_inv_eps":[...]}.
inline CompactSetSpec parse_set_spec(const nlohmann::json& j) {
  std::string kind = j.value("kind", "");
  if (kind == "finite") return finite_set(j.at("points").get<std::vector<double>>());
  if (kind == "thin-cantor") return generate_thin_cantor(j.at("sigma").get<double>(), j.value("depth", 64));
  if (kind == "middle-third") return middle_third_cantor(j.value("depth", 64));
  if (kind == "cantor") {
    CompactSetSpec s;
    s.kind = CompactSetSpec::Kind::cantor;
    s.log_inv_eps = j.at("log_inv_eps").get<std::vector<double>>();
    s.validate();
    return s;
  }
  throw ValidationError("set spec kind must be finite, thin-cantor, middle-third or cantor");
}

}  // namespace kpzlab
