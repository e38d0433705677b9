#include "qscope/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "qscope/field_io.hpp"

namespace qscope {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

double to_double(const std::string& v, int line) {
  double x = 0.0;
  const char* first = v.data();
  const char* last = v.data() + v.size();
  if (!v.empty() && *first == '+') ++first;
  auto [p, ec] = std::from_chars(first, last, x);
  if (ec != std::errc() || p != last || std::isnan(x)) throw ConfigError(line, "expected a number, got '" + v + "'");
  return x;
}

long long to_int(const std::string& v, int line) {
  long long x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(line, "expected an integer, got '" + v + "'");
  return x;
}

std::uint64_t to_u64(const std::string& v, int line) {
  std::uint64_t x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError(line, "expected an unsigned 64-bit integer, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& v, int line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(line, "expected true or false, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& v, int line) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  for (const auto& t : split(v, ',')) out.push_back(to_double(t, line));
  return out;
}

std::string fmt(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s;
}

void need(bool ok, int line, const std::string& what) {
  if (!ok) throw ConfigError(line, what);
}

struct Key {
  std::function<void(Config&, const std::string&, int)> set;
  std::function<std::optional<std::string>(const Config&)> get;
};

using Table = std::vector<std::pair<std::string, std::vector<std::pair<std::string, Key>>>>;

Key real(double Config::*m, std::function<bool(double)> ok, std::string rule) {
  return {[=](Config& c, const std::string& v, int line) {
            const double x = to_double(v, line);
            need(ok(x), line, rule);
            c.*m = x;
          },
          [=](const Config& c) -> std::optional<std::string> { return fmt(c.*m); }};
}

Key integer(int Config::*m, long long lo, long long hi, std::string rule) {
  return {[=](Config& c, const std::string& v, int line) {
            const long long x = to_int(v, line);
            need(x >= lo && x <= hi, line, rule);
            c.*m = static_cast<int>(x);
          },
          [=](const Config& c) -> std::optional<std::string> { return std::to_string(c.*m); }};
}

Key text(std::string Config::*m, std::vector<std::string> allowed, std::string rule) {
  return {[=](Config& c, const std::string& v, int line) {
            need(allowed.empty() || std::find(allowed.begin(), allowed.end(), v) != allowed.end(), line, rule);
            c.*m = v;
          },
          [=](const Config& c) -> std::optional<std::string> { return c.*m; }};
}

Key reals(std::vector<double> Config::*m, std::function<bool(const std::vector<double>&)> ok, std::string rule) {
  return {[=](Config& c, const std::string& v, int line) {
            auto x = to_doubles(v, line);
            need(ok(x), line, rule);
            c.*m = std::move(x);
          },
          [=](const Config& c) -> std::optional<std::string> { return join(c.*m); }};
}

auto positive = [](double x) { return x > 0.0 && std::isfinite(x); };

const Table& table() {
  static const Table t = {
      {"grid", {{"n", integer(&Config::n, 3, 4097, "grid.n must lie in [3, 4097]")}}},
      {"problem",
       {{"tag", text(&Config::tag, {"k1", "k2", "variable", "custom"},
                     "problem.tag must be one of k1, k2, variable, custom")},
        {"q_path", text(&Config::q_path, {}, "")},
        {"g_path", text(&Config::g_path, {}, "")},
        {"a11_path", text(&Config::a11_path, {}, "")},
        {"a12_path", text(&Config::a12_path, {}, "")},
        {"a22_path", text(&Config::a22_path, {}, "")},
        {"forward_tol", real(&Config::forward_tol, [](double x) { return x > 0.0 && x < 1.0; },
                             "problem.forward_tol must lie in (0, 1)")}}},
      {"admissibility",
       {{"q_star", Key{[](Config& c, const std::string& v, int line) {
                         const double x = to_double(v, line);
                         need(std::isfinite(x), line, "admissibility.q_star must be finite");
                         c.q_star = x;
                       },
                       [](const Config& c) -> std::optional<std::string> {
                         if (!c.q_star) return std::nullopt;
                         return fmt(*c.q_star);
                       }}},
        {"q0", real(&Config::q0, positive, "admissibility.q0 must be > 0")},
        {"k", real(&Config::k, [](double x) { return x > 0.0 && x < 1.0; }, "admissibility.k must lie in (0, 1)")}}},
      {"recon",
       {{"w_floor", real(&Config::w_floor, positive, "recon.w_floor must be > 0")},
        {"damping", real(&Config::damping, [](double x) { return x > 0.0 && x <= 1.0; },
                         "recon.damping must lie in (0, 1]")},
        {"picard_tol", real(&Config::picard_tol, positive, "recon.picard_tol must be > 0")},
        {"max_picard", integer(&Config::max_picard, 1, 100000, "recon.max_picard must lie in [1, 100000]")},
        {"trust_threshold", real(&Config::trust_threshold, [](double x) { return x >= 0.0 && std::isfinite(x); },
                                 "recon.trust_threshold must be >= 0")},
        {"q_cap", real(&Config::q_cap, [](double x) { return x > 0.0; }, "recon.q_cap must be > 0")},
        {"sign_threshold", real(&Config::sign_threshold, [](double x) { return x > 0.0 && x < 1.0; },
                                "recon.sign_threshold must lie in (0, 1)")},
        {"solver_tol", real(&Config::solver_tol, [](double x) { return x > 0.0 && x < 1.0; },
                            "recon.solver_tol must lie in (0, 1)")}}},
      {"stability",
       {{"eps", reals(&Config::eps,
                      [](const std::vector<double>& v) {
                        return !v.empty() && std::all_of(v.begin(), v.end(),
                                                         [](double x) { return x >= 0.0 && std::isfinite(x); });
                      },
                      "stability.eps must be a nonempty list of values >= 0")},
        {"data_eps", real(&Config::data_eps, [](double x) { return x >= 0.0 && std::isfinite(x); },
                          "stability.data_eps must be >= 0")},
        {"theta", real(&Config::theta, [](double x) { return x > 0.0 && x < 0.25; },
                       "stability.theta must lie in (0, 1/4)")},
        {"family", text(&Config::family, {"noise", "bump"}, "stability.family must be noise or bump")},
        {"noise_model", text(&Config::noise_model, {"deterministic", "random"},
                             "stability.noise_model must be deterministic or random")},
        {"seed", Key{[](Config& c, const std::string& v, int line) { c.seed = to_u64(v, line); },
                     [](const Config& c) -> std::optional<std::string> { return std::to_string(c.seed); }}},
        {"project", Key{[](Config& c, const std::string& v, int line) { c.project = to_bool(v, line); },
                        [](const Config& c) -> std::optional<std::string> {
                          return std::string(c.project ? "true" : "false");
                        }}}}},
      {"probes",
       {{"select", Key{[](Config& c, const std::string& v, int line) {
                         std::vector<std::string> out;
                         if (!trim(v).empty())
                           for (const auto& t : split(v, ',')) {
                             need(std::find(kProbeNames.begin(), kProbeNames.end(), t) != kProbeNames.end(), line,
                                  "unknown probe '" + t + "'");
                             if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
                           }
                         c.probes = std::move(out);
                       },
                       [](const Config& c) -> std::optional<std::string> {
                         std::string s;
                         for (std::size_t i = 0; i < c.probes.size(); ++i) s += (i ? ", " : "") + c.probes[i];
                         return s;
                       }}},
        {"lattice", integer(&Config::lattice, 1, 1000, "probes.lattice must lie in [1, 1000]")},
        {"lattice_lo", real(&Config::lattice_lo, [](double x) { return x >= 0.0 && x <= 1.0; },
                            "probes.lattice_lo must lie in [0, 1]")},
        {"lattice_hi", real(&Config::lattice_hi, [](double x) { return x >= 0.0 && x <= 1.0; },
                            "probes.lattice_hi must lie in [0, 1]")},
        {"radii", reals(&Config::radii,
                        [](const std::vector<double>& v) {
                          return !v.empty() && std::all_of(v.begin(), v.end(), positive);
                        },
                        "probes.radii must be a nonempty list of positive values")},
        {"delta", real(&Config::delta, positive, "probes.delta must be > 0")},
        {"kappa", real(&Config::kappa, [](double x) { return x > 1.0 && std::isfinite(x); },
                       "probes.kappa must be > 1")},
        {"lambda_c", real(&Config::lambda_c, positive, "probes.lambda_c must be > 0")},
        {"lambda0", real(&Config::lambda0, positive, "probes.lambda0 must be > 0")},
        {"taus", reals(&Config::taus,
                       [](const std::vector<double>& v) {
                         return !v.empty() && std::all_of(v.begin(), v.end(), positive) &&
                                std::is_sorted(v.begin(), v.end());
                       },
                       "probes.taus must be a nonempty ascending list of positive values")},
        {"tau0", real(&Config::tau0, positive, "probes.tau0 must be > 0")},
        {"bumps", Key{[](Config& c, const std::string& v, int line) {
                        std::vector<double> flat;
                        for (const auto& t : split(v, ',')) {
                          std::istringstream in(t);
                          double x, y, r;
                          std::string extra;
                          need(static_cast<bool>(in >> x >> y >> r) && !(in >> extra), line,
                               "probes.bumps entries must be 'x y radius'");
                          need(r > 0.0 && x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0, line,
                               "probes.bumps needs centres in the unit square and positive radii");
                          flat.insert(flat.end(), {x, y, r});
                        }
                        need(!flat.empty(), line, "probes.bumps must not be empty");
                        c.bumps = std::move(flat);
                      },
                      [](const Config& c) -> std::optional<std::string> {
                        std::string s;
                        for (std::size_t i = 0; i + 2 < c.bumps.size(); i += 3)
                          s += (i ? ", " : "") + fmt(c.bumps[i]) + " " + fmt(c.bumps[i + 1]) + " " +
                               fmt(c.bumps[i + 2]);
                        return s;
                      }}},
        {"bump_power", integer(&Config::bump_power, 2, 64, "probes.bump_power must lie in [2, 64]")},
        {"carleman_scales", reals(&Config::carleman_scales,
                                  [](const std::vector<double>& v) {
                                    return !v.empty() && std::all_of(v.begin(), v.end(), [](double x) {
                                      return x > 0.0 && x <= 1.0;
                                    });
                                  },
                                  "probes.carleman_scales must be a nonempty list in (0, 1]")},
        {"r_star", real(&Config::r_star, positive, "probes.r_star must be > 0")},
        {"delta_lattice", integer(&Config::delta_lattice, 2, 1000, "probes.delta_lattice must lie in [2, 1000]")}}},
      {"output", {{"dir", text(&Config::out_dir, {}, "")}}},
  };
  return t;
}

}  // namespace

Config parse_config(const std::string& text) {
  Config c;
  std::map<std::string, int> seen;
  std::string section;
  const Table& t = table();
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      need(s.back() == ']', line, "malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      const bool known = std::any_of(t.begin(), t.end(), [&](const auto& e) { return e.first == section; });
      need(known, line, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = s.find('=');
    need(eq != std::string::npos, line, "expected 'key = value'");
    need(!section.empty(), line, "key outside of a section");
    const std::string key = trim(s.substr(0, eq)), value = trim(s.substr(eq + 1));
    const auto sec = std::find_if(t.begin(), t.end(), [&](const auto& e) { return e.first == section; });
    const auto k = std::find_if(sec->second.begin(), sec->second.end(), [&](const auto& e) { return e.first == key; });
    need(k != sec->second.end(), line, "unknown key '" + section + "." + key + "'");
    need(seen.emplace(section + "." + key, line).second, line, "duplicate key '" + section + "." + key + "'");
    k->second.set(c, value, line);
  }

  auto at = [&](const std::string& key) {
    auto it = seen.find(key);
    return it == seen.end() ? 0 : it->second;
  };
  need(c.lattice_lo <= c.lattice_hi, std::max(at("probes.lattice_lo"), at("probes.lattice_hi")),
       "probes.lattice_lo must not exceed probes.lattice_hi");
  if (c.tag == "custom") {
    need(!c.q_path.empty() && !c.g_path.empty(), at("problem.tag"), "problem.tag = custom needs q_path and g_path");
  } else {
    for (const char* key : {"problem.q_path", "problem.g_path", "problem.a11_path", "problem.a12_path",
                            "problem.a22_path"})
      need(at(key) == 0, at(key), std::string(key) + " is only valid with problem.tag = custom");
  }
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const Config& c) {
  std::string out;
  bool first = true;
  for (const auto& [section, keys] : table()) {
    out += (first ? "[" : "\n[") + section + "]\n";
    first = false;
    for (const auto& [key, k] : keys)
      if (auto v = k.get(c)) {
        if (v->empty() && (key.ends_with("_path"))) continue;
        out += key + " = " + *v + "\n";
      }
  }
  return out;
}

ReconOptions recon_options(const Config& c) {
  ReconOptions r;
  r.w_floor = c.w_floor;
  r.damping = c.damping;
  r.picard_tol = c.picard_tol;
  r.max_picard = c.max_picard;
  r.trust_threshold = c.trust_threshold;
  r.q_cap = c.q_cap;
  r.sign_threshold = c.sign_threshold;
  r.solver_tol = c.solver_tol;
  return r;
}

SweepOptions sweep_options(const Config& c, double q_level, unsigned threads) {
  SweepOptions s;
  s.family = *parse_family(c.family);
  s.theta = c.theta;
  s.noise_model = *parse_noise_model(c.noise_model);
  s.seed = c.seed;
  s.recon = recon_options(c);
  s.q_star = c.q_star.value_or(q_level);
  s.q0 = c.q0;
  s.k = c.k;
  s.project = c.project;
  s.forward_tol = c.forward_tol;
  s.threads = threads;
  return s;
}

ProbeSettings probe_settings(const Config& c, unsigned threads) {
  ProbeSettings s;
  s.selected = c.probes;
  s.lattice = c.lattice;
  s.lattice_lo = c.lattice_lo;
  s.lattice_hi = c.lattice_hi;
  s.radii = c.radii;
  s.delta = c.delta;
  s.kappa = c.kappa;
  s.lambda_c = c.lambda_c;
  s.lambda0 = c.lambda0;
  s.taus = c.taus;
  s.tau0 = c.tau0;
  s.bumps.clear();
  for (std::size_t i = 0; i + 2 < c.bumps.size(); i += 3) s.bumps.push_back({{c.bumps[i], c.bumps[i + 1]}, c.bumps[i + 2]});
  s.bump_power = c.bump_power;
  s.carleman_scales = c.carleman_scales;
  s.r_star = c.r_star;
  s.delta_lattice = c.delta_lattice;
  s.threads = threads;
  return s;
}

Problem build_problem(const Config& c, double* q_level) {
  if (c.tag != "custom") {
    auto m = manufactured(*parse_case(c.tag), c.n);
    if (q_level) *q_level = m.q_level;
    return std::move(m.problem);
  }
  ScalarField q = read_field(c.q_path), g = read_field(c.g_path);
  const Grid grid = q.grid();
  if (grid.nx != c.n || grid.ny != c.n) throw ConfigError(0, "problem.q_path grid does not match grid.n");
  TensorField a = TensorField::identity(grid);
  if (!c.a11_path.empty()) {
    const auto f = read_field(c.a11_path);
    a.a11.assign(f.values().begin(), f.values().end());
  }
  if (!c.a12_path.empty()) {
    const auto f = read_field(c.a12_path);
    a.a12.assign(f.values().begin(), f.values().end());
  }
  if (!c.a22_path.empty()) {
    const auto f = read_field(c.a22_path);
    a.a22.assign(f.values().begin(), f.values().end());
  }
  if (a.a11.size() != grid.size() || a.a12.size() != grid.size() || a.a22.size() != grid.size())
    throw ConfigError(0, "coefficient fields do not match the grid");
  if (q_level) *q_level = 2.0 * c.q0;
  return {grid, std::move(a), std::move(q), std::move(g)};
}

}  // namespace qscope
