#pragma once

// Flat `key = value` configuration with [section] headers.
//
//   [grid]          n
//   [problem]       tag (k1 | k2 | variable | custom), q_path, g_path,
//                   a11_path, a12_path, a22_path, forward_tol
//   [admissibility] q_star, q0, k
//   [recon]         w_floor, damping, picard_tol, max_picard, trust_threshold,
//                   q_cap, sign_threshold, solver_tol
//   [stability]     eps, data_eps, theta, family, noise_model, seed, project
//   [probes]        select, lattice, lattice_lo, lattice_hi, radii, delta,
//                   kappa, lambda_c, lambda0, taus, tau0, bumps, bump_power,
//                   carleman_scales, r_star, delta_lattice
//   [output]        dir
//
// Lists are comma separated. `bumps` is a comma separated list of
// `x y radius` triples. `#` starts a comment.

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qscope/forward.hpp"
#include "qscope/probes.hpp"
#include "qscope/reconstruction.hpp"
#include "qscope/stability.hpp"

namespace qscope {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& what)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct Config {
  int n = 129;

  std::string tag = "k1";
  std::string q_path, g_path, a11_path, a12_path, a22_path;
  double forward_tol = 1e-11;

  std::optional<double> q_star;  // unset: the problem's q level
  double q0 = 1.0;
  double k = 0.5;

  double w_floor = 1e-6;
  double damping = 0.7;
  double picard_tol = 1e-8;
  int max_picard = 200;
  double trust_threshold = 0.1;
  double q_cap = std::numeric_limits<double>::infinity();
  double sign_threshold = 0.02;
  double solver_tol = 1e-10;

  std::vector<double> eps{1e-1, 1e-2, 1e-3, 1e-4};
  double data_eps = 0.0;
  double theta = 0.2;
  std::string family = "noise";
  std::string noise_model = "deterministic";
  std::uint64_t seed = 0;
  bool project = true;

  std::vector<std::string> probes{"caccioppoli", "doubling", "reverse_holder", "three_spheres", "ucp", "carleman"};
  int lattice = 5;
  double lattice_lo = 0.2;
  double lattice_hi = 0.8;
  std::vector<double> radii{0.025, 0.05};
  double delta = 1.0;
  double kappa = 3.0;
  double lambda_c = 2.0;
  double lambda0 = 1.0;
  std::vector<double> taus{4.0, 8.0, 16.0, 32.0};
  double tau0 = 4.0;
  std::vector<double> bumps{0.5, 0.5, 0.25, 0.3, 0.5, 0.2};  // flattened triples
  int bump_power = 4;
  std::vector<double> carleman_scales{1.0};
  double r_star = 0.3;
  int delta_lattice = 11;

  std::string out_dir = "out";

  bool operator==(const Config&) const = default;
};

// Throws ConfigError with the offending line number.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);

// Canonical text form; parse_config(to_text(c)) == c.
std::string to_text(const Config& c);

// Module option blocks derived from a validated config.
ReconOptions recon_options(const Config& c);
SweepOptions sweep_options(const Config& c, double q_level, unsigned threads);
ProbeSettings probe_settings(const Config& c, unsigned threads);

// Builds the problem named by the config (manufactured tag or field dumps).
// `q_level` receives the reference level used for q*.
Problem build_problem(const Config& c, double* q_level = nullptr);

}  // namespace qscope
