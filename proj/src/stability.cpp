#include "qscope/stability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "qscope/parallel.hpp"

namespace qscope {

WeightedSides weighted_sides(const ScalarField& q, const ScalarField& q_t, const InternalData& d,
                             const InternalData& d_t) {
  require_same_grid(q.grid(), q_t.grid(), "weighted_sides (q)");
  require_same_grid(q.grid(), d.J.grid(), "weighted_sides (data)");
  require_same_grid(q.grid(), d_t.J.grid(), "weighted_sides (perturbed data)");
  return {h1_norm(d.J * (q - q_t)), std::sqrt(data_diff_h1(d, d_t))};
}

InterpCheck interp_check(const InternalData& d, const InternalData& d_t, const ScalarField& u,
                         const ScalarField& u_t, double theta) {
  require_same_grid(u.grid(), u_t.grid(), "interp_check");
  if (!(theta > 0.0)) throw std::invalid_argument("interp_check: theta must be > 0");
  InterpCheck c;
  c.sup_U_diff = linf_norm(u * u - u_t * u_t);
  const double e = data_diff_h1(d, d_t);
  c.data_err_theta = e > 0.0 ? std::pow(e, theta) : 0.0;
  c.ratio = c.data_err_theta > 0.0 ? c.sup_U_diff / c.data_err_theta : 0.0;
  return c;
}

double phi_eval(double s, double c0, double c1) {
  if (!(s > 0.0) || s == 1.0) throw std::domain_error("phi_eval: s must be positive and != 1");
  const double inner = std::log(c1 * std::abs(std::log(s)));
  if (!(std::abs(inner) > 0.0) || !std::isfinite(inner)) throw std::domain_error("phi_eval: C1 |ln s| = 1");
  return c0 * (1.0 / std::abs(inner) + s);
}

namespace {

double phi_misfit(const std::vector<std::pair<double, double>>& se, double c0, double c1) {
  double acc = 0.0;
  for (const auto& [s, e] : se) {
    const double inner = std::log(c1 * std::abs(std::log(s)));
    if (std::abs(inner) < 1e-12 || !std::isfinite(inner)) return std::numeric_limits<double>::infinity();
    const double r = (c0 * (1.0 / std::abs(inner) + s) - e) / e;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(se.size()));
}

}  // namespace

PhiFit phi_fit(const std::vector<std::pair<double, double>>& pairs, double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("phi_fit: theta must be > 0");
  std::vector<std::pair<double, double>> se;
  for (const auto& [d, e] : pairs) {
    if (!(d > 0.0) || !(e > 0.0)) throw std::invalid_argument("phi_fit: data and error must be positive");
    const double s = std::pow(d, theta);
    if (s == 1.0) throw std::invalid_argument("phi_fit: s = 1 is excluded");
    se.emplace_back(s, e);
  }
  if (se.size() < 4) throw std::invalid_argument("phi_fit: need at least 4 pairs");

  PhiFit best{1.0, 1.0, std::numeric_limits<double>::infinity()};
  for (int a = -60; a <= 60; ++a)
    for (int b = -60; b <= 60; ++b) {
      const double c0 = std::pow(10.0, 0.1 * a), c1 = std::pow(10.0, 0.1 * b);
      const double m = phi_misfit(se, c0, c1);
      if (m < best.residual) best = {c0, c1, m};
    }
  if (!std::isfinite(best.residual)) throw std::runtime_error("phi_fit: no admissible (C0, C1) on the search grid");

  double f = std::pow(10.0, 0.1);
  for (int it = 0; it < 2000 && f - 1.0 > 1e-12; ++it) {
    bool moved = false;
    for (double* c : {&best.c0, &best.c1})
      for (double step : {f, 1.0 / f}) {
        const double saved = *c;
        *c = saved * step;
        const double m = phi_misfit(se, best.c0, best.c1);
        if (m < best.residual) {
          best.residual = m;
          moved = true;
        } else {
          *c = saved;
        }
      }
    if (!moved) f = std::sqrt(f);
  }
  return best;
}

double power_law_exponent(const std::vector<std::pair<double, double>>& pairs) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& [x, y] : pairs) {
    if (!(x > 0.0) || !(y > 0.0)) continue;
    const double lx = std::log(x), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) throw std::invalid_argument("power_law_exponent: need two positive pairs");
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw std::invalid_argument("power_law_exponent: abscissae coincide");
  return (n * sxy - sx * sy) / den;
}

std::string to_string(SweepFamily f) { return f == SweepFamily::noise ? "noise" : "bump"; }

std::optional<SweepFamily> parse_family(const std::string& s) {
  if (s == "noise") return SweepFamily::noise;
  if (s == "bump") return SweepFamily::bump;
  return std::nullopt;
}

SweepResult stability_sweep(const Problem& p, const std::vector<double>& eps_list, const SweepOptions& opts) {
  validate(p, true);
  if (!(opts.theta > 0.0 && opts.theta < 0.25)) throw std::invalid_argument("sweep: theta must lie in (0, 1/4)");
  for (double e : eps_list)
    if (!(e >= 0.0) || !std::isfinite(e)) throw std::invalid_argument("sweep: eps must be finite and >= 0");
  const Grid& G = p.grid;

  SweepResult out;
  const auto box = admissible_box(p.a, ScalarField(G, opts.q_star), opts.q0, opts.k);
  if (!box.diagnostic.empty()) throw std::runtime_error("sweep: " + box.diagnostic);
  out.box_lo = opts.q_star - box.radius;
  out.box_hi = opts.q_star + box.radius;

  auto fwd = solve_forward(p, opts.forward_tol);
  if (!fwd.report.converged()) throw SolveError("sweep: forward solve did not converge", fwd.report);
  const ScalarField u = fwd.u;
  const InternalData clean = synthesize(p.q, u);
  const ScalarField dist = dist_to_zero_set(u);
  const ScalarField abs_u = map(u, [](double t) { return std::abs(t); });

  ReconOptions ropts = opts.recon;
  if (opts.project) ropts.q_cap = std::min(ropts.q_cap, out.box_hi);

  const ScalarField bump = ScalarField::sample(G, [](double x, double y) {
    return std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y);
  });

  auto one = [&](std::size_t idx) {
    const double eps = eps_list[idx];
    StabilityRecord r;
    r.eps = eps;
    r.theta = opts.theta;
    ScalarField q_t, u_t;
    InternalData d_t;
    if (opts.family == SweepFamily::noise) {
      d_t = add_noise(clean, eps > 0.0 ? opts.noise_model : NoiseModel::none, eps, opts.seed);
      const ReconResult rec = reconstruct_w(d_t, p.a, p.g, ropts);
      q_t = rec.q_rec;
      if (opts.project)
        for (std::size_t k = 0; k < q_t.size(); ++k) q_t[k] = std::clamp(q_t[k], out.box_lo, out.box_hi);
      u_t = rec.w;
      r.picard_iterations = rec.iterations;
      r.converged = rec.converged;
    } else {
      q_t = p.q + eps * bump;
      Problem pt{G, p.a, q_t, p.g};
      auto f = solve_forward(pt, opts.forward_tol);
      if (!f.report.converged()) throw SolveError("sweep: perturbed forward solve did not converge", f.report);
      u_t = map(f.u, [](double t) { return std::abs(t); });
      d_t = synthesize(q_t, f.u);
    }
    r.data_err = data_diff_h1(clean, d_t);
    const auto ws = weighted_sides(p.q, q_t, clean, d_t);
    r.weighted_lhs = ws.lhs;
    r.weighted_rhs = ws.rhs;
    r.weighted_ratio = ws.rhs > 0.0 ? ws.lhs / ws.rhs : 0.0;
    const ScalarField err = q_t - p.q;
    r.sup_err_all = linf_norm(err);
    r.sup_err_band = band_sup(err, dist);
    r.interp = interp_check(clean, d_t, abs_u, u_t, opts.theta);
    return r;
  };
  out.records = parallel_map<StabilityRecord>(eps_list.size(), opts.threads, one);

  std::vector<std::pair<double, double>> pairs;
  for (const auto& r : out.records)
    if (r.eps > 0.0 && r.data_err > 0.0 && r.sup_err_band[0] > 0.0 && r.data_err != 1.0)
      pairs.emplace_back(r.data_err, r.sup_err_band[0]);
  if (pairs.size() >= 4) {
    out.phi = phi_fit(pairs, opts.theta);
    out.phi_fitted = true;
    for (auto& r : out.records) {
      r.phi_c0 = out.phi.c0;
      r.phi_c1 = out.phi.c1;
      r.phi_residual = out.phi.residual;
    }
  }
  return out;
}

void write_stability_csv(const std::filesystem::path& path, const std::vector<StabilityRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << kStabilityHeader << '\n';
  char buf[64];
  auto put = [&](double v, bool last = false) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf << (last ? '\n' : ',');
  };
  for (const auto& r : records) {
    put(r.eps);
    put(r.data_err);
    put(r.weighted_lhs);
    put(r.weighted_rhs);
    put(r.weighted_ratio);
    put(r.sup_err_all);
    for (double b : r.sup_err_band) put(b);
    put(r.theta);
    put(r.phi_c0);
    put(r.phi_c1);
    put(r.phi_residual, true);
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace qscope
