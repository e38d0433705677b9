#include "qscope/probes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include "qscope/forward.hpp"
#include "qscope/parallel.hpp"

namespace qscope {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double area(const RegionMask& m) {
  double s = 0.0;
  for (double w : quadrature_weights(m)) s += w;
  return s;
}

double sum_weighted(const ScalarField& f, const std::vector<double>& w) {
  double s = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k)
    if (w[k] != 0.0) s += w[k] * f[k];
  return s;
}

RegionMask nonempty_ball(const Grid& g, Point x, double r) {
  RegionMask m = RegionMask::ball(g, x, r);
  if (m.empty()) throw std::invalid_argument("probe: ball contains no grid node");
  return m;
}

void require_radius(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("probe: radius must be positive");
}

}  // namespace

double dist_to_boundary(Point p) { return std::min({p.x, 1.0 - p.x, p.y, 1.0 - p.y}); }

Sides caccioppoli_ratio(const ScalarField& u, Point x, double r) {
  require_radius(r);
  if (!(2.0 * r < dist_to_boundary(x))) throw std::invalid_argument("caccioppoli: requires 2r < dist(x, boundary)");
  const Grid& g = u.grid();
  const auto [gx, gy] = gradient(u);
  const RegionMask b1 = nonempty_ball(g, x, r), b2 = nonempty_ball(g, x, 2.0 * r);
  return {integrate(gx * gx + gy * gy, b1), integrate(u * u, b2) / (r * r)};
}

double doubling_ratio(const ScalarField& u, Point x, double r) {
  require_radius(r);
  const Grid& g = u.grid();
  const ScalarField u2 = u * u;
  const double inner = integrate(u2, nonempty_ball(g, x, r));
  const double outer = integrate(u2, nonempty_ball(g, x, 2.0 * r));
  if (inner == 0.0) return kInf;
  return outer / inner;
}

NegPower reverse_holder(const ScalarField& u, Point x, double r, double delta) {
  require_radius(r);
  if (!(delta > 0.0)) throw std::invalid_argument("reverse_holder: delta must be > 0");
  if (!(r < dist_to_boundary(x))) throw std::invalid_argument("reverse_holder: ball must be interior");
  const RegionMask b = nonempty_ball(u.grid(), x, r);
  const auto w = quadrature_weights(b);
  const double a = area(b);
  const double p = 2.0 * (1.0 + delta);
  const double hi = sum_weighted(map(u, [p](double t) { return std::pow(std::abs(t), p); }), w) / a;
  NegPower out;
  out.lhs = std::pow(hi, 1.0 / (1.0 + delta));
  out.rhs = sum_weighted(u * u, w) / a;
  return out;
}

NegPower muckenhoupt(const ScalarField& u, Point x, double r, double kappa) {
  require_radius(r);
  if (!(kappa > 1.0)) throw std::invalid_argument("muckenhoupt: kappa must be > 1");
  if (!(r < dist_to_boundary(x))) throw std::invalid_argument("muckenhoupt: ball must be interior");
  const RegionMask b = nonempty_ball(u.grid(), x, r);
  const auto w = quadrature_weights(b);
  const double a = area(b);
  const double cut = 1e-12 * linf_norm(u);
  const double e = -2.0 / (kappa - 1.0);
  NegPower out;
  double neg = 0.0, pos = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (!b.contains(k)) continue;
    pos += w[k] * u[k] * u[k];
    if (std::abs(u[k]) < cut || u[k] == 0.0) {
      ++out.excluded;
      continue;
    }
    neg += w[k] * std::pow(std::abs(u[k]), e);
  }
  out.neg_mass = neg;
  out.lhs = (pos / a) * std::pow(neg / a, kappa - 1.0);
  out.rhs = 1.0;
  return out;
}

ThreeSpheres three_spheres_fit(const ScalarField& u, Point y, double r) {
  require_radius(r);
  if (!(3.0 * r < dist_to_boundary(y))) throw std::invalid_argument("three_spheres: requires 3r < dist(y, boundary)");
  const Grid& g = u.grid();
  const auto [gx, gy] = gradient(u);
  const ScalarField u2 = u * u, du2 = gx * gx + gy * gy;
  double plain[3], scaled[3];
  for (int k = 1; k <= 3; ++k) {
    const RegionMask b = nonempty_ball(g, y, k * r);
    const double m0 = integrate(u2, b), m1 = integrate(du2, b);
    plain[k - 1] = std::sqrt(m0 + m1);
    scaled[k - 1] = std::sqrt(m0 / (r * r) + m1);
  }
  ThreeSpheres t{plain[0], plain[1], plain[2], 0.0, 0.0};
  t.s = std::log(scaled[2] / scaled[1]) / std::log(scaled[2] / scaled[0]);
  t.s_raw = std::log(plain[2] / (r * plain[1])) / std::log(plain[2] / plain[0]);
  return t;
}

UcpFit ucp_lowerbound_fit(const ScalarField& u, const std::vector<std::pair<Point, double>>& samples) {
  if (samples.empty()) throw std::invalid_argument("ucp_lowerbound_fit: no samples");
  UcpFit fit;
  const Grid& g = u.grid();
  const auto [gx, gy] = gradient(u);
  const ScalarField dens = u * u + gx * gx + gy * gy;
  double c = 0.0;
  bool finite = true;
  for (const auto& [x, r] : samples) {
    require_radius(r);
    UcpSample s{x, r, std::sqrt(integrate(dens, nonempty_ball(g, x, r))), 0.0, 0.0};
    if (!(s.norm > 0.0)) {
      finite = false;
      s.c_i = kInf;
    } else if (s.norm < 1.0) {
      // c exp(c/r) = -ln N, increasing in c; keep the upper bracket.
      const double target = -std::log(s.norm);
      auto f = [&](double cc) { return cc * std::exp(cc / r); };
      double lo = 0.0, hi = 1.0;
      while (f(hi) < target) hi *= 2.0;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < target ? lo : hi) = mid;
      }
      s.c_i = hi;
    }
    c = std::max(c, s.c_i);
    fit.samples.push_back(s);
  }
  fit.finite = finite;
  fit.c = finite ? c : kInf;
  for (auto& s : fit.samples)
    s.slack = finite && s.norm > 0.0 ? std::log(s.norm) + fit.c * std::exp(fit.c / s.r) : -kInf;
  return fit;
}

CarlemanSides carleman_ratio(const ScalarField& v, const TensorField& a, const ScalarField& psi,
                             double lambda_c, double tau) {
  require_same_grid(v.grid(), psi.grid(), "carleman_ratio");
  require_same_grid(v.grid(), a.grid, "carleman_ratio (A)");
  if (!(lambda_c > 0.0) || !(tau > 0.0)) throw std::invalid_argument("carleman_ratio: lambda and tau must be > 0");
  const Grid& g = v.grid();
  const auto [px, py] = gradient(psi);
  for (std::size_t k = 0; k < g.size(); ++k)
    if (!(std::hypot(px[k], py[k]) > 0.0)) throw std::invalid_argument("carleman_ratio: psi has a critical point");

  const ScalarField phi = map(psi, [lambda_c](double t) { return std::exp(lambda_c * t); });
  const auto [gx, gy] = gradient(v);
  const ScalarField lv = -1.0 * DivergenceOperator(a).apply(v);  // div(A grad v), zero on the boundary

  // max phi over nodes where some integrand is nonzero
  std::vector<char> active(g.size(), 0);
  double phimax = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    active[k] = v[k] != 0.0 || gx[k] != 0.0 || gy[k] != 0.0 || lv[k] != 0.0;
    if (active[k]) phimax = std::max(phimax, phi[k]);
  }
  CarlemanSides out;
  out.shifted = 2.0 * tau * phimax > 600.0;
  const double shift = out.shifted ? phimax : 0.0;
  // zero off the support, where exp could overflow against a vanishing factor
  ScalarField wgt(g);
  for (std::size_t k = 0; k < g.size(); ++k) wgt[k] = active[k] ? std::exp(2.0 * tau * (phi[k] - shift)) : 0.0;
  const double l = lambda_c, t = tau;
  ScalarField vol(g), bdry(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double f = phi[k], g2 = gx[k] * gx[k] + gy[k] * gy[k];
    vol[k] = (std::pow(l, 4) * t * t * t * f * f * f * v[k] * v[k] + l * l * t * f * g2) * wgt[k];
    bdry[k] = (std::pow(l, 3) * t * t * t * f * f * f * v[k] * v[k] + l * t * f * g2) * wgt[k];
  }
  const RegionMask full = RegionMask::full(g);
  out.lhs = integrate(vol, full);
  double edge = 0.0;
  for (int i = 0; i < g.nx; ++i) {
    const double w = (i == 0 || i == g.nx - 1 ? 0.5 : 1.0) * g.hx;
    edge += w * (bdry(i, 0) + bdry(i, g.ny - 1));
  }
  for (int j = 0; j < g.ny; ++j) {
    const double w = (j == 0 || j == g.ny - 1 ? 0.5 : 1.0) * g.hy;
    edge += w * (bdry(0, j) + bdry(g.nx - 1, j));
  }
  out.rhs = integrate(lv * lv * wgt, full) + edge;
  return out;
}

std::pair<double, double> alpha_beta(double lambda_c) {
  if (!(lambda_c > 0.0)) throw std::invalid_argument("alpha_beta: lambda must be > 0");
  return {1.0 - std::exp(-2.0 * lambda_c), 2.0 * (std::exp(-2.0 * lambda_c) - std::exp(-2.5 * lambda_c))};
}

TensorField rescaled_coefficients(const TensorField& a, Point c, double s) {
  if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("rescaled_coefficients: scale must lie in (0, 1]");
  const Grid& g = a.grid;
  TensorField out = a;
  if (s == 1.0) return out;
  auto interp = [&](const std::vector<double>& f, double x, double y) {
    const double fx = std::clamp(x / g.hx, 0.0, g.nx - 1.0), fy = std::clamp(y / g.hy, 0.0, g.ny - 1.0);
    const int i = std::min(static_cast<int>(fx), g.nx - 2), j = std::min(static_cast<int>(fy), g.ny - 2);
    const double tx = fx - i, ty = fy - j;
    return (1 - tx) * (1 - ty) * f[g.index(i, j)] + tx * (1 - ty) * f[g.index(i + 1, j)] +
           (1 - tx) * ty * f[g.index(i, j + 1)] + tx * ty * f[g.index(i + 1, j + 1)];
  };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double x = c.x + s * (i * g.hx - c.x), y = c.y + s * (j * g.hy - c.y);
      const std::size_t k = g.index(i, j);
      out.a11[k] = interp(a.a11, x, y);
      out.a12[k] = interp(a.a12, x, y);
      out.a22[k] = interp(a.a22, x, y);
    }
  return out;
}

double delta_star_probe(const ScalarField& u, double r_star, int lattice) {
  require_radius(r_star);
  if (lattice < 2) throw std::invalid_argument("delta_star_probe: lattice must have >= 2 points per axis");
  const Grid& g = u.grid();
  double result = kInf;
  for (int b = 0; b < lattice; ++b)
    for (int a = 0; a < lattice; ++a) {
      const Point x{static_cast<double>(a) / (lattice - 1), static_cast<double>(b) / (lattice - 1)};
      const RegionMask m = nonempty_ball(g, x, r_star);
      double best = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k)
        if (m.contains(k)) best = std::max(best, u[k] * u[k]);
      result = std::min(result, best);
    }
  return result;
}

ScalarField bump_field(const Grid& grid, Point c, double radius, int power) {
  require_radius(radius);
  return ScalarField::sample(grid, [=](double x, double y) {
    const double r2 = ((x - c.x) * (x - c.x) + (y - c.y) * (y - c.y)) / (radius * radius);
    return r2 < 1.0 ? std::pow(1.0 - r2, power) : 0.0;
  });
}

ScalarField psi_field(const Grid& grid, PsiKind kind) {
  if (kind == PsiKind::linear_x) return ScalarField::sample(grid, [](double x, double) { return x; });
  return ScalarField::sample(grid, [](double x, double y) { return -((x + 0.5) * (x + 0.5) + (y - 0.5) * (y - 0.5)); });
}

std::vector<Point> lattice_centres(const ProbeSettings& s) {
  if (s.lattice < 1) throw std::invalid_argument("probes: lattice must be >= 1");
  std::vector<Point> out;
  for (int b = 0; b < s.lattice; ++b)
    for (int a = 0; a < s.lattice; ++a) {
      auto at = [&](int i) {
        return s.lattice == 1 ? 0.5 * (s.lattice_lo + s.lattice_hi)
                              : s.lattice_lo + (s.lattice_hi - s.lattice_lo) * i / (s.lattice - 1);
      };
      out.push_back({at(a), at(b)});
    }
  return out;
}

namespace {

void finish_generic(ProbeReport& rep) {
  rep.fitted = 0.0;
  for (auto& row : rep.rows) {
    row.ratio = row.rhs > 0.0 ? row.lhs / row.rhs : (row.lhs > 0.0 ? kInf : 0.0);
    if (row.rhs > 0.0) rep.fitted = std::max(rep.fitted, row.ratio);
  }
  rep.pass = std::isfinite(rep.fitted);
  for (const auto& row : rep.rows)
    if (row.lhs > rep.fitted * row.rhs * (1.0 + 1e-12)) rep.pass = false;
}

struct Sample {
  Point x;
  double r;
};

}  // namespace

std::vector<ProbeReport> run_probes(const ScalarField& u, const TensorField& a, const ProbeSettings& s) {
  if (s.selected.empty()) throw std::invalid_argument("empty probe set");
  for (const auto& name : s.selected)
    if (std::find(kProbeNames.begin(), kProbeNames.end(), name) == kProbeNames.end())
      throw std::invalid_argument("unknown probe '" + name + "'");
  require_same_grid(u.grid(), a.grid, "run_probes");

  const auto centres = lattice_centres(s);
  auto samples_where = [&](auto&& ok) {
    std::vector<Sample> out;
    for (double r : s.radii)
      for (const auto& c : centres)
        if (ok(c, r)) out.push_back({c, r});
    return out;
  };
  auto rows_for = [&](const std::vector<Sample>& smp, auto&& fn) {
    return parallel_map<ProbeRow>(smp.size(), s.threads, [&](std::size_t i) { return fn(smp[i]); });
  };

  std::vector<ProbeReport> reports;
  for (const auto& name : kProbeNames) {
    if (std::find(s.selected.begin(), s.selected.end(), name) == s.selected.end()) continue;
    ProbeReport rep;
    rep.tag = name;
    if (name == "caccioppoli") {
      auto smp = samples_where([](Point c, double r) { return 2.0 * r < dist_to_boundary(c); });
      rep.rows = rows_for(smp, [&](const Sample& m) {
        const auto sd = caccioppoli_ratio(u, m.x, m.r);
        return ProbeRow{m.x.x, m.x.y, m.r, {}, sd.lhs, sd.rhs, 0.0};
      });
      finish_generic(rep);
    } else if (name == "doubling") {
      auto smp = samples_where([](Point, double) { return true; });
      rep.rows = rows_for(smp, [&](const Sample& m) {
        const RegionMask b2 = RegionMask::ball(u.grid(), m.x, 2.0 * m.r);
        const RegionMask b1 = RegionMask::ball(u.grid(), m.x, m.r);
        const ScalarField u2 = u * u;
        return ProbeRow{m.x.x, m.x.y, m.r, {}, integrate(u2, b2), integrate(u2, b1), 0.0};
      });
      finish_generic(rep);
      for (const auto& row : rep.rows)
        if (row.rhs == 0.0) rep.notes.push_back("u vanishes on an inner ball; ratio = inf");
    } else if (name == "reverse_holder") {
      rep.param_names = {"delta"};
      auto smp = samples_where([](Point c, double r) { return r < dist_to_boundary(c); });
      rep.rows = rows_for(smp, [&](const Sample& m) {
        const auto sd = reverse_holder(u, m.x, m.r, s.delta);
        return ProbeRow{m.x.x, m.x.y, m.r, {s.delta}, sd.lhs, sd.rhs, 0.0};
      });
      finish_generic(rep);
    } else if (name == "muckenhoupt") {
      rep.param_names = {"kappa", "excluded", "neg_mass"};
      auto smp = samples_where([](Point c, double r) { return r < dist_to_boundary(c); });
      rep.rows = rows_for(smp, [&](const Sample& m) {
        const auto sd = muckenhoupt(u, m.x, m.r, s.kappa);
        return ProbeRow{m.x.x, m.x.y, m.r, {s.kappa, static_cast<double>(sd.excluded), sd.neg_mass},
                        sd.lhs, sd.rhs, 0.0};
      });
      finish_generic(rep);
    } else if (name == "three_spheres") {
      rep.param_names = {"I1", "I2", "I3", "s_fit", "s_raw"};
      auto smp = samples_where([](Point c, double r) { return 3.0 * r < dist_to_boundary(c); });
      rep.rows = rows_for(smp, [&](const Sample& m) {
        const auto t = three_spheres_fit(u, m.x, m.r);
        // lhs = s_fit against the bound s < 1.
        return ProbeRow{m.x.x, m.x.y, m.r, {t.i1, t.i2, t.i3, t.s, t.s_raw}, t.s, 1.0, 0.0};
      });
      rep.pass = !rep.rows.empty();
      double smax = 0.0;
      for (auto& row : rep.rows) {
        row.ratio = row.lhs;
        smax = std::max(smax, row.lhs);
        if (!(row.lhs > 0.0 && row.lhs < 1.0)) rep.pass = false;
      }
      rep.fitted = smax;
    } else if (name == "ucp") {
      rep.param_names = {"norm", "c_i", "slack"};
      std::vector<std::pair<Point, double>> smp;
      for (double r : s.radii)
        for (const auto& c : centres) smp.push_back({c, r});
      const auto fit = ucp_lowerbound_fit(u, smp);
      rep.fitted = fit.c;
      rep.pass = fit.finite;
      for (const auto& x : fit.samples) {
        // lhs = exp(-c exp(c/r)), rhs = ||u||_{H1(B)}.
        const double lhs = fit.finite ? std::exp(-fit.c * std::exp(fit.c / x.r)) : kInf;
        rep.rows.push_back({x.x.x, x.x.y, x.r, {x.norm, x.c_i, x.slack}, lhs, x.norm,
                            x.norm > 0.0 ? lhs / x.norm : kInf});
        if (!(x.slack >= 0.0)) rep.pass = false;
      }
      if (!fit.finite) rep.notes.push_back("u vanishes on a sample ball; no finite c");
    } else if (name == "carleman") {
      rep.param_names = {"lambda", "tau", "psi", "shifted", "scale"};
      struct Job {
        std::size_t bump;
        std::size_t scale;
        PsiKind psi;
        double tau;
      };
      if (s.lambda_c < s.lambda0) throw std::invalid_argument("carleman: lambda below lambda0");
      if (s.carleman_scales.empty()) throw std::invalid_argument("carleman: no operator scales");
      std::vector<TensorField> ops;
      for (double sc : s.carleman_scales) ops.push_back(rescaled_coefficients(a, {0.5, 0.5}, sc));
      std::vector<Job> jobs;
      for (std::size_t b = 0; b < s.bumps.size(); ++b)
        for (std::size_t o = 0; o < ops.size(); ++o)
          for (PsiKind k : {PsiKind::linear_x, PsiKind::radial})
            for (double t : s.taus)
              if (t >= s.tau0) jobs.push_back({b, o, k, t});
      rep.rows = parallel_map<ProbeRow>(jobs.size(), s.threads, [&](std::size_t i) {
        const Job& j = jobs[i];
        const auto& [c, rad] = s.bumps[j.bump];
        const ScalarField v = bump_field(u.grid(), c, rad, s.bump_power);
        const auto sd = carleman_ratio(v, ops[j.scale], psi_field(u.grid(), j.psi), s.lambda_c, j.tau);
        return ProbeRow{c.x, c.y, rad,
                        {s.lambda_c, j.tau, j.psi == PsiKind::linear_x ? 0.0 : 1.0, sd.shifted ? 1.0 : 0.0,
                         s.carleman_scales[j.scale]},
                        sd.lhs, sd.rhs, 0.0};
      });
      finish_generic(rep);
      // Monotone in tau for psi = x; the radial weight is only required bounded.
      for (std::size_t i = 1; i < rep.rows.size(); ++i) {
        const auto &p = rep.rows[i - 1], &q = rep.rows[i];
        if (p.cx != q.cx || p.cy != q.cy || p.r != q.r || p.params[2] != q.params[2] || p.params[4] != q.params[4])
          continue;
        if (q.params[1] <= p.params[1]) continue;
        if (q.ratio > p.ratio * (1.0 + 1e-12)) {
          if (q.params[2] == 0.0)
            rep.pass = false;
          else if (rep.notes.empty())
            rep.notes.push_back("radial psi: ratio increases with tau");
        }
      }
    } else if (name == "delta_star") {
      rep.param_names = {"r_star"};
      const double d = delta_star_probe(u, s.r_star, s.delta_lattice);
      rep.rows.push_back({0.5, 0.5, s.r_star, {s.r_star}, d, 1.0, d});
      rep.fitted = d;
      rep.pass = d > 0.0;
    }
    reports.push_back(std::move(rep));
  }
  return reports;
}

void write_probe_csv(const std::filesystem::path& path, const ProbeReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "center_x,center_y,r";
  for (const auto& p : report.param_names) out << ',' << p;
  out << ",lhs,rhs,ratio\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (const auto& row : report.rows) {
    put(row.cx);
    out << ',';
    put(row.cy);
    out << ',';
    put(row.r);
    for (double p : row.params) {
      out << ',';
      put(p);
    }
    out << ',';
    put(row.lhs);
    out << ',';
    put(row.rhs);
    out << ',';
    put(row.ratio);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace qscope
