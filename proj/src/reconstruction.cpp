#include "qscope/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "qscope/kernels.hpp"

namespace qscope {

void ReconOptions::validate() const {
  if (!(w_floor > 0.0)) throw std::invalid_argument("recon: w_floor must be > 0");
  if (!(damping > 0.0 && damping <= 1.0)) throw std::invalid_argument("recon: damping must lie in (0, 1]");
  if (!(picard_tol > 0.0)) throw std::invalid_argument("recon: picard_tol must be > 0");
  if (max_picard < 1) throw std::invalid_argument("recon: max_picard must be >= 1");
  if (!(trust_threshold >= 0.0)) throw std::invalid_argument("recon: trust_threshold must be >= 0");
  if (!(q_cap > 0.0)) throw std::invalid_argument("recon: q_cap must be > 0");
  if (!(sign_threshold > 0.0 && sign_threshold < 1.0))
    throw std::invalid_argument("recon: sign_threshold must lie in (0, 1)");
  if (!(solver_tol > 0.0 && solver_tol < 1.0)) throw std::invalid_argument("recon: solver_tol must lie in (0, 1)");
}

ScalarField nodal_sign(const ScalarField& J, const ScalarField& g, double threshold) {
  require_same_grid(J.grid(), g.grid(), "nodal_sign");
  const Grid& G = J.grid();
  ScalarField sign(G, 1.0);
  const double jmax = linf_norm(J);
  if (!(jmax > 0.0)) return sign;

  // Label the superlevel set (4-connectivity).
  std::vector<int> label(G.size(), -1);
  int ncomp = 0;
  std::deque<std::pair<int, int>> queue;
  const int di[4] = {1, -1, 0, 0};
  const int dj[4] = {0, 0, 1, -1};
  for (int j = 0; j < G.ny; ++j)
    for (int i = 0; i < G.nx; ++i) {
      const std::size_t k = G.index(i, j);
      if (label[k] >= 0 || J[k] < threshold * jmax) continue;
      label[k] = ncomp;
      queue.push_back({i, j});
      while (!queue.empty()) {
        auto [ci, cj] = queue.front();
        queue.pop_front();
        for (int d = 0; d < 4; ++d) {
          const int ni = ci + di[d], nj = cj + dj[d];
          if (ni < 0 || nj < 0 || ni >= G.nx || nj >= G.ny) continue;
          const std::size_t nk = G.index(ni, nj);
          if (label[nk] >= 0 || J[nk] < threshold * jmax) continue;
          label[nk] = ncomp;
          queue.push_back({ni, nj});
        }
      }
      ++ncomp;
    }

  // Grow the components over the sub-threshold nodes.
  for (int j = 0; j < G.ny; ++j)
    for (int i = 0; i < G.nx; ++i)
      if (label[G.index(i, j)] >= 0) queue.push_back({i, j});
  while (!queue.empty()) {
    auto [ci, cj] = queue.front();
    queue.pop_front();
    const int l = label[G.index(ci, cj)];
    for (int d = 0; d < 4; ++d) {
      const int ni = ci + di[d], nj = cj + dj[d];
      if (ni < 0 || nj < 0 || ni >= G.nx || nj >= G.ny) continue;
      const std::size_t nk = G.index(ni, nj);
      if (label[nk] >= 0) continue;
      label[nk] = l;
      queue.push_back({ni, nj});
    }
  }

  std::vector<double> gsum(ncomp, 0.0);
  for (int j = 0; j < G.ny; ++j)
    for (int i = 0; i < G.nx; ++i)
      if (G.is_boundary(i, j)) {
        const double gv = g(i, j);
        if (gv > 0.0) gsum[label[G.index(i, j)]] += 1.0;
        if (gv < 0.0) gsum[label[G.index(i, j)]] -= 1.0;
      }
  std::vector<int> csign(ncomp, 0);
  for (int c = 0; c < ncomp; ++c) csign[c] = gsum[c] > 0.0 ? 1 : (gsum[c] < 0.0 ? -1 : 0);

  // Undetermined components flip relative to a determined neighbour.
  for (bool changed = true; changed;) {
    changed = false;
    for (int j = 0; j < G.ny; ++j)
      for (int i = 0; i < G.nx; ++i) {
        const int l = label[G.index(i, j)];
        if (csign[l] != 0) continue;
        for (int d = 0; d < 4; ++d) {
          const int ni = i + di[d], nj = j + dj[d];
          if (ni < 0 || nj < 0 || ni >= G.nx || nj >= G.ny) continue;
          const int m = label[G.index(ni, nj)];
          if (m != l && csign[m] != 0) {
            csign[l] = -csign[m];
            changed = true;
            break;
          }
        }
      }
  }
  if (ncomp == 0) return sign;
  for (std::size_t k = 0; k < G.size(); ++k) sign[k] = csign[label[k]] < 0 ? -1.0 : 1.0;
  return sign;
}

ScalarField recover_q(const InternalData& d, const ScalarField& w, const ReconOptions& opts) {
  require_same_grid(d.I.grid(), w.grid(), "recover_q");
  ScalarField q(w.grid());
  for (std::size_t k = 0; k < q.size(); ++k) {
    const double a = std::max(w[k], opts.w_floor);
    q[k] = d.I[k] / (a * a);
  }
  return q;
}

namespace {

double norm2(std::span<const double> x) { return std::sqrt(kernels::active().dot(x.data(), x.data(), x.size())); }

// One linear solve of M x = b, started from x0 and solved for the correction.
std::vector<double> solve_from(const SparseMatrix& m, std::span<const double> b, std::vector<double> x0,
                               double tol, bool spd) {
  const double bn = norm2(b);
  std::vector<double> r = spmv(m, x0);
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = b[k] - r[k];
  const double rn = norm2(r);
  if (rn <= tol * bn || rn == 0.0) return x0;
  const double rel = std::min(0.1, tol * bn / rn);
  const int maxit = default_max_iterations(b.size());
  SolveResult res;
  bool ok = false;
  if (spd) {
    res = cg_solve(m, r, rel, maxit);
    ok = res.report.converged();
  }
  if (!ok) {
    res = bicgstab_solve(m, r, rel, maxit);
    if (!res.report.converged()) throw SolveError("reconstruction: linear solve failed", res.report);
  }
  for (std::size_t k = 0; k < x0.size(); ++k) x0[k] += res.x[k];
  return x0;
}

}  // namespace

ReconResult reconstruct_w(const InternalData& d, const TensorField& a, const ScalarField& g,
                          const ReconOptions& opts, const ScalarField* initial) {
  opts.validate();
  const Grid& G = d.I.grid();
  require_same_grid(G, a.grid, "reconstruct_w (A)");
  require_same_grid(G, g.grid(), "reconstruct_w (g)");
  for (std::size_t k = 0; k < G.size(); ++k)
    if (d.I[k] < 0.0) throw std::invalid_argument("reconstruct_w: I must be nonnegative");

  ReconResult out;
  out.sign = nodal_sign(d.J, g, opts.sign_threshold);
  const ScalarField& sigma = out.sign;
  const DirichletSystem sys = make_system(a, ScalarField(G, 0.0));

  std::vector<double> x;
  if (initial) {
    require_same_grid(G, initial->grid(), "reconstruct_w (initial)");
    x = sys.restrict_interior(sigma * *initial);
  } else {
    x = solve_from(sys.matrix, sys.rhs(g), std::vector<double>(InteriorIndex{G}.count(), 0.0), opts.solver_tol,
                   sys.positive_definite);
  }
  ScalarField v = sys.embed(x, g);

  auto track_min = [&](const ScalarField& f) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < f.size(); ++k)
      if (sigma[k] > 0.0) m = std::min(m, f[k]);
    return m;
  };
  out.min_iterate = track_min(v);

  ScalarField src(G);
  for (int it = 0; it < opts.max_picard; ++it) {
    for (std::size_t k = 0; k < G.size(); ++k) {
      const double av = std::max(std::abs(v[k]), opts.w_floor);
      src[k] = sigma[k] * av * std::min(d.I[k] / (av * av), opts.q_cap);
    }
    const auto b = sys.rhs(g, &src);
    const auto xhat = solve_from(sys.matrix, b, x, opts.solver_tol, sys.positive_definite);
    double dn = 0.0, nn = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double xn = x[k] + opts.damping * (xhat[k] - x[k]);
      dn += (xn - x[k]) * (xn - x[k]);
      nn += xn * xn;
      x[k] = xn;
    }
    v = sys.embed(x, g);
    out.min_iterate = std::min(out.min_iterate, track_min(v));
    const double upd = nn > 0.0 ? std::sqrt(dn / nn) : std::sqrt(dn);
    out.history.push_back(upd);
    out.iterations = it + 1;
    if (upd <= opts.picard_tol) {
      out.converged = true;
      break;
    }
  }

  out.v = v;
  out.w = map(v, [](double t) { return std::abs(t); });
  out.q_rec = recover_q(d, out.w, opts);
  out.trust = RegionMask::at_least(out.w, opts.trust_threshold);

  const ScalarField lv = sys.op.apply(v);  // -div(A grad v)
  double s = 0.0;
  for (int j = 1; j < G.ny - 1; ++j)
    for (int i = 1; i < G.nx - 1; ++i) {
      const double r = -v(i, j) * lv(i, j) + d.I(i, j);
      s += r * r;
    }
  out.nonlinear_residual = std::sqrt(s * G.hx * G.hy);
  return out;
}

std::array<double, 4> band_sup(const ScalarField& err, const ScalarField& distance) {
  require_same_grid(err.grid(), distance.grid(), "band_sup");
  std::array<double, 4> out{};
  for (std::size_t k = 0; k < err.size(); ++k) {
    for (int b = 0; b < 4; ++b)
      if (distance[k] >= kBandEdges[b] && distance[k] < kBandEdges[b + 1]) {
        out[b] = std::max(out[b], std::abs(err[k]));
        break;
      }
  }
  return out;
}

RoundTrip roundtrip(const Problem& p, NoiseModel model, double eps, std::uint64_t seed,
                    const ReconOptions& opts, double forward_tol) {
  validate(p, true);
  RoundTrip rt;
  auto fwd = solve_forward(p, forward_tol);
  if (!fwd.report.converged()) throw SolveError("roundtrip: forward solve did not converge", fwd.report);
  rt.u = std::move(fwd.u);
  rt.clean = synthesize(p.q, rt.u);
  rt.noisy = add_noise(rt.clean, model, eps, seed);
  rt.data_err = data_diff_h1(rt.clean, rt.noisy);
  rt.recon = reconstruct_w(rt.noisy, p.a, p.g, opts);

  const ScalarField err = rt.recon.q_rec - p.q;
  double qmax = 0.0;
  for (std::size_t k = 0; k < err.size(); ++k)
    if (rt.recon.trust.contains(k)) {
      rt.sup_err_trust = std::max(rt.sup_err_trust, std::abs(err[k]));
      qmax = std::max(qmax, std::abs(p.q[k]));
    }
  rt.rel_err_trust = qmax > 0.0 ? rt.sup_err_trust / qmax : rt.sup_err_trust;
  rt.band_err = band_sup(err, dist_to_zero_set(rt.u));
  return rt;
}

}  // namespace qscope
