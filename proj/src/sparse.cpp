#include "qscope/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qscope/kernels.hpp"

namespace qscope {

// ---------------------------------------------------------------------------
// SparseMatrix

SparseMatrix SparseMatrix::from_triplets(std::size_t n, std::vector<Triplet> entries) {
  for (const auto& t : entries)
    if (t.row >= n || t.col >= n) throw std::invalid_argument("from_triplets: index out of range");
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseMatrix m;
  m.n_ = n;
  m.row_ptr_.assign(n + 1, 0);
  std::size_t k = 0;
  while (k < entries.size()) {
    const std::size_t r = entries[k].row, c = entries[k].col;
    double v = 0.0;
    while (k < entries.size() && entries[k].row == r && entries[k].col == c) v += entries[k++].value;
    if (v != 0.0) {
      m.col_.push_back(static_cast<std::int32_t>(c));
      m.val_.push_back(v);
      ++m.row_ptr_[r + 1];
    }
  }
  for (std::size_t r = 0; r < n; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
  return m;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<double> ones(n, 1.0);
  return diagonal(ones);
}

SparseMatrix SparseMatrix::diagonal(std::span<const double> d) {
  std::vector<Triplet> t;
  t.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) t.push_back({i, i, d[i]});
  return from_triplets(d.size(), std::move(t));
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  const auto first = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r]);
  const auto last = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r + 1]);
  const auto it = std::lower_bound(first, last, static_cast<std::int32_t>(c));
  if (it == last || *it != static_cast<std::int32_t>(c)) return 0.0;
  return val_[static_cast<std::size_t>(it - col_.begin())];
}

std::vector<double> SparseMatrix::diagonal_values() const {
  std::vector<double> d(n_, 0.0);
  for (std::size_t r = 0; r < n_; ++r) d[r] = at(r, r);
  return d;
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<Triplet> t;
  t.reserve(val_.size());
  for (std::size_t r = 0; r < n_; ++r)
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      t.push_back({static_cast<std::size_t>(col_[k]), r, val_[k]});
  return from_triplets(n_, std::move(t));
}

SparseMatrix SparseMatrix::scaled(double alpha) const {
  SparseMatrix m = *this;
  for (double& v : m.val_) v *= alpha;
  if (alpha == 0.0) return from_triplets(n_, {});
  return m;
}

bool SparseMatrix::is_symmetric() const {
  for (std::size_t r = 0; r < n_; ++r)
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      if (at(static_cast<std::size_t>(col_[k]), r) != val_[k]) return false;
  return true;
}

std::vector<std::vector<double>> SparseMatrix::to_dense() const {
  std::vector<std::vector<double>> d(n_, std::vector<double>(n_, 0.0));
  for (std::size_t r = 0; r < n_; ++r)
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) d[r][col_[k]] = val_[k];
  return d;
}

void spmv(const SparseMatrix& m, std::span<const double> x, std::span<double> y) {
  if (x.size() != m.dim() || y.size() != m.dim())
    throw std::invalid_argument("spmv: dimension mismatch (matrix " + std::to_string(m.dim()) +
                                ", x " + std::to_string(x.size()) + ")");
  kernels::active().csr_spmv(m.dim(), m.row_ptr().data(), m.col().data(), m.values().data(),
                             x.data(), y.data());
}

std::vector<double> spmv(const SparseMatrix& m, std::span<const double> x) {
  std::vector<double> y(m.dim());
  spmv(m, x, y);
  return y;
}

std::string to_string(SolveMethod m) {
  switch (m) {
    case SolveMethod::cg: return "cg";
    case SolveMethod::bicgstab: return "bicgstab";
    case SolveMethod::minres: return "minres";
  }
  return "?";
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged:
      return "converged";
    case SolveStatus::max_iterations:
      return "max_iterations";
    case SolveStatus::breakdown:
      return "breakdown";
  }
  return "unknown";
}

int default_max_iterations(std::size_t dim) {
  return static_cast<int>(std::min<std::size_t>(200000, 4 * dim + 1000));
}

// ---------------------------------------------------------------------------
// Krylov solvers

namespace {

double norm2(std::span<const double> v) { return std::sqrt(kernels::dot(v, v)); }

std::vector<double> inverse_diagonal(const SparseMatrix& m, bool positive_only) {
  auto d = m.diagonal_values();
  for (double& v : d) {
    const bool usable = positive_only ? v > 0.0 : v != 0.0;
    v = usable ? 1.0 / v : 1.0;
  }
  return d;
}

double true_relative_residual(const SparseMatrix& m, std::span<const double> b,
                              std::span<const double> x, double bnorm, std::vector<double>& r) {
  spmv(m, x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  return norm2(r) / bnorm;
}

void check_rhs(const SparseMatrix& m, std::span<const double> b, const char* what) {
  if (b.size() != m.dim()) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

}  // namespace

SolveResult cg_solve(const SparseMatrix& m, std::span<const double> b, double tol, int maxit) {
  check_rhs(m, b, "cg_solve");
  const std::size_t n = m.dim();
  SolveResult out{std::vector<double>(n, 0.0), {}};
  out.report.method = SolveMethod::cg;
  const double bnorm = norm2(b);
  if (bnorm == 0.0) return out;

  const auto dinv = inverse_diagonal(m, true);
  std::vector<double> r(b.begin(), b.end()), z(n), p(n), ap(n);
  kernels::mul(dinv, r, z);
  p = z;
  double rz = kernels::dot(r, z);
  auto& x = out.x;

  for (int it = 1; it <= maxit; ++it) {
    spmv(m, p, ap);
    const double pap = kernels::dot(p, ap);
    if (!(pap > 0.0)) {
      out.report.iterations = it;
      out.report.status = SolveStatus::breakdown;
      out.report.relative_residual = true_relative_residual(m, b, x, bnorm, ap);
      return out;
    }
    const double alpha = rz / pap;
    kernels::axpy(alpha, p, x);
    kernels::axpy(-alpha, ap, r);
    out.report.iterations = it;
    if (norm2(r) / bnorm <= tol) {
      // Confirm against the true residual; recurrence drift restarts from it.
      const double rel = true_relative_residual(m, b, x, bnorm, r);
      out.report.relative_residual = rel;
      if (rel <= tol) return out;
    }
    kernels::mul(dinv, r, z);
    const double rz_new = kernels::dot(r, z);
    kernels::xpay(z, rz_new / rz, p);
    rz = rz_new;
  }
  out.report.status = SolveStatus::max_iterations;
  out.report.relative_residual = true_relative_residual(m, b, x, bnorm, r);
  return out;
}

SolveResult bicgstab_solve(const SparseMatrix& m, std::span<const double> b, double tol, int maxit) {
  check_rhs(m, b, "bicgstab_solve");
  const std::size_t n = m.dim();
  SolveResult out{std::vector<double>(n, 0.0), {}};
  out.report.method = SolveMethod::bicgstab;
  const double bnorm = norm2(b);
  if (bnorm == 0.0) return out;

  const auto dinv = inverse_diagonal(m, false);
  auto& x = out.x;
  std::vector<double> r(b.begin(), b.end()), rhat(r), p(n, 0.0), v(n, 0.0), ph(n), s(n), sh(n), t(n);
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  const double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();

  auto finish = [&](SolveStatus status, int it) {
    out.report.iterations = it;
    out.report.relative_residual = true_relative_residual(m, b, x, bnorm, t);
    out.report.status =
        (status == SolveStatus::converged && !(out.report.relative_residual <= tol))
            ? SolveStatus::max_iterations
            : status;
    return out;
  };

  for (int it = 1; it <= maxit; ++it) {
    const double rho_new = kernels::dot(rhat, r);
    if (std::abs(rho_new) <= 1e-30 * bnorm * norm2(r) || std::abs(rho_new) < tiny)
      return finish(SolveStatus::breakdown, it);
    const double beta = (rho_new / rho) * (alpha / omega);
    // p = r + beta (p - omega v)
    kernels::axpy(-omega, v, p);
    kernels::xpay(r, beta, p);
    kernels::mul(dinv, p, ph);
    spmv(m, ph, v);
    const double rv = kernels::dot(rhat, v);
    if (std::abs(rv) < tiny || !std::isfinite(rv)) return finish(SolveStatus::breakdown, it);
    alpha = rho_new / rv;
    s = r;
    kernels::axpy(-alpha, v, s);
    if (norm2(s) / bnorm <= tol) {
      kernels::axpy(alpha, ph, x);
      const double rel = true_relative_residual(m, b, x, bnorm, t);
      if (rel <= tol) return finish(SolveStatus::converged, it);
      r = t;
      rhat = r;
      rho = alpha = omega = 1.0;
      std::fill(p.begin(), p.end(), 0.0);
      std::fill(v.begin(), v.end(), 0.0);
      continue;
    }
    kernels::mul(dinv, s, sh);
    spmv(m, sh, t);
    const double tt = kernels::dot(t, t);
    if (!(tt > 0.0)) return finish(SolveStatus::breakdown, it);
    omega = kernels::dot(t, s) / tt;
    kernels::axpy(alpha, ph, x);
    kernels::axpy(omega, sh, x);
    r = s;
    kernels::axpy(-omega, t, r);
    if (norm2(r) / bnorm <= tol) {
      const double rel = true_relative_residual(m, b, x, bnorm, t);
      if (rel <= tol) return finish(SolveStatus::converged, it);
      r = t;
    }
    if (omega == 0.0 || !std::isfinite(omega)) return finish(SolveStatus::breakdown, it);
    rho = rho_new;
  }
  return finish(SolveStatus::max_iterations, maxit);
}

SolveResult minres_solve(const SparseMatrix& m, std::span<const double> b, double tol, int maxit) {
  check_rhs(m, b, "minres_solve");
  const std::size_t n = m.dim();
  SolveResult out{std::vector<double>(n, 0.0), {}};
  out.report.method = SolveMethod::minres;
  const double bnorm = norm2(b);
  if (bnorm == 0.0) return out;

  // Jacobi only when it is SPD, identity otherwise.
  const auto diag = m.diagonal_values();
  const bool jacobi = std::all_of(diag.begin(), diag.end(), [](double d) { return d > 0.0; });
  std::vector<double> dinv(n, 1.0);
  if (jacobi)
    for (std::size_t i = 0; i < n; ++i) dinv[i] = 1.0 / diag[i];

  auto& x = out.x;
  std::vector<double> r1(b.begin(), b.end()), r2(r1), y(n), v(n), w(n, 0.0), w1(n), w2(n, 0.0), t(n);
  kernels::mul(dinv, r1, y);
  double beta = std::sqrt(kernels::dot(r1, y));
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    out.report.status = SolveStatus::breakdown;
    out.report.relative_residual = 1.0;
    return out;
  }
  double oldb = 0.0, dbar = 0.0, epsln = 0.0, phibar = beta, cs = -1.0, sn = 0.0;
  const double rhs_scale = beta;

  for (int it = 1; it <= maxit; ++it) {
    out.report.iterations = it;
    const double s = 1.0 / beta;
    for (std::size_t i = 0; i < n; ++i) v[i] = s * y[i];
    spmv(m, v, y);
    if (it >= 2) kernels::axpy(-beta / oldb, r1, y);
    const double alfa = kernels::dot(v, y);
    kernels::axpy(-alfa / beta, r2, y);
    std::swap(r1, r2);
    r2 = y;
    kernels::mul(dinv, r2, y);
    oldb = beta;
    const double bb = kernels::dot(r2, y);
    if (bb < 0.0 || !std::isfinite(bb)) {
      out.report.status = SolveStatus::breakdown;
      out.report.relative_residual = true_relative_residual(m, b, x, bnorm, t);
      return out;
    }
    beta = std::sqrt(bb);

    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    const double gamma = std::max(std::hypot(gbar, beta), std::numeric_limits<double>::epsilon());
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    std::swap(w1, w2);  // w1 <- old w2
    std::swap(w2, w);   // w2 <- old w
    for (std::size_t i = 0; i < n; ++i) w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
    kernels::axpy(phi, w, x);

    // phibar tracks the preconditioned residual norm
    if (phibar <= tol * rhs_scale || beta == 0.0) {
      const double rel = true_relative_residual(m, b, x, bnorm, t);
      out.report.relative_residual = rel;
      if (rel <= tol) return out;
      // the recurrence has drifted from the true residual; callers restart
      break;
    }
  }
  out.report.status = SolveStatus::max_iterations;
  out.report.relative_residual = true_relative_residual(m, b, x, bnorm, t);
  return out;
}

// ---------------------------------------------------------------------------
// Smallest singular value

namespace {

// `try_cg` is cleared after the first CG failure so later calls skip it.
std::vector<double> robust_solve(const SparseMatrix& m, bool symmetric, std::span<const double> b,
                                 double tol, bool& try_cg) {
  const int maxit = default_max_iterations(m.dim());
  if (symmetric && try_cg) {
    auto res = cg_solve(m, b, tol, maxit);
    if (res.report.converged()) return std::move(res.x);
    try_cg = false;
  }
  // Restarts on the residual: MINRES for symmetric (possibly indefinite) M,
  // BiCGStab otherwise.
  const double bnorm = norm2(b);
  std::vector<double> x(m.dim(), 0.0), r(b.begin(), b.end());
  SolveReport last;
  for (int restart = 0; restart < 10; ++restart) {
    const double rnorm = norm2(r);
    if (rnorm <= tol * bnorm) return x;
    const double rel = std::min(0.1, tol * bnorm / rnorm);
    auto res = symmetric ? minres_solve(m, r, rel, 4 * maxit) : bicgstab_solve(m, r, rel, maxit);
    last = res.report;
    if (!std::all_of(res.x.begin(), res.x.end(), [](double v) { return std::isfinite(v); })) break;
    kernels::axpy(1.0, res.x, x);
    const auto mx = spmv(m, x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - mx[i];
  }
  if (norm2(r) <= tol * bnorm) return x;
  last.relative_residual = norm2(r) / bnorm;
  throw SolveError("smallest_singular_estimate: inner solve failed (" + to_string(last.status) + ")", last);
}

}  // namespace

double smallest_singular_estimate(const SparseMatrix& m, double tol) {
  const std::size_t n = m.dim();
  if (n == 0) throw std::invalid_argument("smallest_singular_estimate: empty matrix");
  const bool symmetric = m.is_symmetric();
  const SparseMatrix mt = symmetric ? SparseMatrix{} : m.transpose();
  const SparseMatrix& mtr = symmetric ? m : mt;
  // inner error delta moves sigma by ~delta/2
  const double inner_tol = std::clamp(tol * 0.1, 1e-12, 1e-8);

  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double sigma = 0.0;
  bool try_cg = symmetric;
  for (int it = 0; it < 200; ++it) {
    // y = (M^T M)^-1 x, so x.y -> 1/sigma_min^2 for normalised x.
    const auto z = robust_solve(mtr, symmetric, x, inner_tol, try_cg);
    auto y = robust_solve(m, symmetric, z, inner_tol, try_cg);
    const double xy = kernels::dot(x, y);
    const double ynorm = norm2(y);
    if (!(xy > 0.0) || !std::isfinite(ynorm)) return 0.0;
    const double next = 1.0 / std::sqrt(xy);
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ynorm;
    if (it > 0 && std::abs(next - sigma) <= tol * next) return next;
    sigma = next;
  }
  return sigma;
}

}  // namespace qscope
