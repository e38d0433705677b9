#include "qscope/forward.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace qscope {

// ---------------------------------------------------------------------------
// DivergenceOperator

DivergenceOperator::DivergenceOperator(const TensorField& a) : grid_(a.grid) {
  const Grid& g = grid_;
  if (a.a11.size() != g.size() || a.a12.size() != g.size() || a.a22.size() != g.size())
    throw std::invalid_argument("DivergenceOperator: tensor field size mismatch");
  ellipticity_ = a.ellipticity();
  if (!(ellipticity_ > 0.0)) {
    std::ostringstream msg;
    msg << "coefficient matrix is not uniformly elliptic (min eigenvalue " << ellipticity_ << ")";
    throw std::invalid_argument(msg.str());
  }
  c_.assign(g.size(), std::array<double, 9>{});

  const double ihx2 = 1.0 / (g.hx * g.hx);
  const double ihy2 = 1.0 / (g.hy * g.hy);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i + 1 < g.nx; ++i) {
      const std::size_t p = g.index(i, j), e = g.index(i + 1, j);
      const double w = 0.5 * (a.a11[p] + a.a11[e]) * ihx2;
      c_[p][slot(0, 0)] += w;
      c_[p][slot(1, 0)] -= w;
      c_[e][slot(0, 0)] += w;
      c_[e][slot(-1, 0)] -= w;
    }
  }
  for (int j = 0; j + 1 < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t p = g.index(i, j), n = g.index(i, j + 1);
      const double w = 0.5 * (a.a22[p] + a.a22[n]) * ihy2;
      c_[p][slot(0, 0)] += w;
      c_[p][slot(0, 1)] -= w;
      c_[n][slot(0, 0)] += w;
      c_[n][slot(0, -1)] -= w;
    }
  }

  // Cross term: a12_c * (pa rb + ra pb) with p = d/dx and r = d/dy weights
  // of the cell-averaged gradient. Corner order 00, 10, 01, 11.
  constexpr int ci[4] = {0, 1, 0, 1};
  constexpr int cj[4] = {0, 0, 1, 1};
  constexpr double ps[4] = {-1.0, 1.0, -1.0, 1.0};
  constexpr double rs[4] = {-1.0, -1.0, 1.0, 1.0};
  const double scale = 1.0 / (4.0 * g.hx * g.hy);
  for (int j = 0; j + 1 < g.ny; ++j) {
    for (int i = 0; i + 1 < g.nx; ++i) {
      double a12 = 0.0;
      for (int c = 0; c < 4; ++c) a12 += a.a12[g.index(i + ci[c], j + cj[c])];
      a12 *= 0.25;
      if (a12 == 0.0) continue;
      for (int ca = 0; ca < 4; ++ca) {
        const std::size_t node = g.index(i + ci[ca], j + cj[ca]);
        for (int cb = 0; cb < 4; ++cb) {
          const double v = a12 * scale * (ps[ca] * rs[cb] + rs[ca] * ps[cb]);
          c_[node][slot(ci[cb] - ci[ca], cj[cb] - cj[ca])] += v;
        }
      }
    }
  }
}

ScalarField DivergenceOperator::apply(const ScalarField& f) const {
  require_same_grid(grid_, f.grid(), "DivergenceOperator::apply");
  const Grid& g = grid_;
  ScalarField out(g);
  for (int j = 1; j < g.ny - 1; ++j) {
    for (int i = 1; i < g.nx - 1; ++i) {
      const auto& c = c_[g.index(i, j)];
      double s = 0.0;
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) s += c[slot(di, dj)] * f(i + di, j + dj);
      out(i, j) = s;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// DirichletSystem

double discrete_laplacian_min_eigenvalue(const Grid& grid) {
  const double sx = std::sin(std::numbers::pi * grid.hx / 2.0);
  const double sy = std::sin(std::numbers::pi * grid.hy / 2.0);
  return 4.0 * sx * sx / (grid.hx * grid.hx) + 4.0 * sy * sy / (grid.hy * grid.hy);
}

DirichletSystem make_system(const TensorField& a, const ScalarField& q) {
  require_same_grid(a.grid, q.grid(), "make_system");
  DirichletSystem sys{DivergenceOperator(a), q, {}, false};
  const Grid& g = a.grid;
  const InteriorIndex idx{g};
  std::vector<Triplet> t;
  t.reserve(idx.count() * 9);
  for (int j = 1; j < g.ny - 1; ++j) {
    for (int i = 1; i < g.nx - 1; ++i) {
      const std::size_t row = idx.unknown(i, j);
      const std::size_t k = g.index(i, j);
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          if (g.is_boundary(i + di, j + dj)) continue;
          double v = sys.op.coeff(k, di, dj);
          if (di == 0 && dj == 0) v -= q[k];
          t.push_back({row, idx.unknown(i + di, j + dj), v});
        }
    }
  }
  sys.matrix = SparseMatrix::from_triplets(idx.count(), std::move(t));
  double qmax = -std::numeric_limits<double>::infinity();
  for (int j = 1; j < g.ny - 1; ++j)
    for (int i = 1; i < g.nx - 1; ++i) qmax = std::max(qmax, q(i, j));
  sys.positive_definite = qmax < 0.99 * sys.op.ellipticity() * discrete_laplacian_min_eigenvalue(g);
  return sys;
}

SparseMatrix assemble(const Grid& grid, const TensorField& a, const ScalarField& q) {
  require_same_grid(grid, a.grid, "assemble");
  return make_system(a, q).matrix;
}

std::vector<double> DirichletSystem::rhs(const ScalarField& boundary, const ScalarField* source) const {
  const Grid& g = grid();
  require_same_grid(g, boundary.grid(), "DirichletSystem::rhs");
  if (source) require_same_grid(g, source->grid(), "DirichletSystem::rhs");
  const InteriorIndex idx{g};
  std::vector<double> b(idx.count(), 0.0);
  for (int j = 1; j < g.ny - 1; ++j) {
    for (int i = 1; i < g.nx - 1; ++i) {
      const std::size_t k = g.index(i, j);
      double v = source ? (*source)[k] : 0.0;
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di)
          if (g.is_boundary(i + di, j + dj)) v -= op.coeff(k, di, dj) * boundary(i + di, j + dj);
      b[idx.unknown(i, j)] = v;
    }
  }
  return b;
}

ScalarField DirichletSystem::embed(std::span<const double> interior, const ScalarField& boundary) const {
  const Grid& g = grid();
  const InteriorIndex idx{g};
  if (interior.size() != idx.count()) throw std::invalid_argument("embed: size mismatch");
  ScalarField u = boundary;
  for (int j = 1; j < g.ny - 1; ++j)
    for (int i = 1; i < g.nx - 1; ++i) u(i, j) = interior[idx.unknown(i, j)];
  return u;
}

std::vector<double> DirichletSystem::restrict_interior(const ScalarField& f) const {
  const Grid& g = grid();
  const InteriorIndex idx{g};
  std::vector<double> x(idx.count());
  for (int j = 1; j < g.ny - 1; ++j)
    for (int i = 1; i < g.nx - 1; ++i) x[idx.unknown(i, j)] = f(i, j);
  return x;
}

// ---------------------------------------------------------------------------
// Forward solve

void validate(const Problem& p, bool experiment) {
  require_same_grid(p.grid, p.a.grid, "Problem (A)");
  require_same_grid(p.grid, p.q.grid(), "Problem (q)");
  require_same_grid(p.grid, p.g.grid(), "Problem (g)");
  if (!(p.a.ellipticity() > 0.0)) throw std::invalid_argument("Problem: A is not elliptic");
  if (!p.q.all_finite()) throw std::invalid_argument("Problem: q has non-finite values");
  if (experiment) {
    bool nonzero = false;
    for (int j = 0; j < p.grid.ny && !nonzero; ++j)
      for (int i = 0; i < p.grid.nx; ++i)
        if (p.grid.is_boundary(i, j) && p.g(i, j) != 0.0) {
          nonzero = true;
          break;
        }
    if (!nonzero) throw std::invalid_argument("Problem: boundary data g vanishes identically");
  }
}

ForwardSolution solve_dirichlet(const DirichletSystem& sys, const ScalarField& boundary,
                                const ScalarField* source, double tol) {
  const auto b = sys.rhs(boundary, source);
  const int maxit = default_max_iterations(b.size());
  SolveResult res;
  bool have = false;
  if (sys.positive_definite) {
    res = cg_solve(sys.matrix, b, tol, maxit);
    have = res.report.converged();
  }
  if (!have) res = bicgstab_solve(sys.matrix, b, tol, maxit);
  return {sys.embed(res.x, boundary), res.report};
}

ForwardSolution solve_forward(const Problem& p, double tol) {
  validate(p, false);
  const auto sys = make_system(p.a, p.q);
  return solve_dirichlet(sys, p.g, nullptr, tol);
}

ScalarField residual_field(const Problem& p, const ScalarField& u) {
  validate(p, false);
  require_same_grid(p.grid, u.grid(), "residual_field");
  const DivergenceOperator op(p.a);
  ScalarField r = op.apply(u);
  const Grid& g = p.grid;
  for (int j = 1; j < g.ny - 1; ++j)
    for (int i = 1; i < g.nx - 1; ++i) r(i, j) = -r(i, j) + p.q(i, j) * u(i, j);
  return r;
}

// ---------------------------------------------------------------------------
// Admissibility

Admissibility admissible_box(const TensorField& a, const ScalarField& q_star, double q0, double k) {
  return estimate_admissibility(a, q_star, q_star, q0, k);
}

Admissibility estimate_admissibility(const TensorField& a, const ScalarField& q,
                                     const ScalarField& q_star, double q0, double k) {
  require_same_grid(q.grid(), q_star.grid(), "estimate_admissibility");
  if (!(q0 > 0.0)) throw std::invalid_argument("estimate_admissibility: q0 must be positive");
  if (!(k > 0.0 && k < 1.0)) throw std::invalid_argument("estimate_admissibility: k must lie in (0,1)");
  Admissibility out;
  out.q0 = q0;
  out.k = k;
  out.distance = linf_norm(q - q_star);
  try {
    const auto sys = make_system(a, q_star);
    const double sigma = smallest_singular_estimate(sys.matrix, 1e-8);
    double scale = 0.0;
    for (double d : sys.matrix.diagonal_values()) scale = std::max(scale, std::abs(d));
    if (!(sigma > 1e-10 * scale)) {
      out.diagnostic = "A_{q*} is numerically singular";
      return out;
    }
    out.resolvent_norm_estimate = 1.0 / sigma;
    out.radius = std::min(k * sigma, q0);
    out.member = out.distance <= out.radius * (1.0 + 1e-12);
  } catch (const SolveError& e) {
    out.diagnostic = std::string("A_{q*} appears singular: ") + e.what();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manufactured problems

Manufactured manufactured(ManufacturedCase tag, int n) {
  const Grid g = make_grid(n);
  Manufactured m{tag, {}, 0.0, {}};
  switch (tag) {
    case ManufacturedCase::k1:
      m.q_level = 2.0;
      m.exact = [](double x, double y) { return std::cos(x) * std::cos(y); };
      m.problem = {g, TensorField::identity(g), ScalarField(g, 2.0), ScalarField::sample(g, m.exact)};
      break;
    case ManufacturedCase::k2:
      m.q_level = 8.0;
      m.exact = [](double x, double y) { return std::cos(2.0 * x) * std::cos(2.0 * y); };
      m.problem = {g, TensorField::identity(g), ScalarField(g, 8.0), ScalarField::sample(g, m.exact)};
      break;
    case ManufacturedCase::variable: {
      m.q_level = 2.0;
      auto a = TensorField::sample(
          g, [](double x, double) { return 1.0 + 0.3 * x; }, [](double, double) { return 0.0; },
          [](double, double y) { return 1.0 + 0.3 * y; });
      m.problem = {g, std::move(a), ScalarField(g, 2.0),
                   ScalarField::sample(g, [](double x, double y) { return std::cos(x) * std::cos(y); })};
      break;
    }
  }
  return m;
}

std::optional<ManufacturedCase> parse_case(const std::string& s) {
  if (s == "k1") return ManufacturedCase::k1;
  if (s == "k2") return ManufacturedCase::k2;
  if (s == "variable") return ManufacturedCase::variable;
  return std::nullopt;
}

std::string to_string(ManufacturedCase c) {
  switch (c) {
    case ManufacturedCase::k1:
      return "k1";
    case ManufacturedCase::k2:
      return "k2";
    case ManufacturedCase::variable:
      return "variable";
  }
  return "unknown";
}

}  // namespace qscope
