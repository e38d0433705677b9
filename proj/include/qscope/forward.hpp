#pragma once

// Discretisation of L_q = d_i(a^{ij} d_j .) + q with Dirichlet data, the
// forward solve, and the admissibility test for a coefficient q.
//
// Sign convention: the assembled matrix is A_q = -L_q restricted to interior
// unknowns, so q = 0 gives a positive-definite system.

#include <array>
#include <functional>
#include <optional>
#include <string>

#include "qscope/grid.hpp"
#include "qscope/sparse.hpp"

namespace qscope {

// Nine-point stencil of -div(A grad .) obtained from the discrete energy
//   sum_edges a_e (du/dh)^2 + sum_cells 2 a12_c (du/dx)_c (du/dy)_c,
// with diagonal coefficients averaged to edge midpoints and a12 averaged to
// cell centres. The stencil is symmetric by construction and reduces to the
// classical five-point Laplacian for A = I.
class DivergenceOperator {
 public:
  explicit DivergenceOperator(const TensorField& a);

  const Grid& grid() const { return grid_; }
  double ellipticity() const { return ellipticity_; }

  // Coefficient linking node k to its neighbour at offset (di, dj).
  double coeff(std::size_t k, int di, int dj) const { return c_[k][slot(di, dj)]; }

  // -div(A grad f) at interior nodes, zero on the boundary.
  ScalarField apply(const ScalarField& f) const;

 private:
  static constexpr int slot(int di, int dj) { return (dj + 1) * 3 + (di + 1); }

  Grid grid_;
  std::vector<std::array<double, 9>> c_;
  double ellipticity_ = 0.0;
};

// Interior unknown numbering: row-major over i = 1..nx-2, j = 1..ny-2.
struct InteriorIndex {
  Grid grid;
  std::size_t count() const { return static_cast<std::size_t>(grid.nx - 2) * (grid.ny - 2); }
  std::size_t unknown(int i, int j) const {
    return static_cast<std::size_t>(j - 1) * static_cast<std::size_t>(grid.nx - 2) +
           static_cast<std::size_t>(i - 1);
  }
};

// Interior Dirichlet system for -div(A grad .) - q.
struct DirichletSystem {
  DivergenceOperator op;
  ScalarField shift;  // q
  SparseMatrix matrix;
  // max q below the ellipticity floor times the principal discrete
  // Dirichlet eigenvalue of the Laplacian: the matrix is then SPD.
  bool positive_definite = false;

  const Grid& grid() const { return op.grid(); }
  // Right-hand side for -div(A grad u) - q u = source with u = boundary on the
  // boundary nodes. A null source means zero.
  std::vector<double> rhs(const ScalarField& boundary, const ScalarField* source = nullptr) const;
  // Full-grid field with interior values from x and boundary values copied.
  ScalarField embed(std::span<const double> interior, const ScalarField& boundary) const;
  std::vector<double> restrict_interior(const ScalarField& f) const;
};

// Throws std::invalid_argument when A is not uniformly elliptic or grids differ.
DirichletSystem make_system(const TensorField& a, const ScalarField& q);
SparseMatrix assemble(const Grid& grid, const TensorField& a, const ScalarField& q);

// Smallest eigenvalue of the five-point Dirichlet Laplacian on the grid.
double discrete_laplacian_min_eigenvalue(const Grid& grid);

struct Problem {
  Grid grid;
  TensorField a;
  ScalarField q;
  ScalarField g;  // only the boundary values are used
};

// Grid consistency and ellipticity; with `experiment` also requires g not
// identically zero on the boundary.
void validate(const Problem& p, bool experiment);

struct ForwardSolution {
  ScalarField u;
  SolveReport report;
};

// Solves L_q u = 0, u = g on the boundary. CG when the system is certified
// positive definite, BiCGStab otherwise or when CG breaks down. Non-convergence
// is returned in the report; callers decide.
ForwardSolution solve_forward(const Problem& p, double tol);

// Interior-node solve of -div(A grad w) = source with w = boundary on Γ_h.
ForwardSolution solve_dirichlet(const DirichletSystem& sys, const ScalarField& boundary,
                                const ScalarField* source, double tol);

// Pointwise discrete L_q u, zero on boundary nodes.
ScalarField residual_field(const Problem& p, const ScalarField& u);

struct Admissibility {
  double resolvent_norm_estimate = 0.0;  // ~ ||A_{q*}^{-1}||
  double q0 = 0.0;
  double k = 0.0;
  double radius = 0.0;    // min(k / ||A_{q*}^{-1}||, q0)
  double distance = 0.0;  // ||q - q*||_inf
  bool member = false;
  std::string diagnostic;
};

// Membership of q in the admissible set around the reference q_star.
Admissibility estimate_admissibility(const TensorField& a, const ScalarField& q,
                                     const ScalarField& q_star, double q0, double k);

// Admissibility radius around q_star alone (q = q_star).
Admissibility admissible_box(const TensorField& a, const ScalarField& q_star, double q0, double k);

enum class ManufacturedCase { k1, k2, variable };

struct Manufactured {
  ManufacturedCase tag;
  Problem problem;
  double q_level;
  // Closed-form solution; empty for the variable-coefficient case.
  std::function<double(double, double)> exact;
};

// k1: u = cos x cos y, q = 2, A = I.
// k2: u = cos 2x cos 2y, q = 8, A = I (nodal lines at x = pi/4 and y = pi/4).
// variable: A = diag(1 + 0.3x, 1 + 0.3y), q = 2, g = cos x cos y on the boundary.
Manufactured manufactured(ManufacturedCase tag, int n);
std::optional<ManufacturedCase> parse_case(const std::string& s);
std::string to_string(ManufacturedCase c);

}  // namespace qscope
