#pragma once

// Compressed-row matrices and the Jacobi-preconditioned Krylov solvers used
// for every elliptic solve in the project.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qscope {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

class SparseMatrix {
 public:
  SparseMatrix() = default;

  // Sums duplicate entries and drops entries that end up exactly zero.
  static SparseMatrix from_triplets(std::size_t n, std::vector<Triplet> entries);
  static SparseMatrix identity(std::size_t n);
  static SparseMatrix diagonal(std::span<const double> d);

  std::size_t dim() const { return n_; }
  std::size_t nonzeros() const { return val_.size(); }

  std::span<const std::size_t> row_ptr() const { return row_ptr_; }
  std::span<const std::int32_t> col() const { return col_; }
  std::span<const double> values() const { return val_; }

  double at(std::size_t r, std::size_t c) const;
  std::vector<double> diagonal_values() const;
  SparseMatrix transpose() const;
  SparseMatrix scaled(double alpha) const;
  // Exact structural and numerical symmetry.
  bool is_symmetric() const;

  std::vector<std::vector<double>> to_dense() const;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::int32_t> col_;
  std::vector<double> val_;
};

// Throws std::invalid_argument on dimension mismatch.
void spmv(const SparseMatrix& m, std::span<const double> x, std::span<double> y);
std::vector<double> spmv(const SparseMatrix& m, std::span<const double> x);

enum class SolveMethod { cg, bicgstab, minres };
enum class SolveStatus { converged, max_iterations, breakdown };

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;  // ||b - Mx|| / ||b||, recomputed from x
  SolveStatus status = SolveStatus::converged;
  SolveMethod method = SolveMethod::cg;

  bool converged() const { return status == SolveStatus::converged; }
};

std::string to_string(SolveMethod m);
std::string to_string(SolveStatus s);

struct SolveResult {
  std::vector<double> x;
  SolveReport report;
};

class SolveError : public std::runtime_error {
 public:
  SolveError(const std::string& what, SolveReport report)
      : std::runtime_error(what), report_(report) {}
  const SolveReport& report() const { return report_; }

 private:
  SolveReport report_;
};

// Conjugate gradients for symmetric positive-definite M, zero initial guess.
// A non-positive curvature p.Mp is reported as breakdown.
SolveResult cg_solve(const SparseMatrix& m, std::span<const double> b, double tol, int maxit);

// BiCGStab for general nonsingular M, zero initial guess.
SolveResult bicgstab_solve(const SparseMatrix& m, std::span<const double> b, double tol, int maxit);

// MINRES for symmetric, possibly indefinite M, zero initial guess. Jacobi
// preconditioned when the diagonal is positive.
SolveResult minres_solve(const SparseMatrix& m, std::span<const double> b, double tol, int maxit);

// Smallest singular value of M (= 1/||M^-1||_2) by inverse power iteration on
// M^T M. Each step runs two inner Krylov solves (CG, then MINRES or BiCGStab
// with restarts); their failure surfaces as SolveError.
double smallest_singular_estimate(const SparseMatrix& m, double tol);

// Iteration cap used when callers have no better estimate.
int default_max_iterations(std::size_t dim);

}  // namespace qscope
