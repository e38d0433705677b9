#pragma once

// Independent reference computations used as test oracles.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

// Tridiagonal solve (Thomas algorithm): sub a, diagonal b, super c.
inline std::vector<double> thomas(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                                  std::vector<double> d) {
  const std::size_t n = b.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double m = a[i] / b[i - 1];
    b[i] -= m * c[i - 1];
    d[i] -= m * d[i - 1];
  }
  std::vector<double> x(n);
  x[n - 1] = d[n - 1] / b[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
  return x;
}

// Dense LU with partial pivoting.
inline std::vector<double> lu_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a[i][k]) > std::abs(a[p][k])) p = i;
    if (a[p][k] == 0.0) throw std::runtime_error("lu_solve: singular");
    std::swap(a[p], a[k]);
    std::swap(b[p], b[k]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double m = a[i][k] / a[k][k];
      for (std::size_t j = k; j < n; ++j) a[i][j] -= m * a[k][j];
      b[i] -= m * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
    x[i] = s / a[i][i];
  }
  return x;
}

// Continuum Dirichlet eigenvalues of -Laplace on the unit square.
inline double dirichlet_eigenvalue(int m, int n) { return std::numbers::pi * std::numbers::pi * (m * m + n * n); }

// Same for the five-point Laplacian with spacing h.
inline double discrete_dirichlet_eigenvalue(int m, int n, double h) {
  const double sm = std::sin(m * std::numbers::pi * h / 2), sn = std::sin(n * std::numbers::pi * h / 2);
  return 4.0 / (h * h) * (sm * sm + sn * sn);
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace oracle
