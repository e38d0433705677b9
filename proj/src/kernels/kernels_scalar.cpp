#include "qscope/kernels.hpp"

namespace qscope::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void xpay_scalar(const double* x, double a, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + a * y[i];
}

void mul_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

double weighted_sumsq_scalar(const double* w, const double* f, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * f[i] * f[i];
  return s;
}

void csr_spmv_scalar(std::size_t rows, const std::size_t* row_ptr, const std::int32_t* col,
                     const double* val, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) s += val[k] * x[col[k]];
    y[r] = s;
  }
}

}  // namespace

const Table& scalar_table() {
  static const Table t{Isa::scalar,  dot_scalar,           axpy_scalar, xpay_scalar,
                       mul_scalar,   weighted_sumsq_scalar, csr_spmv_scalar};
  return t;
}

}  // namespace qscope::kernels
