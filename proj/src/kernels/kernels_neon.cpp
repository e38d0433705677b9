// NEON variants for aarch64 (Advanced SIMD is mandatory there, so no
// runtime probe is needed beyond the architecture check at build time).
#include <arm_neon.h>

#include "qscope/kernels.hpp"

namespace qscope::kernels {
namespace {

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void xpay_neon(const double* x, double a, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(x + i), va, vld1q_f64(y + i)));
  for (; i < n; ++i) y[i] = x[i] + a * y[i];
}

void mul_neon(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

double weighted_sumsq_neon(const double* w, const double* f, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t vf = vld1q_f64(f + i);
    acc = vfmaq_f64(acc, vmulq_f64(vld1q_f64(w + i), vf), vf);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += w[i] * f[i] * f[i];
  return s;
}

void csr_spmv_neon(std::size_t rows, const std::size_t* row_ptr, const std::int32_t* col,
                   const double* val, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t k = row_ptr[r];
    const std::size_t end = row_ptr[r + 1];
    float64x2_t acc = vdupq_n_f64(0.0);
    for (; k + 2 <= end; k += 2) {
      const double gathered[2] = {x[col[k]], x[col[k + 1]]};
      acc = vfmaq_f64(acc, vld1q_f64(val + k), vld1q_f64(gathered));
    }
    double s = vaddvq_f64(acc);
    for (; k < end; ++k) s += val[k] * x[col[k]];
    y[r] = s;
  }
}

}  // namespace

const Table& neon_table() {
  static const Table t{Isa::neon, dot_neon,           axpy_neon,    xpay_neon,
                       mul_neon,  weighted_sumsq_neon, csr_spmv_neon};
  return t;
}

}  // namespace qscope::kernels
