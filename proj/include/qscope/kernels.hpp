#pragma once

// Data-parallel inner loops shared by the solvers and the quadrature code.
//
// Every kernel has a scalar reference implementation. Vector variants
// (AVX2+FMA on x86-64, NEON on aarch64) are compiled into separate
// translation units and picked once at runtime. Set QSCOPE_KERNELS to
// "scalar", "avx2", "neon" or "auto" (default) to override the choice.
//
// Vector variants reassociate sums, so they agree with the scalar path to
// round-off, not bit-for-bit. Within one process the active table never
// changes, which keeps repeated runs reproducible.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace qscope::kernels {

enum class Isa { scalar, avx2, neon };

struct Table {
  Isa isa;
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y = x + a * y
  void (*xpay)(const double* x, double a, double* y, std::size_t n);
  // out = a .* b
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  // sum_i w[i] * f[i]^2
  double (*weighted_sumsq)(const double* w, const double* f, std::size_t n);
  // y = M x for a compressed-row matrix with `rows` rows
  void (*csr_spmv)(std::size_t rows, const std::size_t* row_ptr, const std::int32_t* col,
                   const double* val, const double* x, double* y);
};

const Table& scalar_table();
#if defined(QSCOPE_HAVE_AVX2_TU)
const Table& avx2_table();
#endif
#if defined(QSCOPE_HAVE_NEON_TU)
const Table& neon_table();
#endif

// True when the variant was compiled in and the running CPU supports it.
bool available(Isa isa);

// Table for a specific variant; throws std::invalid_argument when unavailable.
const Table& table(Isa isa);

// The table selected for this process.
const Table& active();

std::string_view name(Isa isa);

inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}
inline void xpay(std::span<const double> x, double a, std::span<double> y) {
  active().xpay(x.data(), a, y.data(), x.size());
}
inline void mul(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  active().mul(a.data(), b.data(), out.data(), a.size());
}
inline double weighted_sumsq(std::span<const double> w, std::span<const double> f) {
  return active().weighted_sumsq(w.data(), f.data(), w.size());
}

}  // namespace qscope::kernels
