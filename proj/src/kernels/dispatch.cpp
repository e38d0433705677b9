#include <cstdlib>
#include <stdexcept>
#include <string>

#include "qscope/kernels.hpp"

namespace qscope::kernels {

bool available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(QSCOPE_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(QSCOPE_HAVE_NEON_TU)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const Table& table(Isa isa) {
  if (!available(isa))
    throw std::invalid_argument("kernel variant '" + std::string(name(isa)) + "' is not available");
  switch (isa) {
#if defined(QSCOPE_HAVE_AVX2_TU)
    case Isa::avx2:
      return avx2_table();
#endif
#if defined(QSCOPE_HAVE_NEON_TU)
    case Isa::neon:
      return neon_table();
#endif
    default:
      return scalar_table();
  }
}

std::string_view name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

namespace {

const Table& select() {
  const char* env = std::getenv("QSCOPE_KERNELS");
  const std::string want = env ? env : "auto";
  if (want == "scalar") return scalar_table();
  if (want == "avx2") return table(Isa::avx2);
  if (want == "neon") return table(Isa::neon);
  if (want != "auto") throw std::invalid_argument("QSCOPE_KERNELS: unknown value '" + want + "'");
  if (available(Isa::avx2)) return table(Isa::avx2);
  if (available(Isa::neon)) return table(Isa::neon);
  return scalar_table();
}

}  // namespace

const Table& active() {
  static const Table& t = select();
  return t;
}

}  // namespace qscope::kernels
