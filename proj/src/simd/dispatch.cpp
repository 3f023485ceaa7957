#include <atomic>
#include <cstdlib>
#include <string>

#include "rppg/error.hpp"
#include "rppg/simd/kernels.hpp"

namespace rppg::simd {
namespace {

bool cpu_has_avx2() {
#if defined(RPPG_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable* best_table() {
#if defined(RPPG_HAVE_AVX2)
  if (cpu_has_avx2()) return &detail::avx2_table;
#endif
#if defined(RPPG_HAVE_NEON)
  return &detail::neon_table;
#endif
  return &detail::scalar_table;
}

const KernelTable* initial_table() {
  const char* env = std::getenv("RPPG_SIMD");
  if (env == nullptr || std::string_view(env).empty() || std::string_view(env) == "auto") {
    return best_table();
  }
  return &kernels(parse_isa(env));
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

std::string_view isa_name(Isa isa) {
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

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::scalar;
  if (name == "avx2") return Isa::avx2;
  if (name == "neon") return Isa::neon;
  throw UsageError("unknown SIMD ISA '" + std::string(name) + "' (expected scalar, avx2 or neon)");
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return cpu_has_avx2();
    case Isa::neon:
#if defined(RPPG_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels(Isa isa) {
  if (!isa_available(isa)) {
    throw UsageError("SIMD ISA '" + std::string(isa_name(isa)) + "' is not available on this machine");
  }
  switch (isa) {
#if defined(RPPG_HAVE_AVX2)
    case Isa::avx2:
      return detail::avx2_table;
#endif
#if defined(RPPG_HAVE_NEON)
    case Isa::neon:
      return detail::neon_table;
#endif
    default:
      return detail::scalar_table;
  }
}

const KernelTable& kernels() { return *active().load(std::memory_order_acquire); }

void force_isa(Isa isa) { active().store(&kernels(isa), std::memory_order_release); }

}  // namespace rppg::simd
