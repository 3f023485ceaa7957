#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

// Data-parallel inner loops with a scalar reference and per-ISA variants.
//
// seed_row and axpy are required to produce bit-identical results on every
// ISA: each output element sees the same sequence of IEEE operations, only
// several elements are processed per instruction. dot reassociates its sum
// and is only equal up to rounding.
namespace rppg::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);
Isa parse_isa(std::string_view name);

// One seed as seen by the distance kernel.
struct SeedPoint {
  double l, a, b;
  double x, y;
};

// For pixels x in [x0, x1) of one row (pixel centre py = y + 0.5), evaluates
//   d = |lab_p - lab_s| + theta * |xy_p - xy_s|
// for pixels with |xy_p - xy_s|^2 <= radius_sq and writes (d, id) wherever
// d < best[x]. Row planes are indexed by absolute x.
using SeedRowFn = void (*)(const double* l, const double* a, const double* b, int x0, int x1,
                           double py, const SeedPoint& seed, double theta, double radius_sq,
                           std::int32_t id, double* best, std::int32_t* label);

// y[i] += alpha * x[i]
using AxpyFn = void (*)(double alpha, const double* x, double* y, std::size_t n);

// sum x[i] * y[i]
using DotFn = double (*)(const double* x, const double* y, std::size_t n);

struct KernelTable {
  Isa isa;
  SeedRowFn seed_row;
  AxpyFn axpy;
  DotFn dot;
};

bool isa_available(Isa isa);

// Table for a specific ISA; throws UsageError if it is not available.
const KernelTable& kernels(Isa isa);

// Table selected at runtime: RPPG_SIMD env var (scalar|avx2|neon|auto) if set,
// else the best ISA the CPU supports.
const KernelTable& kernels();

// Overrides the runtime selection (tests and benchmarks).
void force_isa(Isa isa);

namespace detail {
extern const KernelTable scalar_table;
#if defined(RPPG_HAVE_AVX2)
extern const KernelTable avx2_table;
#endif
#if defined(RPPG_HAVE_NEON)
extern const KernelTable neon_table;
#endif
}  // namespace detail

}  // namespace rppg::simd
