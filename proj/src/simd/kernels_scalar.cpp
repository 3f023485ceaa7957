#include <cmath>

#include "rppg/simd/kernels.hpp"

namespace rppg::simd {
namespace {

void seed_row_scalar(const double* l, const double* a, const double* b, int x0, int x1, double py,
                     const SeedPoint& s, double theta, double radius_sq, std::int32_t id,
                     double* best, std::int32_t* label) {
  const double dy = py - s.y;
  const double dy2 = dy * dy;
  for (int x = x0; x < x1; ++x) {
    const double dx = (static_cast<double>(x) + 0.5) - s.x;
    const double dsp = dx * dx + dy2;
    if (!(dsp <= radius_sq)) continue;
    const double dl = l[x] - s.l;
    const double da = a[x] - s.a;
    const double db = b[x] - s.b;
    const double d = std::sqrt(dl * dl + da * da + db * db) + theta * std::sqrt(dsp);
    if (d < best[x]) {
      best[x] = d;
      label[x] = id;
    }
  }
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

}  // namespace

namespace detail {
const KernelTable scalar_table{Isa::scalar, &seed_row_scalar, &axpy_scalar, &dot_scalar};
}

}  // namespace rppg::simd
