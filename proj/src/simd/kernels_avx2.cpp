#include <immintrin.h>

#include <cmath>

#include "rppg/simd/kernels.hpp"

namespace rppg::simd {
namespace {

void seed_row_avx2(const double* l, const double* a, const double* b, int x0, int x1, double py,
                   const SeedPoint& s, double theta, double radius_sq, std::int32_t id,
                   double* best, std::int32_t* label) {
  const double dy = py - s.y;
  const double dy2 = dy * dy;
  const __m256d vdy2 = _mm256_set1_pd(dy2);
  const __m256d vsx = _mm256_set1_pd(s.x);
  const __m256d vsl = _mm256_set1_pd(s.l);
  const __m256d vsa = _mm256_set1_pd(s.a);
  const __m256d vsb = _mm256_set1_pd(s.b);
  const __m256d vtheta = _mm256_set1_pd(theta);
  const __m256d vr2 = _mm256_set1_pd(radius_sq);
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d lane = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);

  int x = x0;
  for (; x + 4 <= x1; x += 4) {
    const __m256d px = _mm256_add_pd(_mm256_add_pd(_mm256_set1_pd(double(x)), lane), half);
    const __m256d dx = _mm256_sub_pd(px, vsx);
    const __m256d dsp = _mm256_add_pd(_mm256_mul_pd(dx, dx), vdy2);
    const __m256d in_radius = _mm256_cmp_pd(dsp, vr2, _CMP_LE_OQ);
    if (_mm256_movemask_pd(in_radius) == 0) continue;

    const __m256d dl = _mm256_sub_pd(_mm256_loadu_pd(l + x), vsl);
    const __m256d da = _mm256_sub_pd(_mm256_loadu_pd(a + x), vsa);
    const __m256d db = _mm256_sub_pd(_mm256_loadu_pd(b + x), vsb);
    const __m256d lab2 = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(dl, dl), _mm256_mul_pd(da, da)),
                                       _mm256_mul_pd(db, db));
    const __m256d d = _mm256_add_pd(_mm256_sqrt_pd(lab2), _mm256_mul_pd(vtheta, _mm256_sqrt_pd(dsp)));

    const __m256d old = _mm256_loadu_pd(best + x);
    const __m256d take = _mm256_and_pd(_mm256_cmp_pd(d, old, _CMP_LT_OQ), in_radius);
    const int bits = _mm256_movemask_pd(take);
    if (bits == 0) continue;
    _mm256_storeu_pd(best + x, _mm256_blendv_pd(old, d, take));
    for (int k = 0; k < 4; ++k) {
      if (bits & (1 << k)) label[x + k] = id;
    }
  }
  detail::scalar_table.seed_row(l, a, b, x, x1, py, s, theta, radius_sq, id, best, label);
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d y0 = _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    const __m256d y1 =
        _mm256_add_pd(_mm256_loadu_pd(y + i + 4), _mm256_mul_pd(va, _mm256_loadu_pd(x + i + 4)));
    _mm256_storeu_pd(y + i, y0);
    _mm256_storeu_pd(y + i + 4, y1);
  }
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, _mm256_loadu_pd(x + i))));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  acc0 = _mm256_add_pd(acc0, acc1);
  const __m128d lo = _mm256_castpd256_pd128(acc0);
  const __m128d hi = _mm256_extractf128_pd(acc0, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  double s = _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

}  // namespace

namespace detail {
const KernelTable avx2_table{Isa::avx2, &seed_row_avx2, &axpy_avx2, &dot_avx2};
}

}  // namespace rppg::simd
