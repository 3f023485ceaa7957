#include <arm_neon.h>

#include <cmath>

#include "rppg/simd/kernels.hpp"

namespace rppg::simd {
namespace {

void seed_row_neon(const double* l, const double* a, const double* b, int x0, int x1, double py,
                   const SeedPoint& s, double theta, double radius_sq, std::int32_t id,
                   double* best, std::int32_t* label) {
  const double dy = py - s.y;
  const float64x2_t vdy2 = vdupq_n_f64(dy * dy);
  const float64x2_t vsx = vdupq_n_f64(s.x);
  const float64x2_t vsl = vdupq_n_f64(s.l);
  const float64x2_t vsa = vdupq_n_f64(s.a);
  const float64x2_t vsb = vdupq_n_f64(s.b);
  const float64x2_t vtheta = vdupq_n_f64(theta);
  const float64x2_t vr2 = vdupq_n_f64(radius_sq);
  const float64x2_t half = vdupq_n_f64(0.5);
  const double lanes[2] = {0.0, 1.0};
  const float64x2_t lane = vld1q_f64(lanes);

  int x = x0;
  for (; x + 2 <= x1; x += 2) {
    const float64x2_t px = vaddq_f64(vaddq_f64(vdupq_n_f64(double(x)), lane), half);
    const float64x2_t dx = vsubq_f64(px, vsx);
    const float64x2_t dsp = vaddq_f64(vmulq_f64(dx, dx), vdy2);
    const uint64x2_t in_radius = vcleq_f64(dsp, vr2);
    if ((vgetq_lane_u64(in_radius, 0) | vgetq_lane_u64(in_radius, 1)) == 0) continue;

    const float64x2_t dl = vsubq_f64(vld1q_f64(l + x), vsl);
    const float64x2_t da = vsubq_f64(vld1q_f64(a + x), vsa);
    const float64x2_t db = vsubq_f64(vld1q_f64(b + x), vsb);
    const float64x2_t lab2 = vaddq_f64(vaddq_f64(vmulq_f64(dl, dl), vmulq_f64(da, da)), vmulq_f64(db, db));
    const float64x2_t d = vaddq_f64(vsqrtq_f64(lab2), vmulq_f64(vtheta, vsqrtq_f64(dsp)));

    const float64x2_t old = vld1q_f64(best + x);
    const uint64x2_t take = vandq_u64(vcltq_f64(d, old), in_radius);
    vst1q_f64(best + x, vbslq_f64(take, d, old));
    if (vgetq_lane_u64(take, 0)) label[x] = id;
    if (vgetq_lane_u64(take, 1)) label[x + 1] = id;
  }
  detail::scalar_table.seed_row(l, a, b, x, x1, py, s, theta, radius_sq, id, best, label);
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  double s = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

}  // namespace

namespace detail {
const KernelTable neon_table{Isa::neon, &seed_row_neon, &axpy_neon, &dot_neon};
}

}  // namespace rppg::simd
