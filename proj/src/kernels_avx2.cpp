#include "mqe/kernels.hpp"

#if defined(__x86_64__) && defined(MQE_HAVE_AVX2)
#include <immintrin.h>

#include <cmath>

namespace mqe::kernels {
namespace {

void ego_transform_avx2(const double* px, const double* py, std::size_t n, double ox,
                        double oy, double c, double s, double* out_x, double* out_y) {
  const __m256d vox = _mm256_set1_pd(ox);
  const __m256d voy = _mm256_set1_pd(oy);
  const __m256d vc = _mm256_set1_pd(c);
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d rx = _mm256_sub_pd(_mm256_loadu_pd(px + i), vox);
    const __m256d ry = _mm256_sub_pd(_mm256_loadu_pd(py + i), voy);
    const __m256d ex = _mm256_add_pd(_mm256_mul_pd(vc, rx), _mm256_mul_pd(vs, ry));
    const __m256d ey = _mm256_sub_pd(_mm256_mul_pd(vc, ry), _mm256_mul_pd(vs, rx));
    _mm256_storeu_pd(out_x + i, ex);
    _mm256_storeu_pd(out_y + i, ey);
  }
  for (; i < n; ++i) {
    const double rx = px[i] - ox;
    const double ry = py[i] - oy;
    out_x[i] = c * rx + s * ry;
    out_y[i] = c * ry - s * rx;
  }
}

void repulsion_avx2(const double* sx, const double* sy, std::size_t n_sheep,
                    const double* dx, const double* dy, std::size_t n_dogs,
                    double sense_radius, double gain, double* ax, double* ay) {
  const double inv_r = 1.0 / sense_radius;
  const __m256d vinv_r = _mm256_set1_pd(inv_r);
  const __m256d vrad = _mm256_set1_pd(sense_radius);
  const __m256d vgain = _mm256_set1_pd(gain);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n_sheep; i += 4) {
    const __m256d px = _mm256_loadu_pd(sx + i);
    const __m256d py = _mm256_loadu_pd(sy + i);
    __m256d acc_x = _mm256_loadu_pd(ax + i);
    __m256d acc_y = _mm256_loadu_pd(ay + i);
    for (std::size_t j = 0; j < n_dogs; ++j) {
      const __m256d ux = _mm256_sub_pd(px, _mm256_set1_pd(dx[j]));
      const __m256d uy = _mm256_sub_pd(py, _mm256_set1_pd(dy[j]));
      const __m256d d =
          _mm256_sqrt_pd(_mm256_add_pd(_mm256_mul_pd(ux, ux), _mm256_mul_pd(uy, uy)));
      const __m256d in_range = _mm256_and_pd(_mm256_cmp_pd(d, zero, _CMP_GT_OQ),
                                             _mm256_cmp_pd(d, vrad, _CMP_LT_OQ));
      // Out-of-range lanes divide by 1 before masking.
      const __m256d safe_d = _mm256_blendv_pd(one, d, in_range);
      const __m256d w = _mm256_mul_pd(
          vgain, _mm256_div_pd(_mm256_sub_pd(_mm256_div_pd(one, safe_d), vinv_r), safe_d));
      const __m256d add_x = _mm256_add_pd(acc_x, _mm256_mul_pd(w, ux));
      const __m256d add_y = _mm256_add_pd(acc_y, _mm256_mul_pd(w, uy));
      acc_x = _mm256_blendv_pd(acc_x, add_x, in_range);
      acc_y = _mm256_blendv_pd(acc_y, add_y, in_range);
    }
    _mm256_storeu_pd(ax + i, acc_x);
    _mm256_storeu_pd(ay + i, acc_y);
  }
  if (i < n_sheep) {
    scalar().repulsion(sx + i, sy + i, n_sheep - i, dx, dy, n_dogs, sense_radius, gain,
                       ax + i, ay + i);
  }
}

void circle_overlap_avx2(double cx, double cy, double r, const double* xs,
                         const double* ys, const double* rs, std::size_t n, double margin,
                         std::uint8_t* mask) {
  const __m256d vcx = _mm256_set1_pd(cx);
  const __m256d vcy = _mm256_set1_pd(cy);
  const __m256d vr = _mm256_set1_pd(r);
  const __m256d vm = _mm256_set1_pd(margin);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d ux = _mm256_sub_pd(_mm256_loadu_pd(xs + j), vcx);
    const __m256d uy = _mm256_sub_pd(_mm256_loadu_pd(ys + j), vcy);
    const __m256d reach = _mm256_add_pd(_mm256_add_pd(vr, _mm256_loadu_pd(rs + j)), vm);
    const __m256d d2 = _mm256_add_pd(_mm256_mul_pd(ux, ux), _mm256_mul_pd(uy, uy));
    const int bits = _mm256_movemask_pd(_mm256_cmp_pd(d2, _mm256_mul_pd(reach, reach),
                                                      _CMP_LT_OQ));
    for (int k = 0; k < 4; ++k) mask[j + k] = static_cast<std::uint8_t>((bits >> k) & 1);
  }
  if (j < n) scalar().circle_overlap(cx, cy, r, xs + j, ys + j, rs + j, n - j, margin, mask + j);
}

}  // namespace

const KernelTable* avx2() {
  static const bool supported = __builtin_cpu_supports("avx2");
  static const KernelTable table{"avx2", ego_transform_avx2, repulsion_avx2,
                                 circle_overlap_avx2};
  return supported ? &table : nullptr;
}

}  // namespace mqe::kernels

#else

namespace mqe::kernels {
const KernelTable* avx2() { return nullptr; }
}  // namespace mqe::kernels

#endif
