#include "dmd/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define DMD_HAVE_AVX2_KERNELS 1
#endif

namespace dmd::simd {

#ifdef DMD_HAVE_AVX2_KERNELS
namespace {

// No _mm256_fmadd_pd here: the multiply and add are rounded separately so the
// results match the scalar loops exactly.

__attribute__((target("avx2"))) void axpy_avx2(double a, const double* x, double* y,
                                                std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d vy = _mm256_loadu_pd(y + k);
    vy = _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + k)));
    _mm256_storeu_pd(y + k, vy);
  }
  for (; k < n; ++k) y[k] += a * x[k];
}

__attribute__((target("avx2"))) void add_scaled_diff_avx2(double w, const double* xi,
                                                           const double* xj, double* out,
                                                           std::size_t n) {
  const __m256d vw = _mm256_set1_pd(w);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(xi + k), _mm256_loadu_pd(xj + k));
    __m256d vo = _mm256_loadu_pd(out + k);
    vo = _mm256_add_pd(vo, _mm256_mul_pd(vw, diff));
    _mm256_storeu_pd(out + k, vo);
  }
  for (; k < n; ++k) out[k] += w * (xi[k] - xj[k]);
}

__attribute__((target("avx2"))) void sub_avx2(const double* a, const double* b, double* out,
                                               std::size_t n) {
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    _mm256_storeu_pd(out + k, _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k)));
  }
  for (; k < n; ++k) out[k] = a[k] - b[k];
}

__attribute__((target("avx2"))) void scale_avx2(double a, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    _mm256_storeu_pd(x + k, _mm256_mul_pd(va, _mm256_loadu_pd(x + k)));
  }
  for (; k < n; ++k) x[k] *= a;
}

__attribute__((target("avx2"))) double dot_avx2(const double* x, const double* y,
                                                 std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k)));
    acc1 = _mm256_add_pd(acc1,
                         _mm256_mul_pd(_mm256_loadu_pd(x + k + 4), _mm256_loadu_pd(y + k + 4)));
  }
  for (; k + 4 <= n; k += 4) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k)));
  }
  acc0 = _mm256_add_pd(acc0, acc1);
  const __m128d lo = _mm256_castpd256_pd128(acc0);
  const __m128d hi = _mm256_extractf128_pd(acc0, 1);
  __m128d s = _mm_add_pd(lo, hi);
  s = _mm_add_sd(s, _mm_unpackhi_pd(s, s));
  double total = _mm_cvtsd_f64(s);
  for (; k < n; ++k) total += x[k] * y[k];
  return total;
}

}  // namespace

const KernelTable& avx2_kernels() noexcept {
  static const KernelTable table{axpy_avx2, add_scaled_diff_avx2, sub_avx2, scale_avx2,
                                 dot_avx2};
  return table;
}

#else

const KernelTable& avx2_kernels() noexcept { return scalar_kernels(); }

#endif

}  // namespace dmd::simd
