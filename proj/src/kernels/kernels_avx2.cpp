#include "kernels_detail.hpp"

#if PWAPASS_X86

#include <immintrin.h>

namespace pwapass::kernels::detail {

namespace {
inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}
}  // namespace

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scal_avx2(double alpha, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= alpha;
}

void rank1_avx2(double* m, std::size_t rows, std::size_t cols, double alpha,
                const double* x, const double* y) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double ax = alpha * x[i];
    const __m256d vax = _mm256_set1_pd(ax);
    double* row = m + i * cols;
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
      __m256d vr = _mm256_loadu_pd(row + j);
      vr = _mm256_fmadd_pd(vax, _mm256_loadu_pd(y + j), vr);
      _mm256_storeu_pd(row + j, vr);
    }
    for (; j < cols; ++j) row[j] += ax * y[j];
  }
}

void matmul_avx2(const double* a, const double* b, double* c, std::size_t m,
                 std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) _mm256_storeu_pd(crow + j, _mm256_setzero_pd());
    for (; j < n; ++j) crow[j] = 0.0;
    for (std::size_t l = 0; l < k; ++l) {
      const double ail = a[i * k + l];
      const __m256d vail = _mm256_set1_pd(ail);
      const double* brow = b + l * n;
      j = 0;
      for (; j + 4 <= n; j += 4) {
        __m256d vc = _mm256_loadu_pd(crow + j);
        vc = _mm256_fmadd_pd(vail, _mm256_loadu_pd(brow + j), vc);
        _mm256_storeu_pd(crow + j, vc);
      }
      for (; j < n; ++j) crow[j] += ail * brow[j];
    }
  }
}

}  // namespace pwapass::kernels::detail

#endif  // PWAPASS_X86
