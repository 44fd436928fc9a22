// AVX2 + FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma; it must only be entered after the runtime dispatch has
// confirmed CPU support.

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include <cstddef>

namespace diffopt::kern::avx2 {

namespace {

inline double hsum(__m256d v) noexcept {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) noexcept {
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
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum_sq(const double* x, std::size_t n) noexcept {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double out = hsum(acc);
  for (; i < n; ++i) out += x[i] * x[i];
  return out;
}

double diff_sq(const double* a, const double* b, std::size_t n) noexcept {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(r, r, acc);
  }
  double out = hsum(acc);
  for (; i < n; ++i) {
    const double r = a[i] - b[i];
    out += r * r;
  }
  return out;
}

void ou_step(double cx, double cs, const double* s, double ce, const double* e,
             double* x, std::size_t n) noexcept {
  const __m256d vcx = _mm256_set1_pd(cx);
  const __m256d vcs = _mm256_set1_pd(cs);
  const __m256d vce = _mm256_set1_pd(ce);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_mul_pd(vcx, _mm256_loadu_pd(x + i));
    v = _mm256_fmadd_pd(vcs, _mm256_loadu_pd(s + i), v);
    v = _mm256_fmadd_pd(vce, _mm256_loadu_pd(e + i), v);
    _mm256_storeu_pd(x + i, v);
  }
  for (; i < n; ++i) x[i] = cx * x[i] + cs * s[i] + ce * e[i];
}

}  // namespace diffopt::kern::avx2

#endif  // x86
