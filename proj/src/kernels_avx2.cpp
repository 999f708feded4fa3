#include "shapematch/kernels.hpp"

#ifdef SHAPEMATCH_HAVE_AVX2

#include <immintrin.h>

namespace shapematch::kernels::avx2 {

namespace {

// fixed reduction order so results are reproducible for a given backend
inline double reduce_add(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

inline double reduce_max(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_max_pd(lo, hi);
  const double a = _mm_cvtsd_f64(m);
  const double b = _mm_cvtsd_f64(_mm_unpackhi_pd(m, m));
  return a > b ? a : b;
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t(3);
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double s = reduce_add(acc);
  for (std::size_t i = n4; i < n; ++i) s += a[i] * b[i];
  return s;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t(3);
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = reduce_add(acc);
  for (std::size_t i = n4; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double sum(const double* x, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t(3);
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = reduce_add(acc);
  for (std::size_t i = n4; i < n; ++i) s += x[i];
  return s;
}

double max_value(const double* x, std::size_t n) {
  if (n < 4) {
    double m = x[0];
    for (std::size_t i = 1; i < n; ++i)
      if (x[i] > m) m = x[i];
    return m;
  }
  const std::size_t n4 = n & ~std::size_t(3);
  __m256d acc = _mm256_loadu_pd(x);
  for (std::size_t i = 4; i < n4; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
  double m = reduce_max(acc);
  for (std::size_t i = n4; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t(3);
  const __m256d va = _mm256_set1_pd(alpha);
  for (std::size_t i = 0; i < n4; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (std::size_t i = n4; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double* x, double alpha, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t(3);
  const __m256d va = _mm256_set1_pd(alpha);
  for (std::size_t i = 0; i < n4; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (std::size_t i = n4; i < n; ++i) x[i] *= alpha;
}

double weighted_sqnorm(const double* x, const double* w, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t(3);
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    acc = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w + i), xv), xv, acc);
  }
  double s = reduce_add(acc);
  for (std::size_t i = n4; i < n; ++i) s += w[i] * x[i] * x[i];
  return s;
}

}  // namespace shapematch::kernels::avx2

#endif  // SHAPEMATCH_HAVE_AVX2
