// AVX2 variants. Compiled with -mavx2 only; the table is handed out solely
// when the running CPU reports AVX2 support.

#include <immintrin.h>

#include <cmath>

#include "kernels_internal.hpp"

namespace opttree::simd {
namespace {

// Folds the tail into the lane array so the combination order matches the
// scalar reference.
double finish_lanes(__m256d acc, const double* tail, std::size_t tail_len) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  for (std::size_t j = 0; j < tail_len; ++j) lane[j] += tail[j];
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  return finish_lanes(acc, x + i, n - i);
}

double max_avx2(const double* x, std::size_t n) {
  double m = x[0];
  std::size_t i = 0;
  if (n >= 4) {
    __m256d acc = _mm256_loadu_pd(x);
    for (i = 4; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
    alignas(32) double lane[4];
    _mm256_store_pd(lane, acc);
    m = lane[0];
    for (int j = 1; j < 4; ++j) m = lane[j] > m ? lane[j] : m;
  }
  for (; i < n; ++i) m = x[i] > m ? x[i] : m;
  return m;
}

std::size_t argmax_avx2(const double* x, std::size_t n) {
  if (n == 0) return 0;
  const double m = max_avx2(x, n);
  const __m256d target = _mm256_set1_pd(m);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const int hits = _mm256_movemask_pd(
        _mm256_cmp_pd(_mm256_loadu_pd(x + i), target, _CMP_EQ_OQ));
    if (hits != 0) return i + static_cast<std::size_t>(__builtin_ctz(hits));
  }
  for (; i < n; ++i) {
    if (x[i] == m) return i;
  }
  return 0;
}

double min_avx2(const double* x, std::size_t n) {
  if (n == 0) return 0.0;
  double m = x[0];
  std::size_t i = 0;
  if (n >= 4) {
    __m256d acc = _mm256_loadu_pd(x);
    for (i = 4; i + 4 <= n; i += 4) acc = _mm256_min_pd(acc, _mm256_loadu_pd(x + i));
    alignas(32) double lane[4];
    _mm256_store_pd(lane, acc);
    m = lane[0];
    for (int j = 1; j < 4; ++j) m = lane[j] < m ? lane[j] : m;
  }
  for (; i < n; ++i) m = x[i] < m ? x[i] : m;
  return m;
}

void scale_avx2(const double* x, std::size_t n, double factor, double* out) {
  const __m256d f = _mm256_set1_pd(factor);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), f));
  }
  for (; i < n; ++i) out[i] = x[i] * factor;
}

void divide_avx2(double* x, std::size_t n, double divisor) {
  const __m256d d = _mm256_set1_pd(divisor);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_div_pd(_mm256_loadu_pd(x + i), d));
  }
  for (; i < n; ++i) x[i] = x[i] / divisor;
}

void mix_avx2(double a, const double* x, double b, const double* y,
              std::size_t n, double* out) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d ax = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    const __m256d by = _mm256_mul_pd(vb, _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(ax, by));
  }
  for (; i < n; ++i) {
    const double ax = a * x[i];
    const double by = b * y[i];
    out[i] = ax + by;
  }
}

double l1_avx2(const double* x, const double* y, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign, d));
  }
  double tail[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t j = 0; i + j < n; ++j) tail[j] = std::fabs(x[i + j] - y[i + j]);
  return finish_lanes(acc, tail, n - i);
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{
      Isa::kAvx2, sum_avx2,    argmax_avx2, min_avx2,
      scale_avx2, divide_avx2, mix_avx2,    l1_avx2,
  };
  return table;
}

}  // namespace opttree::simd
