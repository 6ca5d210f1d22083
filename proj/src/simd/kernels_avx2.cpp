/* Copyright 2026 The oodseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "oodseg/simd.hpp"

namespace oodseg::simd {
namespace {

double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// Four rows per iteration; lane j walks row r+j with a strided gather.
void row_max_min_avx2(const double* data, std::size_t rows, std::size_t cols, double* row_max,
                      double* row_min) {
  const auto stride = static_cast<long long>(cols);
  const __m256i offsets = _mm256_set_epi64x(3 * stride, 2 * stride, stride, 0);
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    const double* base = data + r * cols;
    __m256d mx = _mm256_i64gather_pd(base, offsets, 8);
    __m256d mn = mx;
    for (std::size_t c = 1; c < cols; ++c) {
      const __m256d v = _mm256_i64gather_pd(base + c, offsets, 8);
      mx = _mm256_max_pd(v, mx);
      mn = _mm256_min_pd(v, mn);
    }
    _mm256_storeu_pd(row_max + r, mx);
    _mm256_storeu_pd(row_min + r, mn);
  }
  for (; r < rows; ++r) {
    const double* row = data + r * cols;
    double mx = row[0];
    double mn = row[0];
    for (std::size_t c = 1; c < cols; ++c) {
      mx = row[c] > mx ? row[c] : mx;
      mn = row[c] < mn ? row[c] : mn;
    }
    row_max[r] = mx;
    row_min[r] = mn;
  }
}

}  // namespace

namespace detail {
const Kernels kAvx2Kernels{Level::kAvx2, dot_avx2, axpy_avx2, row_max_min_avx2};
}  // namespace detail

}  // namespace oodseg::simd
