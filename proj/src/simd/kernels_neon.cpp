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

#include <arm_neon.h>

#include "oodseg/simd.hpp"

namespace oodseg::simd {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), a, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void row_max_min_neon(const double* data, std::size_t rows, std::size_t cols, double* row_max,
                      double* row_min) {
  std::size_t r = 0;
  for (; r + 2 <= rows; r += 2) {
    const double* r0 = data + r * cols;
    const double* r1 = r0 + cols;
    float64x2_t mx = {r0[0], r1[0]};
    float64x2_t mn = mx;
    for (std::size_t c = 1; c < cols; ++c) {
      const float64x2_t v = {r0[c], r1[c]};
      mx = vmaxq_f64(v, mx);
      mn = vminq_f64(v, mn);
    }
    vst1q_f64(row_max + r, mx);
    vst1q_f64(row_min + r, mn);
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
const Kernels kNeonKernels{Level::kNeon, dot_neon, axpy_neon, row_max_min_neon};
}  // namespace detail

}  // namespace oodseg::simd
