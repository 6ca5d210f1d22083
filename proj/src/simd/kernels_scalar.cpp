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

#include "oodseg/simd.hpp"

namespace oodseg::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void row_max_min_scalar(const double* data, std::size_t rows, std::size_t cols, double* row_max,
                        double* row_min) {
  for (std::size_t r = 0; r < rows; ++r) {
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
const Kernels kScalarKernels{Level::kScalar, dot_scalar, axpy_scalar, row_max_min_scalar};
}  // namespace detail

}  // namespace oodseg::simd
