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

#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops. Every kernel has a scalar reference version and
// optional AVX2 / NEON versions; one table is selected at runtime from CPU
// features. OODSEG_SIMD=scalar|avx2|neon in the environment overrides the
// detected level at first use.
namespace oodseg::simd {

enum class Level { kScalar, kAvx2, kNeon };

struct Kernels {
  Level level;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // Max and min of each of `rows` contiguous rows of length `cols`.
  void (*row_max_min)(const double* data, std::size_t rows, std::size_t cols, double* row_max,
                      double* row_min);
};

std::string_view level_name(Level level);
bool level_supported(Level level);
Level detected_level();

// Active kernel table; thread-safe after first call.
const Kernels& kernels();
// Kernel table for a specific level; throws ArgumentError if unsupported.
const Kernels& kernels_for(Level level);
// Replaces the active level. Not meant to race with running kernels.
void set_level(Level level);

namespace detail {
extern const Kernels kScalarKernels;
#if defined(OODSEG_HAVE_AVX2)
extern const Kernels kAvx2Kernels;
#endif
#if defined(OODSEG_HAVE_NEON)
extern const Kernels kNeonKernels;
#endif
}  // namespace detail

}  // namespace oodseg::simd
