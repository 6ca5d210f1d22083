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

#include <atomic>
#include <cstdlib>
#include <string>

#include "oodseg/errors.hpp"
#include "oodseg/simd.hpp"

namespace oodseg::simd {
namespace {

std::atomic<const Kernels*> g_active{nullptr};

const Kernels* initial_table() {
  Level level = detected_level();
  if (const char* env = std::getenv("OODSEG_SIMD")) {
    const std::string want(env);
    if (want == "scalar") level = Level::kScalar;
    else if (want == "avx2" && level_supported(Level::kAvx2)) level = Level::kAvx2;
    else if (want == "neon" && level_supported(Level::kNeon)) level = Level::kNeon;
  }
  return &kernels_for(level);
}

}  // namespace

std::string_view level_name(Level level) {
  switch (level) {
    case Level::kScalar: return "scalar";
    case Level::kAvx2: return "avx2";
    case Level::kNeon: return "neon";
  }
  return "unknown";
}

bool level_supported(Level level) {
  switch (level) {
    case Level::kScalar:
      return true;
    case Level::kAvx2:
#if defined(OODSEG_HAVE_AVX2)
      __builtin_cpu_init();
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Level::kNeon:
#if defined(OODSEG_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Level detected_level() {
  if (level_supported(Level::kAvx2)) return Level::kAvx2;
  if (level_supported(Level::kNeon)) return Level::kNeon;
  return Level::kScalar;
}

const Kernels& kernels_for(Level level) {
  if (!level_supported(level)) {
    throw ArgumentError("SIMD level " + std::string(level_name(level)) + " not supported here");
  }
  switch (level) {
#if defined(OODSEG_HAVE_AVX2)
    case Level::kAvx2: return detail::kAvx2Kernels;
#endif
#if defined(OODSEG_HAVE_NEON)
    case Level::kNeon: return detail::kNeonKernels;
#endif
    default: return detail::kScalarKernels;
  }
}

const Kernels& kernels() {
  const Kernels* table = g_active.load(std::memory_order_acquire);
  if (table == nullptr) {
    const Kernels* fresh = initial_table();
    g_active.compare_exchange_strong(table, fresh, std::memory_order_acq_rel);
    table = g_active.load(std::memory_order_acquire);
  }
  return *table;
}

void set_level(Level level) { g_active.store(&kernels_for(level), std::memory_order_release); }

}  // namespace oodseg::simd
