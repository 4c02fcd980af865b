// Copyright 2026 The zipar Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "zipar/simd/kernels.h"

namespace zipar::simd {

#if defined(ZIPAR_HAVE_AVX2)
const KernelTable& avx2_kernel_table();
#endif

bool cpu_has_avx2() {
#if defined(ZIPAR_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* avx2_kernels() {
#if defined(ZIPAR_HAVE_AVX2)
  if (cpu_has_avx2()) return &avx2_kernel_table();
#endif
  return nullptr;
}

namespace {

const KernelTable* detect() {
  if (const char* env = std::getenv("ZIPAR_SIMD")) {
    const std::string_view requested(env);
    if (requested == "scalar") return &scalar_kernels();
    if (requested == "avx2" && avx2_kernels() != nullptr) return avx2_kernels();
  }
  if (const KernelTable* t = avx2_kernels()) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& selected() {
  static std::atomic<const KernelTable*> table{detect()};
  return table;
}

}  // namespace

const KernelTable& active_kernels() {
  return *selected().load(std::memory_order_acquire);
}

bool select_kernels(SimdLevel level) {
  const KernelTable* table =
      level == SimdLevel::kScalar ? &scalar_kernels() : avx2_kernels();
  if (table == nullptr) return false;
  selected().store(table, std::memory_order_release);
  return true;
}

std::string_view to_string(SimdLevel level) {
  switch (level) {
    case SimdLevel::kScalar:
      return "scalar";
    case SimdLevel::kAvx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace zipar::simd
