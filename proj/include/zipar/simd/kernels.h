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

#pragma once

// Float32 inner-loop kernels used by the toy transformer backend.
//
// Every variant follows the same summation order so that results are
// bit-identical across variants:
//
//   dot(a, b, n): eight lane accumulators, element i is fused-multiply-added
//   into lane (i mod 8) in increasing i. Lanes are then reduced as
//     t_l = lane_l + lane_{l+4}      (l = 0..3)
//     u_l = t_l + t_{l+2}            (l = 0..1)
//     result = u_0 + u_1
//   axpy(a, x, y, n): y[i] = fma(a, x[i], y[i]).
//   matvec(m, rows, cols, x, out): out[r] = dot(m + r*cols, x, cols).
//
// The scalar variant is the reference; SIMD variants are selected at runtime
// and are equivalence-tested against it.

#include <cstddef>
#include <span>
#include <string_view>

namespace zipar::simd {

enum class SimdLevel { kScalar, kAvx2 };

struct KernelTable {
  SimdLevel level;
  const char* name;
  float (*dot)(const float* a, const float* b, std::size_t n);
  void (*axpy)(float a, const float* x, float* y, std::size_t n);
  void (*matvec)(const float* m, std::size_t rows, std::size_t cols,
                 const float* x, float* out);
};

const KernelTable& scalar_kernels();

// Null when the variant was not compiled in or the CPU lacks the features.
const KernelTable* avx2_kernels();

// True when the running CPU supports AVX2 and FMA.
bool cpu_has_avx2();

// Kernels used by the library. Resolved once: the ZIPAR_SIMD environment
// variable ("scalar" or "avx2") overrides CPU detection.
const KernelTable& active_kernels();

// Forces a variant for the rest of the process. Returns false (and leaves
// the selection unchanged) when the variant is unavailable.
bool select_kernels(SimdLevel level);

std::string_view to_string(SimdLevel level);

inline float dot(std::span<const float> a, std::span<const float> b) {
  return active_kernels().dot(a.data(), b.data(), a.size());
}

inline void axpy(float a, std::span<const float> x, std::span<float> y) {
  active_kernels().axpy(a, x.data(), y.data(), x.size());
}

// out = m * x, m row-major with out.size() rows and x.size() columns.
inline void matvec(std::span<const float> m, std::span<const float> x,
                   std::span<float> out) {
  active_kernels().matvec(m.data(), out.size(), x.size(), x.data(),
                          out.data());
}

}  // namespace zipar::simd
