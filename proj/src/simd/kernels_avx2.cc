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

// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include "lanes.h"
#include "zipar/simd/kernels.h"

namespace zipar::simd {
namespace {

using detail::kLanes;

inline __m256 dot_blocks(const float* a, const float* b, std::size_t blocked) {
  __m256 acc = _mm256_setzero_ps();
  for (std::size_t i = 0; i < blocked; i += kLanes) {
    acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc);
  }
  return acc;
}

float dot_avx2(const float* a, const float* b, std::size_t n) {
  const std::size_t blocked = n - n % kLanes;
  alignas(32) float lane[kLanes];
  _mm256_store_ps(lane, dot_blocks(a, b, blocked));
  detail::accumulate_tail(a, b, blocked, n, lane);
  return detail::reduce_lanes(lane);
}

void axpy_avx2(float a, const float* x, float* y, std::size_t n) {
  const __m256 va = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i),
                                            _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

// Four rows at a time share the loads of x.
void matvec_avx2(const float* m, std::size_t rows, std::size_t cols,
                 const float* x, float* out) {
  const std::size_t blocked = cols - cols % kLanes;
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    const float* m0 = m + (r + 0) * cols;
    const float* m1 = m + (r + 1) * cols;
    const float* m2 = m + (r + 2) * cols;
    const float* m3 = m + (r + 3) * cols;
    __m256 a0 = _mm256_setzero_ps();
    __m256 a1 = _mm256_setzero_ps();
    __m256 a2 = _mm256_setzero_ps();
    __m256 a3 = _mm256_setzero_ps();
    for (std::size_t i = 0; i < blocked; i += kLanes) {
      const __m256 vx = _mm256_loadu_ps(x + i);
      a0 = _mm256_fmadd_ps(_mm256_loadu_ps(m0 + i), vx, a0);
      a1 = _mm256_fmadd_ps(_mm256_loadu_ps(m1 + i), vx, a1);
      a2 = _mm256_fmadd_ps(_mm256_loadu_ps(m2 + i), vx, a2);
      a3 = _mm256_fmadd_ps(_mm256_loadu_ps(m3 + i), vx, a3);
    }
    alignas(32) float lane[4][kLanes];
    _mm256_store_ps(lane[0], a0);
    _mm256_store_ps(lane[1], a1);
    _mm256_store_ps(lane[2], a2);
    _mm256_store_ps(lane[3], a3);
    const float* rows4[4] = {m0, m1, m2, m3};
    for (int k = 0; k < 4; ++k) {
      detail::accumulate_tail(rows4[k], x, blocked, cols, lane[k]);
      out[r + k] = detail::reduce_lanes(lane[k]);
    }
  }
  for (; r < rows; ++r) out[r] = dot_avx2(m + r * cols, x, cols);
}

}  // namespace

const KernelTable& avx2_kernel_table() {
  static const KernelTable table{SimdLevel::kAvx2, "avx2", &dot_avx2,
                                 &axpy_avx2, &matvec_avx2};
  return table;
}

}  // namespace zipar::simd
