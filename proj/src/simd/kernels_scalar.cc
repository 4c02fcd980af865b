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

#include <cmath>

#include "lanes.h"
#include "zipar/simd/kernels.h"

namespace zipar::simd {
namespace {

using detail::kLanes;

float dot_scalar(const float* a, const float* b, std::size_t n) {
  float lane[kLanes] = {};
  const std::size_t blocked = n - n % kLanes;
  for (std::size_t i = 0; i < blocked; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      lane[l] = std::fma(a[i + l], b[i + l], lane[l]);
    }
  }
  detail::accumulate_tail(a, b, blocked, n, lane);
  return detail::reduce_lanes(lane);
}

void axpy_scalar(float a, const float* x, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

void matvec_scalar(const float* m, std::size_t rows, std::size_t cols,
                   const float* x, float* out) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = dot_scalar(m + r * cols, x, cols);
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{SimdLevel::kScalar, "scalar", &dot_scalar,
                                 &axpy_scalar, &matvec_scalar};
  return table;
}

}  // namespace zipar::simd
