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

#include <cmath>
#include <cstddef>

namespace zipar::simd::detail {

inline constexpr std::size_t kLanes = 8;

// Fixed reduction tree shared by all variants; see kernels.h.
inline float reduce_lanes(const float* lane) {
  const float t0 = lane[0] + lane[4];
  const float t1 = lane[1] + lane[5];
  const float t2 = lane[2] + lane[6];
  const float t3 = lane[3] + lane[7];
  const float u0 = t0 + t2;
  const float u1 = t1 + t3;
  return u0 + u1;
}

// Tail elements [start, n) land in lane (i mod 8); start is a multiple of 8.
inline void accumulate_tail(const float* a, const float* b, std::size_t start,
                            std::size_t n, float* lane) {
  for (std::size_t i = start; i < n; ++i) {
    lane[i - start] = std::fma(a[i], b[i], lane[i - start]);
  }
}

}  // namespace zipar::simd::detail
