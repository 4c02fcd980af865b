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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zipar/grid.h"

namespace zipar {

struct WindowPolicy {
  enum class Kind { kFixed, kAdaptive };

  Kind kind = Kind::kFixed;
  // Fixed window s, or the adaptive minimum window.
  int size = 1;

  static WindowPolicy fixed(int s) { return {Kind::kFixed, s}; }
  static WindowPolicy adaptive(int s_min) { return {Kind::kAdaptive, s_min}; }

  // Throws ConfigError unless 1 <= size <= cols.
  void validate(const GridShape& shape) const;
};

struct SchedulePlan {
  int rows = 0;
  int cols = 0;
  int window = 0;
  // Row-major step index of every image token.
  std::vector<std::int64_t> decode_step;
  std::int64_t total_steps = 0;
  int max_batch_width = 0;

  std::int64_t step(int row, int col) const {
    return decode_step[static_cast<std::size_t>(row) * cols + col];
  }
  bool operator==(const SchedulePlan&) const = default;
};

// Whether x(row, col) may be generated: the previous-row tokens
// x(row-1, k) for col <= k < min(col + window, cols) are all decoded.
// Row 0 is always eligible. The window is truncated at the row end.
bool eligible(const DecodeState& state, int window, int row, int col);

// Value fed at the row-terminal input slot (row-1, last) when starting a row:
// the EOR id for EOR grids, the true x(row-1, cols-1) when decoded,
// otherwise the nearest decoded image token in Euclidean grid distance (ties:
// smaller row, then smaller column). Placeholders are never written into the
// decode state. For row 0 the input is the last prefix token, or nullopt
// when there is no prefix (the start slot).
std::optional<TokenId> row_start_input(const DecodeState& state, int row,
                                       std::span<const TokenId> prefix = {});

// Closed form: step(i, j) = i*s + j, total (rows-1)*s + cols, width
// min(ceil(cols/s), rows). EOR slots are pre-inserted and take no step.
SchedulePlan plan_fixed(const GridShape& shape, int window);

// Greedy event simulation over a private decode state: at every step each
// row decodes its frontier token iff eligible under the state at the start
// of the step. Throws InternalError with a state dump on deadlock.
SchedulePlan simulate_fixed(const GridShape& shape, int window);

std::string to_json(const SchedulePlan& plan);

}  // namespace zipar
