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

#include "zipar/scheduler.h"

#include <algorithm>
#include <limits>

#include "json.hpp"
#include "zipar/errors.h"

namespace zipar {

void WindowPolicy::validate(const GridShape& shape) const {
  if (size < 1 || size > shape.cols) {
    throw ConfigError(std::string(kind == Kind::kFixed ? "window" : "minimum window") +
                      " must lie in [1, " + std::to_string(shape.cols) +
                      "], got " + std::to_string(size));
  }
}

bool eligible(const DecodeState& state, int window, int row, int col) {
  if (row == 0) return true;
  const int last = std::min(col + window, state.shape().cols) - 1;
  // Contiguous-prefix invariant: the required set is decoded iff its last
  // element is.
  return state.decoded({row - 1, last});
}

std::optional<TokenId> row_start_input(const DecodeState& state, int row,
                                       std::span<const TokenId> prefix) {
  const GridShape& shape = state.shape();
  if (row == 0) {
    if (prefix.empty()) return std::nullopt;
    return prefix.back();
  }
  if (shape.eor) return *shape.eor_token_id;
  const Position target{row - 1, shape.cols - 1};
  if (auto v = state.value(target)) return *v;

  std::optional<TokenId> best;
  long best_d2 = std::numeric_limits<long>::max();
  // Row-major scan with strict improvement gives the (row, col) tie-break.
  for (int i = 0; i < shape.rows; ++i) {
    for (int j = 0; j < state.frontier(i); ++j) {
      const long di = i - target.row;
      const long dj = j - target.col;
      const long d2 = di * di + dj * dj;
      if (d2 < best_d2) {
        best_d2 = d2;
        best = state.at({i, j});
      }
    }
  }
  if (!best) throw DomainError("no decoded token to derive a placeholder from");
  return best;
}

SchedulePlan plan_fixed(const GridShape& shape, int window) {
  shape.validate();
  WindowPolicy::fixed(window).validate(shape);
  SchedulePlan plan;
  plan.rows = shape.rows;
  plan.cols = shape.cols;
  plan.window = window;
  plan.decode_step.resize(static_cast<std::size_t>(shape.image_tokens()));
  for (int i = 0; i < shape.rows; ++i) {
    for (int j = 0; j < shape.cols; ++j) {
      plan.decode_step[static_cast<std::size_t>(i) * shape.cols + j] =
          static_cast<std::int64_t>(i) * window + j;
    }
  }
  plan.total_steps = static_cast<std::int64_t>(shape.rows - 1) * window + shape.cols;
  plan.max_batch_width = std::min((shape.cols + window - 1) / window, shape.rows);
  return plan;
}

SchedulePlan simulate_fixed(const GridShape& shape, int window) {
  shape.validate();
  WindowPolicy::fixed(window).validate(shape);
  DecodeState state(shape);
  SchedulePlan plan;
  plan.rows = shape.rows;
  plan.cols = shape.cols;
  plan.window = window;
  plan.decode_step.assign(static_cast<std::size_t>(shape.image_tokens()), -1);

  // Rows in [first_open, next_row) are started and not done.
  int first_open = 0;
  int next_row = 0;
  std::vector<Position> lanes;
  std::int64_t step = 0;
  while (first_open < shape.rows) {
    lanes.clear();
    for (int i = first_open; i < next_row; ++i) {
      const int j = state.frontier(i);
      if (eligible(state, window, i, j)) lanes.push_back({i, j});
    }
    if (next_row < shape.rows && eligible(state, window, next_row, 0)) {
      if (shape.eor && next_row > 0) {
        state.commit({next_row - 1, shape.cols}, *shape.eor_token_id);
      }
      state.set_row_state(next_row, RowState::kActive);
      lanes.push_back({next_row, 0});
      ++next_row;
    }
    if (lanes.empty()) {
      throw InternalError("fixed-window schedule deadlocked at step " +
                          std::to_string(step) + "\n" + state.dump());
    }
    for (Position p : lanes) {
      state.commit(p, 0);
      plan.decode_step[static_cast<std::size_t>(p.row) * shape.cols + p.col] = step;
      if (state.frontier(p.row) == shape.cols) state.set_row_state(p.row, RowState::kDone);
    }
    plan.max_batch_width = std::max(plan.max_batch_width, static_cast<int>(lanes.size()));
    while (first_open < next_row && state.row_state(first_open) == RowState::kDone) {
      ++first_open;
    }
    ++step;
  }
  plan.total_steps = step;
  return plan;
}

std::string to_json(const SchedulePlan& plan) {
  nlohmann::ordered_json doc;
  doc["rows"] = plan.rows;
  doc["cols"] = plan.cols;
  doc["window"] = plan.window;
  doc["total_steps"] = plan.total_steps;
  doc["max_batch_width"] = plan.max_batch_width;
  auto steps = nlohmann::json::array();
  for (int i = 0; i < plan.rows; ++i) {
    auto row = nlohmann::json::array();
    for (int j = 0; j < plan.cols; ++j) row.push_back(plan.step(i, j));
    steps.push_back(std::move(row));
  }
  doc["decode_step"] = std::move(steps);
  return doc.dump();
}

}  // namespace zipar
