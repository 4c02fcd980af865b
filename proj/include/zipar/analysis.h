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

// Attention-locality measurement and step-count tables.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "zipar/engine.h"
#include "zipar/grid.h"
#include "zipar/model.h"

namespace zipar {

struct AttentionRecord {
  Position query;
  // Head-averaged final-layer attention over raster indices (prefix
  // included); zero where the query cannot attend.
  std::vector<double> mass;
  // Weight on the start slot, which has no raster index.
  double start_mass = 0.0;
};

// Smallest s in [1, cols] whose excluded set {x(i-1, k) : k >= s} carries at
// most 1 - q of the record's mass; cols when nothing smaller suffices.
// Requires a row-start query on row >= 1 and 0 < q < 1.
int min_window_for_mass(const AttentionRecord& rec, const GridShape& shape, double q);

// NTP generation on the toy transformer, recording the attention row of
// every row-start query (rows 1..rows-1) as it is decoded. Throws
// UnsupportedError for backends that do not expose attention.
std::vector<AttentionRecord> collect_attention(const ModelBackend& backend,
                                               const GridShape& shape,
                                               std::uint64_t seed,
                                               const GenerationOptions& options = {});

struct StepTableRow {
  int rows = 0;
  int cols = 0;
  int window = 0;
  bool eor = false;
  std::int64_t fixed_steps = 0;
  std::int64_t ntp_steps = 0;
  // 1 - fixed / ntp, in percent.
  double reduction_pct = 0.0;
};

// Every (grid, window) with window <= cols, in input order.
std::vector<StepTableRow> step_table(const std::vector<std::pair<int, int>>& grids,
                                     const std::vector<int>& windows, bool eor);

std::string step_table_csv(const std::vector<StepTableRow>& table);
std::string step_table_text(const std::vector<StepTableRow>& table);

}  // namespace zipar
