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

#include "zipar/analysis.h"

#include <cstdio>
#include <iomanip>
#include <sstream>

#include "zipar/errors.h"
#include "zipar/scheduler.h"
#include "zipar/toy_transformer.h"

namespace zipar {

int min_window_for_mass(const AttentionRecord& rec, const GridShape& shape, double q) {
  if (!(q > 0.0 && q < 1.0)) {
    throw DomainError("retained fraction must lie in (0, 1)");
  }
  if (rec.query.col != 0 || rec.query.row < 1 || rec.query.row >= shape.rows) {
    throw DomainError("attention record is not a row-start query on row >= 1");
  }
  if (static_cast<std::int64_t>(rec.mass.size()) < shape.raster_length()) {
    throw DomainError("attention record is shorter than the raster");
  }
  const int i = rec.query.row;
  // tail[s] = mass on x(i-1, k) for k >= s.
  std::vector<double> tail(static_cast<std::size_t>(shape.cols) + 1, 0.0);
  for (int k = shape.cols - 1; k >= 0; --k) {
    tail[k] = tail[k + 1] + rec.mass[raster_index(shape, {i - 1, k})];
  }
  const double budget = 1.0 - q;
  for (int s = 1; s < shape.cols; ++s) {
    if (tail[s] <= budget) return s;
  }
  return shape.cols;
}

std::vector<AttentionRecord> collect_attention(const ModelBackend& backend,
                                               const GridShape& shape,
                                               std::uint64_t seed,
                                               const GenerationOptions& options) {
  const auto* toy = dynamic_cast<const ToyTransformer*>(&backend);
  if (toy == nullptr) {
    throw UnsupportedError("backend '" + backend.name() + "' does not expose attention");
  }
  std::vector<AttentionRecord> records;
  GenerationOptions run = options;
  run.observer = [&](const StepView& view) {
    for (const Query& q : view.queries) {
      if (q.pos.col != 0 || q.pos.row == 0) continue;
      std::vector<double> slots;
      toy->query_with_attention(view.cache, view.state, q, view.condition, slots);
      AttentionRecord rec;
      rec.query = q.pos;
      rec.start_mass = slots[0];
      rec.mass.assign(slots.begin() + 1, slots.end());
      records.push_back(std::move(rec));
    }
    if (options.observer) options.observer(view);
  };
  generate_ntp(shape, backend, run, seed);
  return records;
}

std::vector<StepTableRow> step_table(const std::vector<std::pair<int, int>>& grids,
                                     const std::vector<int>& windows, bool eor) {
  std::vector<StepTableRow> out;
  for (const auto& [h, w] : grids) {
    const GridShape shape = make_shape(h, w, 2, eor);
    for (int s : windows) {
      if (s < 1 || s > w) continue;
      StepTableRow row;
      row.rows = h;
      row.cols = w;
      row.window = s;
      row.eor = eor;
      row.fixed_steps = plan_fixed(shape, s).total_steps;
      row.ntp_steps = ntp_step_count(shape);
      row.reduction_pct = 100.0 * (1.0 - static_cast<double>(row.fixed_steps) /
                                             static_cast<double>(row.ntp_steps));
      out.push_back(row);
    }
  }
  return out;
}

std::string step_table_csv(const std::vector<StepTableRow>& table) {
  std::string out = "rows,cols,window,eor,fixed_steps,ntp_steps,reduction_pct\n";
  char buf[128];
  for (const StepTableRow& r : table) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%lld,%lld,%.1f\n", r.rows, r.cols,
                  r.window, r.eor ? 1 : 0, static_cast<long long>(r.fixed_steps),
                  static_cast<long long>(r.ntp_steps), r.reduction_pct);
    out += buf;
  }
  return out;
}

std::string step_table_text(const std::vector<StepTableRow>& table) {
  std::ostringstream os;
  os << std::setw(6) << "grid" << std::setw(5) << "eor" << std::setw(8) << "window"
     << std::setw(8) << "steps" << std::setw(8) << "ntp" << std::setw(11) << "reduction"
     << '\n';
  for (const StepTableRow& r : table) {
    const std::string grid = std::to_string(r.rows) + "x" + std::to_string(r.cols);
    char pct[32];
    std::snprintf(pct, sizeof pct, r.reduction_pct > 0.0 ? "-%.1f%%" : "%.1f%%", r.reduction_pct);
    os << std::setw(6) << grid << std::setw(5) << (r.eor ? "yes" : "no") << std::setw(8)
       << r.window << std::setw(8) << r.fixed_steps << std::setw(8) << r.ntp_steps
       << std::setw(11) << pct << '\n';
  }
  return os.str();
}

}  // namespace zipar
