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

// Generation orchestration for next-token prediction (NTP), fixed-window and
// adaptive-window parallel decoding over a pluggable backend.
//
// One engine step is one batched forward pass, whatever its lane count. Every
// lane of a step sees the decode state as it was at the start of the step;
// tokens sampled in the step are committed afterwards in raster order. Each
// row samples from its own random stream, so schedules that keep per-row
// draw order produce identical tokens.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zipar/grid.h"
#include "zipar/model.h"
#include "zipar/sampler.h"

namespace zipar {

enum class DecodeMode { kNtp, kFixed, kAdaptive };

std::string_view to_string(DecodeMode mode);
DecodeMode parse_mode(std::string_view name);

enum class StepEvent { kDecode, kProbe, kVerifyAccept, kVerifyReject, kPreInsert };

std::string_view to_string(StepEvent event);

struct StepEntry {
  Position pos;
  StepEvent event = StepEvent::kDecode;
  // Acceptance ratio for verify events, NaN otherwise.
  double ratio = std::numeric_limits<double>::quiet_NaN();
  // Window of the probe/verify for row-start events, 0 otherwise.
  int window = 0;
};

struct StepRecord {
  std::vector<StepEntry> entries;
  // Query lanes of the forward pass (pre-inserted EOR tokens take none).
  int lanes = 0;
};

struct StepLog {
  std::vector<StepRecord> steps;
  std::vector<std::int64_t> row_start_step;
};

struct AcceptanceStats {
  std::int64_t probes = 0;
  std::int64_t accepts = 0;
  std::int64_t rejects = 0;
  // Mean accepted window over verify-accepts; 0 when there were none.
  double mean_window_at_accept = 0.0;
};

// Invoked after every forward pass with the pre-step state and the
// conditional-context logits.
struct StepView {
  std::int64_t step;
  const DecodeState& state;
  const ContextCache& cache;
  std::span<const Query> queries;
  std::span<const LogitVector> logits;
  const Conditioning& condition;
};
using StepObserver = std::function<void(const StepView&)>;

struct GenerationOptions {
  SamplerConfig sampler;
  // Conditioning prefix; its length must equal the shape's prefix_len.
  std::vector<TokenId> prefix;
  // Keep the sampling distribution of every image token.
  bool record_distributions = false;
  // Check decode-state invariants after every step.
  bool check_invariants = true;
  StepObserver observer;
};

struct GenerationResult {
  GridShape shape;
  DecodeMode mode = DecodeMode::kNtp;
  int window = 0;
  std::uint64_t seed = 0;
  TokenGrid grid;
  std::int64_t steps = 0;
  StepLog step_log;
  AcceptanceStats stats;
  int max_lanes = 0;
  double wall_seconds = 0.0;
  // Row-major, one per image token; empty unless requested. For adaptive row
  // starts this is the verifying distribution the accepted token follows.
  std::vector<ProbabilityVector> distributions;

  double reduction_vs_ntp() const;
};

// Runs one generation. `window` is the fixed window s or the adaptive s_min,
// ignored for NTP.
GenerationResult generate(const GridShape& shape, DecodeMode mode, int window,
                          const ModelBackend& backend,
                          const GenerationOptions& options, std::uint64_t seed);

GenerationResult generate_ntp(const GridShape& shape, const ModelBackend& backend,
                              const GenerationOptions& options, std::uint64_t seed);
GenerationResult generate_fixed(const GridShape& shape, int window,
                                const ModelBackend& backend,
                                const GenerationOptions& options,
                                std::uint64_t seed);

// Step log document: seed, mode, window, steps, lanes per step, accepts,
// rejects, per-row start step and per-step events.
std::string step_log_json(const GenerationResult& result);

// One-line human summary.
std::string summary_line(const GenerationResult& result);

// Sampling distributions of every image token of `grid` under full raster
// context (teacher forcing), with the same sampler pipeline.
std::vector<ProbabilityVector> full_context_distributions(
    const GridShape& shape, const TokenGrid& grid, const ModelBackend& backend,
    const GenerationOptions& options);

struct EquivalenceRow {
  DecodeMode mode = DecodeMode::kFixed;
  int window = 0;
  std::uint64_t seed = 0;
  std::int64_t steps = 0;
  std::int64_t ntp_steps = 0;
  // Fraction of image tokens equal to the NTP run with the same seed.
  double agreement = 0.0;
  // Total variation between each sampling distribution and the full-context
  // distribution over the same tokens.
  double mean_tv = 0.0;
  double max_tv = 0.0;
  std::int64_t accepts = 0;
  std::int64_t rejects = 0;
};

struct EquivalenceReport {
  GridShape shape;
  std::string backend;
  std::vector<EquivalenceRow> rows;

  std::string to_json() const;
  std::string to_table() const;
};

// For every mode, window and seed: runs NTP and the parallel mode with
// coupled streams. Runs fan out over up to `threads` workers (0 = hardware
// concurrency); results are ordered by (mode, window, seed) regardless.
EquivalenceReport equivalence_report(const GridShape& shape,
                                     const ModelBackend& backend,
                                     std::span<const DecodeMode> modes,
                                     std::span<const int> windows,
                                     std::span<const std::uint64_t> seeds,
                                     const GenerationOptions& options,
                                     unsigned threads = 1);

}  // namespace zipar
