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

// Adaptive window assignment for row starts. The first token of a row is
// drafted under the current window k, then verified one step later against
// the distribution computed with window k + 1:
//
//   accept the draft x with probability min(1, p_next(x) / p_draft(x)),
//   otherwise resample from normalize(max(0, p_next - p_draft)) and verify
//   the new draft (now with window k + 1) in the following step.
//
// Once the verifying window reaches the full row the draft is replaced by a
// fresh sample from the full-context distribution and accepted.

#include <cstdint>
#include <optional>

#include "zipar/engine.h"
#include "zipar/sampler.h"

namespace zipar {

struct ProbeState {
  int row = 0;
  // Window the current draft was drawn under.
  int window = 0;
  // Full-row window; expansion stops there.
  int max_window = 0;
  TokenId draft = 0;
  // Exact distribution the draft was drawn from.
  ProbabilityVector draft_dist;
  int probe_count = 0;
};

// Draws the draft for a row start from the window-`window` distribution.
ProbeState begin_probe(int row, int window, int max_window,
                       ProbabilityVector draft_dist, RandomStream& stream);

// p_next(x) / p_draft(x) with the limits of the ratio when p_draft(x) = 0:
// +inf when p_next(x) > 0, 0 otherwise.
double acceptance_ratio(double p_next, double p_draft);

// normalize(max(0, p_next - p_draft)); nullopt when the positive mass is
// below 1e-12 (the distributions coincide and rejection has measure zero).
std::optional<ProbabilityVector> residual_distribution(
    const ProbabilityVector& p_next, const ProbabilityVector& p_draft);

struct VerifyDecision {
  bool accept = false;
  // Full context reached: accept a fresh sample from p_next.
  bool full_context = false;
  double ratio = 0.0;
  // Set when rejecting: the distribution the new draft is drawn from.
  std::optional<ProbabilityVector> resample_from;
};

// Decision for a given uniform draw u in [0, 1). Deterministic.
VerifyDecision decide(const ProbeState& probe, const ProbabilityVector& p_next,
                      double u);

struct VerifyOutcome {
  bool accepted = false;
  TokenId token = 0;
  double ratio = 0.0;
  // Accepted window on acceptance, the expanded window on rejection.
  int window = 0;
  bool full_context = false;
};

// One verification round. p_next must be computed with window
// probe.window + 1. On rejection the probe is updated in place: new draft,
// draft_dist = p_next, window + 1. Consumes randomness only from `stream`.
VerifyOutcome verify(ProbeState& probe, const ProbabilityVector& p_next,
                     RandomStream& stream);

// Full adaptive generation with minimum window s_min.
GenerationResult run_adaptive(const GridShape& shape, int s_min,
                              const ModelBackend& backend,
                              const GenerationOptions& options,
                              std::uint64_t seed);

}  // namespace zipar
