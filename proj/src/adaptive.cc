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

#include "zipar/adaptive.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "zipar/errors.h"

namespace zipar {

ProbeState begin_probe(int row, int window, int max_window,
                       ProbabilityVector draft_dist, RandomStream& stream) {
  if (window < 1 || window > max_window) {
    throw DomainError("probe window " + std::to_string(window) +
                      " outside [1, " + std::to_string(max_window) + "]");
  }
  ProbeState probe;
  probe.row = row;
  probe.window = window;
  probe.max_window = max_window;
  probe.draft = sample(draft_dist, stream);
  probe.draft_dist = std::move(draft_dist);
  probe.probe_count = 1;
  return probe;
}

double acceptance_ratio(double p_next, double p_draft) {
  if (p_draft > 0.0) return p_next / p_draft;
  return p_next > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

std::optional<ProbabilityVector> residual_distribution(
    const ProbabilityVector& p_next, const ProbabilityVector& p_draft) {
  if (p_next.size() != p_draft.size()) {
    throw DomainError("residual needs distributions of equal length");
  }
  std::vector<double> residual(p_next.size());
  double mass = 0.0;
  for (std::size_t i = 0; i < residual.size(); ++i) {
    residual[i] = std::max(0.0, p_next[i] - p_draft[i]);
    mass += residual[i];
  }
  if (mass < 1e-12) return std::nullopt;
  return ProbabilityVector::from_weights(std::move(residual));
}

VerifyDecision decide(const ProbeState& probe, const ProbabilityVector& p_next,
                      double u) {
  if (p_next.size() != probe.draft_dist.size()) {
    throw DomainError("verify needs distributions of equal length");
  }
  const auto d = static_cast<std::size_t>(probe.draft);
  VerifyDecision decision;
  decision.ratio = acceptance_ratio(p_next[d], probe.draft_dist[d]);
  if (probe.window + 1 >= probe.max_window) {
    decision.accept = true;
    decision.full_context = true;
    return decision;
  }
  if (u < std::min(1.0, decision.ratio)) {
    decision.accept = true;
    return decision;
  }
  decision.resample_from = residual_distribution(p_next, probe.draft_dist);
  decision.accept = !decision.resample_from.has_value();
  return decision;
}

VerifyOutcome verify(ProbeState& probe, const ProbabilityVector& p_next,
                     RandomStream& stream) {
  VerifyOutcome out;
  const bool full = probe.window + 1 >= probe.max_window;
  // The full-context case draws no acceptance uniform.
  const VerifyDecision decision = decide(probe, p_next, full ? 0.0 : stream.uniform());
  out.ratio = decision.ratio;
  out.full_context = decision.full_context;
  if (decision.full_context) {
    out.accepted = true;
    out.token = sample(p_next, stream);
    out.window = probe.max_window;
    return out;
  }
  if (decision.accept) {
    out.accepted = true;
    out.token = probe.draft;
    out.window = probe.window;
    return out;
  }
  probe.draft = sample(*decision.resample_from, stream);
  probe.draft_dist = p_next;
  probe.window += 1;
  probe.probe_count += 1;
  out.accepted = false;
  out.token = probe.draft;
  out.window = probe.window;
  return out;
}

GenerationResult run_adaptive(const GridShape& shape, int s_min,
                              const ModelBackend& backend,
                              const GenerationOptions& options,
                              std::uint64_t seed) {
  return generate(shape, DecodeMode::kAdaptive, s_min, backend, options, seed);
}

}  // namespace zipar
