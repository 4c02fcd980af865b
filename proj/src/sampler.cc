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

#include "zipar/sampler.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "zipar/errors.h"

namespace zipar {

void SamplerConfig::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("temperature must be positive");
  }
  if (top_k < 0) throw ConfigError("top-k must be 0 (off) or positive");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top-p must lie in (0, 1]");
  if (!(cfg_scale >= 0.0) || !std::isfinite(cfg_scale)) {
    throw ConfigError("cfg scale must be nonnegative");
  }
}

ProbabilityVector ProbabilityVector::from_weights(std::vector<double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw DomainError("probability weights must be finite and nonnegative");
    }
    total += w;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw DomainError("probability weights have no mass");
  }
  for (double& w : weights) w /= total;
  ProbabilityVector p;
  p.probs_ = std::move(weights);
  return p;
}

ProbabilityVector ProbabilityVector::point_mass(int vocab_size, TokenId token) {
  std::vector<double> w(static_cast<std::size_t>(vocab_size), 0.0);
  w.at(static_cast<std::size_t>(token)) = 1.0;
  return from_weights(std::move(w));
}

double total_variation(const ProbabilityVector& a, const ProbabilityVector& b) {
  if (a.size() != b.size()) throw DomainError("distribution length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return 0.5 * sum;
}

LogitVector guided_logits(const LogitVector& cond, const LogitVector& uncond,
                          double scale) {
  if (cond.scores.size() != uncond.scores.size()) {
    throw DomainError("guidance needs logit vectors of equal length");
  }
  LogitVector out;
  out.scores.resize(cond.scores.size());
  for (std::size_t i = 0; i < cond.scores.size(); ++i) {
    out.scores[i] = uncond.scores[i] + scale * (cond.scores[i] - uncond.scores[i]);
  }
  return out;
}

ProbabilityVector to_distribution(const LogitVector& logits,
                                  const SamplerConfig& config) {
  config.validate();
  const std::vector<double>& l = logits.scores;
  if (l.empty()) throw DomainError("empty logit vector");
  double max_logit = -INFINITY;
  for (double x : l) {
    if (!std::isfinite(x)) throw DomainError("logits must be finite");
    max_logit = std::max(max_logit, x);
  }
  std::vector<double> p(l.size());
  double total = 0.0;
  for (std::size_t i = 0; i < l.size(); ++i) {
    p[i] = std::exp((l[i] - max_logit) / config.temperature);
    total += p[i];
  }
  for (double& x : p) x /= total;

  const bool truncate_k = config.top_k > 0 && static_cast<std::size_t>(config.top_k) < p.size();
  const bool truncate_p = config.top_p < 1.0;
  if (truncate_k || truncate_p) {
    // Descending probability, ties by smaller id.
    std::vector<std::size_t> order(p.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&p](std::size_t a, std::size_t b) { return p[a] > p[b]; });
    std::size_t keep = order.size();
    if (truncate_k) keep = static_cast<std::size_t>(config.top_k);
    if (truncate_p) {
      double kept_mass = 0.0;
      for (std::size_t r = 0; r < keep; ++r) kept_mass += p[order[r]];
      double cumulative = 0.0;
      std::size_t n = 0;
      while (n < keep) {
        cumulative += p[order[n]] / kept_mass;
        ++n;
        if (cumulative >= config.top_p) break;
      }
      keep = n;
    }
    std::vector<double> truncated(p.size(), 0.0);
    for (std::size_t r = 0; r < keep; ++r) truncated[order[r]] = p[order[r]];
    double mass = 0.0;
    for (double x : truncated) mass += x;
    if (!(mass > 0.0)) {
      truncated.assign(p.size(), 0.0);
      truncated[order.front()] = 1.0;
    }
    p = std::move(truncated);
  }
  return ProbabilityVector::from_weights(std::move(p));
}

TokenId sample_with_uniform(const ProbabilityVector& p, double u) {
  double cumulative = 0.0;
  TokenId last_nonzero = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    cumulative += p[i];
    last_nonzero = static_cast<TokenId>(i);
    if (u < cumulative) return last_nonzero;
  }
  return last_nonzero;
}

TokenId sample(const ProbabilityVector& p, RandomStream& stream) {
  return sample_with_uniform(p, stream.uniform());
}

}  // namespace zipar
