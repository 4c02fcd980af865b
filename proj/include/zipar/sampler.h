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

#include <vector>

#include "zipar/grid.h"
#include "zipar/model.h"
#include "zipar/random.h"

namespace zipar {

struct SamplerConfig {
  double temperature = 1.0;
  int top_k = 0;       // 0 = off
  double top_p = 1.0;  // 1 = off
  // Classifier-free guidance scale; 0 disables guidance and samples from the
  // conditional logits alone.
  double cfg_scale = 2.0;

  void validate() const;
  bool guidance_enabled() const { return cfg_scale != 0.0 && cfg_scale != 1.0; }
};

// Nonnegative weights summing to one within 1e-9.
class ProbabilityVector {
 public:
  ProbabilityVector() = default;
  // Normalizes nonnegative weights; throws DomainError when the total is not
  // positive and finite.
  static ProbabilityVector from_weights(std::vector<double> weights);
  static ProbabilityVector point_mass(int vocab_size, TokenId token);

  const std::vector<double>& probs() const { return probs_; }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::size_t size() const { return probs_.size(); }

  bool operator==(const ProbabilityVector&) const = default;

 private:
  std::vector<double> probs_;
};

double total_variation(const ProbabilityVector& a, const ProbabilityVector& b);

// uncond + g * (cond - uncond).
LogitVector guided_logits(const LogitVector& cond, const LogitVector& uncond,
                          double scale);

// softmax(l / temperature), then top-k, then top-p, renormalized.
ProbabilityVector to_distribution(const LogitVector& logits,
                                  const SamplerConfig& config);

// Inverse-CDF over token ids in index order.
TokenId sample(const ProbabilityVector& p, RandomStream& stream);
TokenId sample_with_uniform(const ProbabilityVector& p, double u);

}  // namespace zipar
