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
#include <vector>

#include "zipar/model.h"

namespace zipar {

struct LocalOracleConfig {
  int radius = 1;
  int vocab_size = 256;
  std::uint64_t seed = 0;
  // Logits are uniform in [-sharpness, sharpness] before softmax.
  double sharpness = 3.0;
};

// Analytic backend whose conditional for x(i, j) is a hash-parameterized
// table over the neighbourhood
//
//   x(i, j-1), x(i-1, j), ..., x(i-1, j+radius-1)
//
// Out-of-grid and not-yet-available neighbours read as a boundary symbol.
// Nothing outside the neighbourhood influences the conditional, so spatial
// locality holds exactly. The cache is ignored.
class LocalOracle final : public ModelBackend {
 public:
  static constexpr TokenId kBoundary = -1;

  explicit LocalOracle(LocalOracleConfig config);

  std::string name() const override { return "oracle"; }
  int vocab_size() const override { return config_.vocab_size; }
  int radius() const { return config_.radius; }

  ContextCache make_cache(const GridShape& shape,
                          const Conditioning& condition) const override;
  void commit(ContextCache& cache, const Conditioning& condition, Position pos,
              TokenId token) const override;
  std::vector<LogitVector> forward_cached(
      const ContextCache& cache, const DecodeState& state,
      std::span<const Query> queries,
      const Conditioning& condition) const override;
  std::vector<LogitVector> forward(const DecodeState& state,
                                   std::span<const Query> queries,
                                   const Conditioning& condition) const override;

  // Neighbourhood values in the order listed above.
  std::vector<TokenId> neighbourhood(const DecodeState& state, Position pos) const;

  // Logits of the conditional for an explicit neighbourhood.
  LogitVector logits_for(const std::vector<TokenId>& neighbourhood,
                         const Conditioning& condition) const;

 private:
  LocalOracleConfig config_;
};

}  // namespace zipar
