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

#include "zipar/local_oracle.h"

#include "zipar/errors.h"
#include "zipar/random.h"

namespace zipar {

LocalOracle::LocalOracle(LocalOracleConfig config) : config_(config) {
  if (config_.radius < 1) throw ConfigError("locality radius must be >= 1");
  if (config_.vocab_size < 2) throw ConfigError("vocabulary needs >= 2 tokens");
}

ContextCache LocalOracle::make_cache(const GridShape& shape,
                                     const Conditioning& condition) const {
  detail::check_condition(shape, condition, config_.vocab_size);
  ContextCache cache(shape, 0);
  for (std::size_t s = 0; s <= static_cast<std::size_t>(shape.prefix_len); ++s) {
    cache.write_entry(s);
  }
  return cache;
}

void LocalOracle::commit(ContextCache& cache, const Conditioning&, Position pos,
                         TokenId) const {
  cache.write_entry(model_slot(cache.shape(), pos));
}

std::vector<TokenId> LocalOracle::neighbourhood(const DecodeState& state,
                                                Position pos) const {
  const GridShape& shape = state.shape();
  auto read = [&](int i, int j) -> TokenId {
    if (i < 0 || j < 0 || j >= shape.cols) return kBoundary;
    return state.value({i, j}).value_or(kBoundary);
  };
  std::vector<TokenId> n;
  n.reserve(static_cast<std::size_t>(config_.radius) + 1);
  n.push_back(read(pos.row, pos.col - 1));
  for (int k = 0; k < config_.radius; ++k) {
    n.push_back(read(pos.row - 1, pos.col + k));
  }
  return n;
}

LogitVector LocalOracle::logits_for(const std::vector<TokenId>& neighbourhood,
                                    const Conditioning& condition) const {
  std::uint64_t h = mix64(config_.seed ^ 0x6c6f63616cULL);
  if (condition.mode == ConditionMode::kConditional) {
    for (TokenId t : condition.prefix) h = mix64(h ^ static_cast<std::uint64_t>(t + 7));
  } else {
    h = mix64(h ^ 0x6e756c6cULL);
  }
  for (TokenId t : neighbourhood) h = mix64(h ^ static_cast<std::uint64_t>(t + 2));
  LogitVector out;
  out.scores.resize(static_cast<std::size_t>(config_.vocab_size));
  for (int x = 0; x < config_.vocab_size; ++x) {
    const std::uint64_t bits = mix64(h + static_cast<std::uint64_t>(x));
    const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
    out.scores[static_cast<std::size_t>(x)] = config_.sharpness * (2.0 * u - 1.0);
  }
  return out;
}

std::vector<LogitVector> LocalOracle::forward(const DecodeState& state,
                                              std::span<const Query> queries,
                                              const Conditioning& condition) const {
  detail::check_condition(state.shape(), condition, config_.vocab_size);
  detail::check_queries(state, queries);
  std::vector<LogitVector> out;
  out.reserve(queries.size());
  for (const Query& q : queries) {
    out.push_back(logits_for(neighbourhood(state, q.pos), condition));
  }
  return out;
}

std::vector<LogitVector> LocalOracle::forward_cached(
    const ContextCache& cache, const DecodeState& state,
    std::span<const Query> queries, const Conditioning& condition) const {
  check_cache_matches(cache, state);
  return forward(state, queries, condition);
}

}  // namespace zipar
