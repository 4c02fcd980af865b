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

#include "zipar/model.h"

#include <algorithm>
#include <set>

#include "zipar/errors.h"

namespace zipar {

std::vector<std::int64_t> availability_mask(const DecodeState& state,
                                            Position query) {
  const GridShape& shape = state.shape();
  const std::int64_t limit = raster_index(shape, query);
  std::vector<std::int64_t> mask;
  for (std::int64_t r = 0; r < shape.prefix_len; ++r) mask.push_back(r);
  for (Position p : state.decoded_positions()) {
    const std::int64_t r = raster_index(shape, p);
    if (r < limit) mask.push_back(r);
  }
  return mask;
}

ContextCache::ContextCache(GridShape shape, std::size_t entry_floats)
    : shape_(std::move(shape)), entry_floats_(entry_floats) {
  const auto slots = static_cast<std::size_t>(shape_.raster_length()) + 1;
  present_.assign(slots, 0);
  data_.assign(slots * entry_floats_, 0.0f);
}

std::span<const float> ContextCache::entry(std::size_t slot) const {
  if (!present(slot)) {
    throw IntegrityError("cache slot " + std::to_string(slot) + " is empty");
  }
  return {data_.data() + slot * entry_floats_, entry_floats_};
}

std::span<float> ContextCache::write_entry(std::size_t slot) {
  if (present(slot)) {
    throw IntegrityError("double commit: cache slot " + std::to_string(slot) +
                         " already holds an entry");
  }
  present_[slot] = 1;
  ++present_count_;
  return {data_.data() + slot * entry_floats_, entry_floats_};
}

void check_cache_matches(const ContextCache& cache, const DecodeState& state) {
  const GridShape& shape = state.shape();
  if (!(cache.shape() == shape)) {
    throw IntegrityError("cache was built for a different grid shape");
  }
  for (std::size_t s = 0; s <= static_cast<std::size_t>(shape.prefix_len); ++s) {
    if (!cache.present(s)) {
      throw IntegrityError("cache is missing prefix slot " + std::to_string(s));
    }
  }
  std::size_t decoded = 0;
  for (int i = 0; i < shape.rows; ++i) {
    for (int j = 0; j < shape.row_stride(); ++j) {
      const Position p{i, j};
      const bool in_state = state.decoded(p);
      decoded += in_state ? 1 : 0;
      if (cache.present(model_slot(shape, p)) != in_state) {
        throw IntegrityError("cache/state divergence at (" + std::to_string(i) +
                             ", " + std::to_string(j) + ")");
      }
    }
  }
  if (cache.present_count() != decoded + shape.prefix_len + 1) {
    throw IntegrityError("cache holds entries the state does not know about");
  }
}

namespace detail {

SlotInput query_input(const DecodeState& state, const Conditioning& condition,
                      const Query& query) {
  const GridShape& shape = state.shape();
  const std::int64_t input_raster = raster_index(shape, query.pos) - 1;
  SlotInput in;
  in.slot = static_cast<std::size_t>(input_raster + 1);
  if (input_raster < 0) {
    in.is_start = true;
    return in;
  }
  if (input_raster < shape.prefix_len) {
    if (condition.mode == ConditionMode::kUnconditional) {
      in.is_null = true;
    } else {
      in.token = condition.prefix[static_cast<std::size_t>(input_raster)];
    }
    return in;
  }
  const Position p = position_at(shape, input_raster);
  if (auto v = state.value(p)) {
    in.token = *v;
  } else if (query.placeholder) {
    in.token = *query.placeholder;
  } else {
    throw IntegrityError("query (" + std::to_string(query.pos.row) + ", " +
                         std::to_string(query.pos.col) +
                         ") needs a placeholder for its undecoded input slot");
  }
  return in;
}

void check_queries(const DecodeState& state, std::span<const Query> queries) {
  std::set<Position> seen;
  for (const Query& q : queries) {
    if (!is_valid(state.shape(), q.pos)) {
      throw CoordinateError("query outside grid");
    }
    if (!seen.insert(q.pos).second) {
      throw DomainError("queries must be pairwise distinct");
    }
  }
}

void check_condition(const GridShape& shape, const Conditioning& condition,
                     int vocab_size) {
  if (condition.prefix.size() != static_cast<std::size_t>(shape.prefix_len)) {
    throw ConfigError("conditioning prefix has " +
                      std::to_string(condition.prefix.size()) +
                      " tokens, grid expects " + std::to_string(shape.prefix_len));
  }
  if (shape.vocab_size != vocab_size) {
    throw ConfigError("grid vocabulary " + std::to_string(shape.vocab_size) +
                      " does not match backend vocabulary " +
                      std::to_string(vocab_size));
  }
  if (condition.mode == ConditionMode::kConditional) {
    for (TokenId t : condition.prefix) {
      if (t < 0 || t >= vocab_size) {
        throw ConfigError("prefix token " + std::to_string(t) +
                          " outside vocabulary");
      }
    }
  }
}

}  // namespace detail

}  // namespace zipar
