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

// Autoregressive model abstraction. One forward call evaluates a batch of
// query positions against the current decode state.
//
// Slot layout shared by backends: model slot 0 is a start-of-sequence slot,
// slots 1..P hold the conditioning prefix, and raster index r lives in slot
// r + 1. The logits for query q are produced at the slot of raster index
// raster_index(q) - 1 (its "input slot"), which attends to every available
// slot before it. When the input slot is an undecoded row-terminal token the
// caller supplies a placeholder value for it.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zipar/grid.h"

namespace zipar {

struct LogitVector {
  std::vector<double> scores;
};

enum class ConditionMode { kConditional, kUnconditional };

struct Conditioning {
  ConditionMode mode = ConditionMode::kConditional;
  // Length must equal the shape's prefix_len. Ignored in unconditional mode,
  // where the backend substitutes its null token.
  std::vector<TokenId> prefix;

  static Conditioning conditional(std::vector<TokenId> prefix) {
    return {ConditionMode::kConditional, std::move(prefix)};
  }
  static Conditioning unconditional(std::size_t prefix_len) {
    return {ConditionMode::kUnconditional, std::vector<TokenId>(prefix_len, 0)};
  }
};

struct Query {
  Position pos;
  // Value for the input slot when it is not decoded (row-start only).
  std::optional<TokenId> placeholder;
};

// Raster indices a query may depend on: prefix tokens plus decoded slots
// (image or pre-inserted EOR) strictly before the query in raster order.
std::vector<std::int64_t> availability_mask(const DecodeState& state,
                                            Position query);

inline std::size_t model_slot(const GridShape& shape, Position pos) {
  return static_cast<std::size_t>(raster_index(shape, pos)) + 1;
}

// Per-slot intermediate state for incremental decoding. Entries are written
// once, when a token is committed, and never recomputed.
class ContextCache {
 public:
  ContextCache(GridShape shape, std::size_t entry_floats);

  const GridShape& shape() const { return shape_; }
  std::size_t slot_count() const { return present_.size(); }
  std::size_t entry_floats() const { return entry_floats_; }
  std::size_t present_count() const { return present_count_; }

  bool present(std::size_t slot) const { return present_.at(slot) != 0; }
  std::span<const float> entry(std::size_t slot) const;

  // Marks the slot present and returns its storage. Throws IntegrityError
  // when the slot already holds an entry.
  std::span<float> write_entry(std::size_t slot);

 private:
  GridShape shape_;
  std::size_t entry_floats_;
  std::vector<std::uint8_t> present_;
  std::vector<float> data_;
  std::size_t present_count_ = 0;
};

// Throws IntegrityError unless the cache holds entries for exactly the start
// slot, the prefix and the decoded slots of the state.
void check_cache_matches(const ContextCache& cache, const DecodeState& state);

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  virtual std::string name() const = 0;
  virtual int vocab_size() const = 0;

  // Fresh cache holding the start slot and the conditioning prefix.
  virtual ContextCache make_cache(const GridShape& shape,
                                  const Conditioning& condition) const = 0;

  // Computes and freezes the entry for pos under the slots present now.
  virtual void commit(ContextCache& cache, const Conditioning& condition,
                      Position pos, TokenId token) const = 0;

  // Incremental forward. Writes nothing into the cache.
  virtual std::vector<LogitVector> forward_cached(
      const ContextCache& cache, const DecodeState& state,
      std::span<const Query> queries, const Conditioning& condition) const = 0;

  // From-scratch forward over the state, honoring commit-time contexts.
  virtual std::vector<LogitVector> forward(
      const DecodeState& state, std::span<const Query> queries,
      const Conditioning& condition) const = 0;
};

namespace detail {

// Token fed at a model slot: start token, prefix (or null) token, decoded
// value, or the query's placeholder. Throws IntegrityError when an undecoded
// input slot has no placeholder.
struct SlotInput {
  std::size_t slot;
  bool is_start = false;
  bool is_null = false;
  TokenId token = 0;
};

SlotInput query_input(const DecodeState& state, const Conditioning& condition,
                      const Query& query);

void check_queries(const DecodeState& state, std::span<const Query> queries);
void check_condition(const GridShape& shape, const Conditioning& condition,
                     int vocab_size);

}  // namespace detail

}  // namespace zipar
