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

// Token coordinates, raster linearization and the mutable decode state shared
// by every scheduler.
//
// The image occupies rows x cols positions. When the shape carries end-of-row
// (EOR) tokens, each row has one extra slot at column == cols holding the EOR
// token id. Raster order counts the conditioning prefix first:
//
//   raster_index(i, j) = prefix_len + i * (cols + eor) + j

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "zipar/random.h"

namespace zipar {

using TokenId = std::int32_t;

struct GridShape {
  int rows = 1;
  int cols = 1;
  int prefix_len = 0;
  bool eor = false;
  int vocab_size = 2;
  std::optional<TokenId> eor_token_id;

  int row_stride() const { return cols + (eor ? 1 : 0); }
  std::int64_t raster_length() const {
    return prefix_len + static_cast<std::int64_t>(rows) * row_stride();
  }
  std::int64_t image_tokens() const {
    return static_cast<std::int64_t>(rows) * cols;
  }

  // Throws ConfigError when an invariant is violated.
  void validate() const;

  bool operator==(const GridShape&) const = default;
};

// Convenience constructor; validates. The EOR id defaults to vocab - 1.
GridShape make_shape(int rows, int cols, int vocab_size, bool eor = false,
                     int prefix_len = 0,
                     std::optional<TokenId> eor_token_id = std::nullopt);

struct Position {
  int row = 0;
  int col = 0;

  auto operator<=>(const Position&) const = default;
};

bool is_valid(const GridShape& shape, Position pos);
bool is_eor_slot(const GridShape& shape, Position pos);

// Generation-order index, counting prefix tokens and EOR slots.
// Throws CoordinateError for out-of-range positions.
std::int64_t raster_index(const GridShape& shape, Position pos);

// Inverse of raster_index over image/EOR slots.
Position position_at(const GridShape& shape, std::int64_t raster);

// Sequential forward passes to produce every image and EOR token.
std::int64_t ntp_step_count(const GridShape& shape);

enum class RowState { kNotStarted, kProbing, kActive, kDone };

std::string_view to_string(RowState state);

// Row-major token grid without EOR slots; the engine's output artifact.
struct TokenGrid {
  int rows = 0;
  int cols = 0;
  bool eor = false;
  int vocab = 0;
  std::vector<TokenId> tokens;
  std::optional<std::uint64_t> seed;

  TokenId at(int row, int col) const {
    return tokens[static_cast<std::size_t>(row) * cols + col];
  }
  bool operator==(const TokenGrid&) const = default;
};

// {"rows", "cols", "eor", "vocab", "tokens"} plus an optional "seed".
std::string to_json(const TokenGrid& grid);
TokenGrid token_grid_from_json(std::string_view text);
void write_token_grid(const std::string& path, const TokenGrid& grid);
TokenGrid read_token_grid(const std::string& path);

// The set of decoded tokens with their values, per-row frontiers, per-row
// lifecycle and the commit order of every slot.
//
// Decoded image tokens of each row always form a contiguous prefix, so
// membership of (i, j) with j < cols is equivalent to j < frontier(i).
class DecodeState {
 public:
  explicit DecodeState(GridShape shape);
  // Also owns one random stream per row, derived from the master seed.
  DecodeState(GridShape shape, std::uint64_t master_seed);

  const GridShape& shape() const { return shape_; }

  bool decoded(Position pos) const;
  std::optional<TokenId> value(Position pos) const;
  // Throws IntegrityError when absent.
  TokenId at(Position pos) const;

  int frontier(int row) const { return frontier_[row]; }
  RowState row_state(int row) const { return row_state_[row]; }

  // Enforces NotStarted -> (Probing ->)* Active -> Done.
  void set_row_state(int row, RowState next);

  // Writes a token. Image tokens must extend the row's contiguous prefix;
  // EOR slots only accept the shape's EOR id. Double commits throw.
  void commit(Position pos, TokenId token);

  // Order in which the slot was committed, or -1.
  std::int64_t commit_seq(Position pos) const;
  std::int64_t commit_count() const { return next_seq_; }

  bool has_streams() const { return !streams_.empty(); }
  RandomStream& stream(int row);

  bool all_rows_done() const;

  // Decoded slots (image and EOR) in raster order.
  std::vector<Position> decoded_positions() const;

  // Contiguity and no-overtake (frontier non-increasing in row index).
  void check_invariants() const;

  std::string dump() const;

  // Requires every image token decoded.
  TokenGrid to_grid() const;

 private:
  std::size_t slot(Position pos) const;

  GridShape shape_;
  std::vector<TokenId> values_;
  std::vector<std::int64_t> seq_;
  std::vector<int> frontier_;
  std::vector<RowState> row_state_;
  std::vector<RandomStream> streams_;
  std::int64_t next_seq_ = 0;
};

}  // namespace zipar
