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

#include "zipar/grid.h"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "zipar/errors.h"

namespace zipar {

void GridShape::validate() const {
  if (rows < 1 || cols < 1) {
    throw ConfigError("grid needs at least one row and one column, got " +
                      std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (prefix_len < 0) throw ConfigError("prefix length must be nonnegative");
  if (vocab_size < 2) throw ConfigError("vocabulary needs at least 2 tokens");
  if (eor) {
    if (!eor_token_id) throw ConfigError("EOR grid requires an EOR token id");
    if (*eor_token_id < 0 || *eor_token_id >= vocab_size) {
      throw ConfigError("EOR token id " + std::to_string(*eor_token_id) +
                        " outside vocabulary of " + std::to_string(vocab_size));
    }
  } else if (eor_token_id) {
    throw ConfigError("EOR token id given for a grid without EOR tokens");
  }
}

GridShape make_shape(int rows, int cols, int vocab_size, bool eor,
                     int prefix_len, std::optional<TokenId> eor_token_id) {
  GridShape shape;
  shape.rows = rows;
  shape.cols = cols;
  shape.prefix_len = prefix_len;
  shape.eor = eor;
  shape.vocab_size = vocab_size;
  if (eor) shape.eor_token_id = eor_token_id.value_or(vocab_size - 1);
  shape.validate();
  return shape;
}

bool is_valid(const GridShape& shape, Position pos) {
  return pos.row >= 0 && pos.row < shape.rows && pos.col >= 0 &&
         pos.col < shape.row_stride();
}

bool is_eor_slot(const GridShape& shape, Position pos) {
  return shape.eor && pos.col == shape.cols;
}

std::int64_t raster_index(const GridShape& shape, Position pos) {
  if (!is_valid(shape, pos)) {
    throw CoordinateError("position (" + std::to_string(pos.row) + ", " +
                          std::to_string(pos.col) + ") outside " +
                          std::to_string(shape.rows) + "x" +
                          std::to_string(shape.row_stride()) + " grid");
  }
  return shape.prefix_len +
         static_cast<std::int64_t>(pos.row) * shape.row_stride() + pos.col;
}

Position position_at(const GridShape& shape, std::int64_t raster) {
  const std::int64_t offset = raster - shape.prefix_len;
  if (offset < 0 || offset >= static_cast<std::int64_t>(shape.rows) * shape.row_stride()) {
    throw CoordinateError("raster index " + std::to_string(raster) +
                          " is not an image slot");
  }
  return Position{static_cast<int>(offset / shape.row_stride()),
                  static_cast<int>(offset % shape.row_stride())};
}

std::int64_t ntp_step_count(const GridShape& shape) {
  return static_cast<std::int64_t>(shape.rows) * shape.row_stride();
}

std::string_view to_string(RowState state) {
  switch (state) {
    case RowState::kNotStarted:
      return "not_started";
    case RowState::kProbing:
      return "probing";
    case RowState::kActive:
      return "active";
    case RowState::kDone:
      return "done";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// TokenGrid serialization

std::string to_json(const TokenGrid& grid) {
  nlohmann::ordered_json doc;
  doc["rows"] = grid.rows;
  doc["cols"] = grid.cols;
  doc["eor"] = grid.eor;
  doc["vocab"] = grid.vocab;
  doc["tokens"] = grid.tokens;
  if (grid.seed) doc["seed"] = *grid.seed;
  return doc.dump() + "\n";
}

TokenGrid token_grid_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed token grid JSON: ") + e.what());
  }
  TokenGrid grid;
  try {
    grid.rows = doc.at("rows").get<int>();
    grid.cols = doc.at("cols").get<int>();
    grid.eor = doc.at("eor").get<bool>();
    grid.vocab = doc.at("vocab").get<int>();
    grid.tokens = doc.at("tokens").get<std::vector<TokenId>>();
    if (doc.contains("seed")) grid.seed = doc["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("token grid JSON: ") + e.what());
  }
  if (grid.rows < 1 || grid.cols < 1 ||
      grid.tokens.size() != static_cast<std::size_t>(grid.rows) * grid.cols) {
    throw ConfigError("token grid JSON: token count does not match rows*cols");
  }
  for (TokenId t : grid.tokens) {
    if (t < 0 || t >= grid.vocab) {
      throw ConfigError("token grid JSON: token " + std::to_string(t) +
                        " outside vocabulary");
    }
  }
  return grid;
}

void write_token_grid(const std::string& path, const TokenGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << to_json(grid);
}

TokenGrid read_token_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return token_grid_from_json(buffer.str());
}

// ---------------------------------------------------------------------------
// DecodeState

DecodeState::DecodeState(GridShape shape) : shape_(std::move(shape)) {
  shape_.validate();
  const auto slots = static_cast<std::size_t>(shape_.rows) * shape_.row_stride();
  values_.assign(slots, -1);
  seq_.assign(slots, -1);
  frontier_.assign(shape_.rows, 0);
  row_state_.assign(shape_.rows, RowState::kNotStarted);
}

DecodeState::DecodeState(GridShape shape, std::uint64_t master_seed)
    : DecodeState(std::move(shape)) {
  streams_.reserve(shape_.rows);
  for (int i = 0; i < shape_.rows; ++i) {
    streams_.emplace_back(row_stream_seed(master_seed, i));
  }
}

std::size_t DecodeState::slot(Position pos) const {
  if (!is_valid(shape_, pos)) {
    throw CoordinateError("position (" + std::to_string(pos.row) + ", " +
                          std::to_string(pos.col) + ") outside grid");
  }
  return static_cast<std::size_t>(pos.row) * shape_.row_stride() + pos.col;
}

bool DecodeState::decoded(Position pos) const { return values_[slot(pos)] >= 0; }

std::optional<TokenId> DecodeState::value(Position pos) const {
  const TokenId v = values_[slot(pos)];
  if (v < 0) return std::nullopt;
  return v;
}

TokenId DecodeState::at(Position pos) const {
  const TokenId v = values_[slot(pos)];
  if (v < 0) {
    throw IntegrityError("token (" + std::to_string(pos.row) + ", " +
                         std::to_string(pos.col) + ") is not decoded");
  }
  return v;
}

void DecodeState::set_row_state(int row, RowState next) {
  const RowState current = row_state_.at(row);
  bool ok = false;
  switch (next) {
    case RowState::kNotStarted:
      ok = false;
      break;
    case RowState::kProbing:
      ok = current == RowState::kNotStarted || current == RowState::kProbing;
      break;
    case RowState::kActive:
      ok = current == RowState::kNotStarted || current == RowState::kProbing;
      break;
    case RowState::kDone:
      ok = current == RowState::kActive;
      break;
  }
  if (!ok) {
    throw IntegrityError("row " + std::to_string(row) + " cannot move from " +
                         std::string(to_string(current)) + " to " +
                         std::string(to_string(next)));
  }
  row_state_[row] = next;
}

void DecodeState::commit(Position pos, TokenId token) {
  const std::size_t s = slot(pos);
  if (values_[s] >= 0) {
    throw IntegrityError("double commit at (" + std::to_string(pos.row) +
                         ", " + std::to_string(pos.col) + ")");
  }
  if (is_eor_slot(shape_, pos)) {
    if (token != *shape_.eor_token_id) {
      throw IntegrityError("EOR slot must hold the EOR token id");
    }
  } else {
    if (token < 0 || token >= shape_.vocab_size) {
      throw IntegrityError("token " + std::to_string(token) +
                           " outside vocabulary");
    }
    if (pos.col != frontier_[pos.row]) {
      throw IntegrityError("commit at (" + std::to_string(pos.row) + ", " +
                           std::to_string(pos.col) +
                           ") breaks the contiguous row prefix (frontier " +
                           std::to_string(frontier_[pos.row]) + ")");
    }
    ++frontier_[pos.row];
  }
  values_[s] = token;
  seq_[s] = next_seq_++;
}

std::int64_t DecodeState::commit_seq(Position pos) const { return seq_[slot(pos)]; }

RandomStream& DecodeState::stream(int row) {
  if (streams_.empty()) throw IntegrityError("decode state has no random streams");
  return streams_.at(row);
}

bool DecodeState::all_rows_done() const {
  for (RowState s : row_state_) {
    if (s != RowState::kDone) return false;
  }
  return true;
}

std::vector<Position> DecodeState::decoded_positions() const {
  std::vector<Position> out;
  for (int i = 0; i < shape_.rows; ++i) {
    for (int j = 0; j < shape_.row_stride(); ++j) {
      if (values_[static_cast<std::size_t>(i) * shape_.row_stride() + j] >= 0) {
        out.push_back({i, j});
      }
    }
  }
  return out;
}

void DecodeState::check_invariants() const {
  for (int i = 0; i < shape_.rows; ++i) {
    for (int j = 0; j < shape_.cols; ++j) {
      const bool present = values_[static_cast<std::size_t>(i) * shape_.row_stride() + j] >= 0;
      if (present != (j < frontier_[i])) {
        throw IntegrityError("row " + std::to_string(i) +
                             " decoded tokens are not a contiguous prefix\n" + dump());
      }
    }
    if (i > 0 && frontier_[i] > frontier_[i - 1]) {
      throw IntegrityError("row " + std::to_string(i) + " overtook row " +
                           std::to_string(i - 1) + "\n" + dump());
    }
    if ((row_state_[i] == RowState::kDone) != (frontier_[i] == shape_.cols)) {
      throw IntegrityError("row " + std::to_string(i) +
                           " lifecycle disagrees with its frontier\n" + dump());
    }
  }
}

std::string DecodeState::dump() const {
  std::ostringstream os;
  os << "DecodeState " << shape_.rows << "x" << shape_.cols
     << (shape_.eor ? " +eor" : "") << ", " << next_seq_ << " commits\n";
  for (int i = 0; i < shape_.rows; ++i) {
    os << "  row " << i << " [" << to_string(row_state_[i]) << "] frontier "
       << frontier_[i] << ":";
    for (int j = 0; j < shape_.row_stride(); ++j) {
      const TokenId v = values_[static_cast<std::size_t>(i) * shape_.row_stride() + j];
      os << ' ' << (v < 0 ? std::string(".") : std::to_string(v));
    }
    os << '\n';
  }
  return os.str();
}

TokenGrid DecodeState::to_grid() const {
  TokenGrid grid;
  grid.rows = shape_.rows;
  grid.cols = shape_.cols;
  grid.eor = shape_.eor;
  grid.vocab = shape_.vocab_size;
  grid.tokens.reserve(static_cast<std::size_t>(shape_.image_tokens()));
  for (int i = 0; i < shape_.rows; ++i) {
    for (int j = 0; j < shape_.cols; ++j) grid.tokens.push_back(at({i, j}));
  }
  return grid;
}

}  // namespace zipar
