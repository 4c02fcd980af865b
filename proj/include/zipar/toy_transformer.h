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

// Desk-scale decoder-only transformer with seeded parameters.
//
// Architecture: token + absolute position embeddings (indexed by model slot),
// pre-RMSNorm blocks with multi-head causal attention and a ReLU MLP of width
// 4d, final RMSNorm and an untied output head over the image vocabulary. The
// embedding table has two extra rows: a start token (id = vocab) and the null
// prefix token used for unconditional guidance (id = vocab + 1).
//
// Floating-point order: all projections and attention dot products go through
// zipar::simd kernels (fixed 8-lane order, fused multiply-add). Attention
// softmax and RMSNorm scaling accumulate in double over context slots in
// increasing slot order, followed by the slot itself. The cached and
// from-scratch paths share these routines, so they agree bit-for-bit.

#include <cstdint>
#include <string>
#include <vector>

#include "zipar/model.h"

namespace zipar {

struct ToyTransformerConfig {
  int layers = 2;
  int width = 64;
  int heads = 4;
  int vocab_size = 256;
  int max_positions = 8192;
  std::uint64_t seed = 0;

  void validate() const;
};

// Provenance sidecar: {"seed", "layers", "width", "heads", "vocab",
// "max_positions"}.
std::string to_json(const ToyTransformerConfig& config);
ToyTransformerConfig toy_config_from_json(const std::string& text);
void write_sidecar(const std::string& path, const ToyTransformerConfig& config);
ToyTransformerConfig read_sidecar(const std::string& path);

class ToyTransformer final : public ModelBackend {
 public:
  // kCommitTime reproduces cache semantics (each entry sees only the slots
  // committed before it); kRecomputeAll gives every entry its full raster
  // context, as if nothing had been decoded out of order.
  enum class ContextPolicy { kCommitTime, kRecomputeAll };

  explicit ToyTransformer(ToyTransformerConfig config);

  std::string name() const override { return "toy"; }
  int vocab_size() const override { return config_.vocab_size; }
  const ToyTransformerConfig& config() const { return config_; }

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

  // Layer-major evaluation of every committed slot, then the queries.
  std::vector<LogitVector> forward_dense(const DecodeState& state,
                                         std::span<const Query> queries,
                                         const Conditioning& condition,
                                         ContextPolicy policy) const;

  // Cached forward of one query that also reports the final layer's
  // head-averaged attention weights, indexed by model slot (zero where the
  // query cannot attend).
  LogitVector query_with_attention(const ContextCache& cache,
                                   const DecodeState& state, const Query& query,
                                   const Conditioning& condition,
                                   std::vector<double>& slot_attention) const;

  // Sum of all parameters in double; a cheap fingerprint for determinism.
  double parameter_checksum() const;

 private:
  struct Layer {
    std::vector<float> wq, wk, wv, wo, w1, w2;
  };
  struct Scratch;
  // Keys and values a token may attend to in one layer, in slot order.
  struct LayerContext {
    std::vector<const float*> keys;
    std::vector<const float*> values;
    std::vector<std::size_t> slots;
  };

  void embed(std::size_t slot, TokenId token, float* h) const;
  TokenId input_token(const detail::SlotInput& in) const;
  void project(const Layer& layer, const float* h, Scratch& s, float* k,
               float* v) const;
  void attend_and_mix(const Layer& layer, float* h, const float* self_k,
                      const float* self_v, const LayerContext& ctx, Scratch& s,
                      std::vector<double>* head_avg_weights) const;
  LogitVector head(const float* h, Scratch& s) const;
  LayerContext cached_context(const ContextCache& cache, std::size_t below,
                              int layer) const;
  void check_shape(const GridShape& shape) const;

  ToyTransformerConfig config_;
  int head_dim_ = 0;
  std::vector<float> token_embedding_;
  std::vector<float> position_embedding_;
  std::vector<Layer> layers_;
  std::vector<float> output_head_;
};

}  // namespace zipar
