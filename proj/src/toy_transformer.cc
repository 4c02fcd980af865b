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

#include "zipar/toy_transformer.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "zipar/errors.h"
#include "zipar/random.h"
#include "zipar/simd/kernels.h"

namespace zipar {

void ToyTransformerConfig::validate() const {
  if (layers < 1) throw ConfigError("toy transformer needs at least one layer");
  if (width < 1 || heads < 1 || width % heads != 0) {
    throw ConfigError("model width must be a positive multiple of the head count");
  }
  if (vocab_size < 2) throw ConfigError("vocabulary needs at least 2 tokens");
  if (max_positions < 2) throw ConfigError("position table too small");
}

std::string to_json(const ToyTransformerConfig& config) {
  nlohmann::ordered_json doc;
  doc["seed"] = config.seed;
  doc["layers"] = config.layers;
  doc["width"] = config.width;
  doc["heads"] = config.heads;
  doc["vocab"] = config.vocab_size;
  doc["max_positions"] = config.max_positions;
  return doc.dump(2) + "\n";
}

ToyTransformerConfig toy_config_from_json(const std::string& text) {
  ToyTransformerConfig config;
  try {
    const auto doc = nlohmann::json::parse(text);
    config.seed = doc.at("seed").get<std::uint64_t>();
    config.layers = doc.at("layers").get<int>();
    config.width = doc.at("width").get<int>();
    config.heads = doc.at("heads").get<int>();
    config.vocab_size = doc.at("vocab").get<int>();
    config.max_positions = doc.value("max_positions", config.max_positions);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model sidecar: ") + e.what());
  }
  config.validate();
  return config;
}

void write_sidecar(const std::string& path, const ToyTransformerConfig& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << to_json(config);
}

ToyTransformerConfig read_sidecar(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return toy_config_from_json(buffer.str());
}

// ---------------------------------------------------------------------------

struct ToyTransformer::Scratch {
  explicit Scratch(int d)
      : x(d), q(d), k(d), v(d), mixed(d), proj(d), hidden(4 * static_cast<std::size_t>(d)) {}
  std::vector<float> x, q, k, v, mixed, proj, hidden;
  std::vector<double> scores;
};

namespace {

void fill_uniform(RandomStream& rng, std::vector<float>& out, std::size_t n,
                  double bound) {
  out.resize(n);
  for (float& w : out) w = static_cast<float>(bound * (2.0 * rng.uniform() - 1.0));
}

void rms_norm(std::span<const float> h, std::span<float> out) {
  const double ss = simd::dot(h, h);
  const double scale = 1.0 / std::sqrt(ss / static_cast<double>(h.size()) + 1e-5);
  for (std::size_t i = 0; i < h.size(); ++i) {
    out[i] = static_cast<float>(h[i] * scale);
  }
}

}  // namespace

ToyTransformer::ToyTransformer(ToyTransformerConfig config) : config_(config) {
  config_.validate();
  const auto d = static_cast<std::size_t>(config_.width);
  head_dim_ = config_.width / config_.heads;
  const double unit = std::sqrt(3.0 / static_cast<double>(d));

  RandomStream rng(mix64(config_.seed));
  fill_uniform(rng, token_embedding_, (static_cast<std::size_t>(config_.vocab_size) + 2) * d, 1.0);
  fill_uniform(rng, position_embedding_, static_cast<std::size_t>(config_.max_positions) * d, 0.5);
  layers_.resize(static_cast<std::size_t>(config_.layers));
  for (Layer& layer : layers_) {
    fill_uniform(rng, layer.wq, d * d, 1.5 * unit);
    fill_uniform(rng, layer.wk, d * d, 1.5 * unit);
    fill_uniform(rng, layer.wv, d * d, unit);
    fill_uniform(rng, layer.wo, d * d, 0.5 * unit);
    fill_uniform(rng, layer.w1, 4 * d * d, unit);
    fill_uniform(rng, layer.w2, 4 * d * d, 0.5 * std::sqrt(3.0 / (4.0 * static_cast<double>(d))));
  }
  fill_uniform(rng, output_head_, static_cast<std::size_t>(config_.vocab_size) * d, 2.0 * unit);
}

double ToyTransformer::parameter_checksum() const {
  double sum = 0.0;
  auto add = [&sum](const std::vector<float>& w) {
    for (float x : w) sum += x;
  };
  add(token_embedding_);
  add(position_embedding_);
  for (const Layer& l : layers_) {
    add(l.wq);
    add(l.wk);
    add(l.wv);
    add(l.wo);
    add(l.w1);
    add(l.w2);
  }
  add(output_head_);
  return sum;
}

void ToyTransformer::check_shape(const GridShape& shape) const {
  if (shape.raster_length() + 1 > config_.max_positions) {
    throw ConfigError("grid needs " + std::to_string(shape.raster_length() + 1) +
                      " positions, toy transformer has " +
                      std::to_string(config_.max_positions));
  }
}

void ToyTransformer::embed(std::size_t slot, TokenId token, float* h) const {
  const auto d = static_cast<std::size_t>(config_.width);
  const float* te = token_embedding_.data() + static_cast<std::size_t>(token) * d;
  const float* pe = position_embedding_.data() + slot * d;
  for (std::size_t i = 0; i < d; ++i) h[i] = te[i] + pe[i];
}

TokenId ToyTransformer::input_token(const detail::SlotInput& in) const {
  if (in.is_start) return config_.vocab_size;
  if (in.is_null) return config_.vocab_size + 1;
  return in.token;
}

void ToyTransformer::project(const Layer& layer, const float* h, Scratch& s,
                             float* k, float* v) const {
  const auto d = static_cast<std::size_t>(config_.width);
  rms_norm({h, d}, s.x);
  simd::matvec(layer.wq, s.x, s.q);
  simd::matvec(layer.wk, s.x, {k, d});
  simd::matvec(layer.wv, s.x, {v, d});
}

void ToyTransformer::attend_and_mix(const Layer& layer, float* h,
                                    const float* self_k, const float* self_v,
                                    const LayerContext& ctx, Scratch& s,
                                    std::vector<double>* head_avg_weights) const {
  const auto d = static_cast<std::size_t>(config_.width);
  const auto hd = static_cast<std::size_t>(head_dim_);
  const std::size_t n = ctx.keys.size() + 1;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));
  s.scores.resize(n);
  if (head_avg_weights != nullptr) head_avg_weights->assign(n, 0.0);
  std::fill(s.mixed.begin(), s.mixed.end(), 0.0f);

  for (int head = 0; head < config_.heads; ++head) {
    const std::size_t off = static_cast<std::size_t>(head) * hd;
    const std::span<const float> q{s.q.data() + off, hd};
    double max_score = -INFINITY;
    for (std::size_t c = 0; c < n; ++c) {
      const float* key = c + 1 < n ? ctx.keys[c] : self_k;
      s.scores[c] = simd::dot(q, {key + off, hd}) * inv_sqrt;
      max_score = std::max(max_score, s.scores[c]);
    }
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      s.scores[c] = std::exp(s.scores[c] - max_score);
      total += s.scores[c];
    }
    const std::span<float> out{s.mixed.data() + off, hd};
    for (std::size_t c = 0; c < n; ++c) {
      const double w = s.scores[c] / total;
      const float* value = c + 1 < n ? ctx.values[c] : self_v;
      simd::axpy(static_cast<float>(w), {value + off, hd}, out);
      if (head_avg_weights != nullptr) {
        (*head_avg_weights)[c] += w / config_.heads;
      }
    }
  }

  simd::matvec(layer.wo, s.mixed, s.proj);
  simd::axpy(1.0f, s.proj, {h, d});
  rms_norm({h, d}, s.x);
  simd::matvec(layer.w1, s.x, s.hidden);
  for (float& u : s.hidden) u = std::max(u, 0.0f);
  simd::matvec(layer.w2, s.hidden, s.proj);
  simd::axpy(1.0f, s.proj, {h, d});
}

LogitVector ToyTransformer::head(const float* h, Scratch& s) const {
  const auto d = static_cast<std::size_t>(config_.width);
  rms_norm({h, d}, s.x);
  std::vector<float> logits(static_cast<std::size_t>(config_.vocab_size));
  simd::matvec(output_head_, s.x, logits);
  return LogitVector{std::vector<double>(logits.begin(), logits.end())};
}

ToyTransformer::LayerContext ToyTransformer::cached_context(
    const ContextCache& cache, std::size_t below, int layer) const {
  const auto d = static_cast<std::size_t>(config_.width);
  const std::size_t offset = static_cast<std::size_t>(layer) * 2 * d;
  LayerContext ctx;
  for (std::size_t slot = 0; slot < below; ++slot) {
    if (!cache.present(slot)) continue;
    const float* base = cache.entry(slot).data() + offset;
    ctx.keys.push_back(base);
    ctx.values.push_back(base + d);
    ctx.slots.push_back(slot);
  }
  return ctx;
}

ContextCache ToyTransformer::make_cache(const GridShape& shape,
                                        const Conditioning& condition) const {
  check_shape(shape);
  detail::check_condition(shape, condition, config_.vocab_size);
  const auto d = static_cast<std::size_t>(config_.width);
  ContextCache cache(shape, 2 * d * layers_.size());
  Scratch s(config_.width);
  std::vector<float> h(d);
  for (std::size_t slot = 0; slot <= static_cast<std::size_t>(shape.prefix_len); ++slot) {
    const TokenId token =
        slot == 0 ? config_.vocab_size
        : condition.mode == ConditionMode::kUnconditional
            ? config_.vocab_size + 1
            : condition.prefix[slot - 1];
    embed(slot, token, h.data());
    std::span<float> entry = cache.write_entry(slot);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      float* k = entry.data() + l * 2 * d;
      project(layers_[l], h.data(), s, k, k + d);
      if (l + 1 < layers_.size()) {
        attend_and_mix(layers_[l], h.data(), k, k + d,
                       cached_context(cache, slot, static_cast<int>(l)), s, nullptr);
      }
    }
  }
  return cache;
}

void ToyTransformer::commit(ContextCache& cache, const Conditioning&,
                            Position pos, TokenId token) const {
  const auto d = static_cast<std::size_t>(config_.width);
  const std::size_t slot = model_slot(cache.shape(), pos);
  if (token < 0 || token >= config_.vocab_size) {
    throw IntegrityError("commit of token outside vocabulary");
  }
  Scratch s(config_.width);
  std::vector<float> h(d);
  embed(slot, token, h.data());
  std::span<float> entry = cache.write_entry(slot);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    float* k = entry.data() + l * 2 * d;
    project(layers_[l], h.data(), s, k, k + d);
    if (l + 1 < layers_.size()) {
      attend_and_mix(layers_[l], h.data(), k, k + d,
                     cached_context(cache, slot, static_cast<int>(l)), s, nullptr);
    }
  }
}

LogitVector ToyTransformer::query_with_attention(
    const ContextCache& cache, const DecodeState& state, const Query& query,
    const Conditioning& condition, std::vector<double>& slot_attention) const {
  detail::check_condition(state.shape(), condition, config_.vocab_size);
  check_cache_matches(cache, state);
  const auto d = static_cast<std::size_t>(config_.width);
  const detail::SlotInput in = detail::query_input(state, condition, query);
  Scratch s(config_.width);
  std::vector<float> h(d), k(d), v(d);
  embed(in.slot, input_token(in), h.data());
  std::vector<double> weights;
  LayerContext ctx;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    project(layers_[l], h.data(), s, k.data(), v.data());
    ctx = cached_context(cache, in.slot, static_cast<int>(l));
    const bool last = l + 1 == layers_.size();
    attend_and_mix(layers_[l], h.data(), k.data(), v.data(), ctx, s,
                   last ? &weights : nullptr);
  }
  slot_attention.assign(cache.slot_count(), 0.0);
  for (std::size_t c = 0; c < ctx.slots.size(); ++c) slot_attention[ctx.slots[c]] = weights[c];
  slot_attention[in.slot] = weights.back();
  return head(h.data(), s);
}

std::vector<LogitVector> ToyTransformer::forward_cached(
    const ContextCache& cache, const DecodeState& state,
    std::span<const Query> queries, const Conditioning& condition) const {
  detail::check_condition(state.shape(), condition, config_.vocab_size);
  check_cache_matches(cache, state);
  detail::check_queries(state, queries);
  const auto d = static_cast<std::size_t>(config_.width);
  Scratch s(config_.width);
  std::vector<float> h(d), k(d), v(d);
  std::vector<LogitVector> out;
  out.reserve(queries.size());
  for (const Query& q : queries) {
    const detail::SlotInput in = detail::query_input(state, condition, q);
    embed(in.slot, input_token(in), h.data());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      project(layers_[l], h.data(), s, k.data(), v.data());
      attend_and_mix(layers_[l], h.data(), k.data(), v.data(),
                     cached_context(cache, in.slot, static_cast<int>(l)), s, nullptr);
    }
    out.push_back(head(h.data(), s));
  }
  return out;
}

std::vector<LogitVector> ToyTransformer::forward(const DecodeState& state,
                                                 std::span<const Query> queries,
                                                 const Conditioning& condition) const {
  return forward_dense(state, queries, condition, ContextPolicy::kCommitTime);
}

std::vector<LogitVector> ToyTransformer::forward_dense(
    const DecodeState& state, std::span<const Query> queries,
    const Conditioning& condition, ContextPolicy policy) const {
  const GridShape& shape = state.shape();
  check_shape(shape);
  detail::check_condition(shape, condition, config_.vocab_size);
  detail::check_queries(state, queries);
  const auto d = static_cast<std::size_t>(config_.width);
  const auto prefix = static_cast<std::int64_t>(shape.prefix_len);

  // Committed slots in slot order. Start and prefix slots precede every
  // decoded token in commit order.
  struct Committed {
    std::size_t slot;
    TokenId token;
    std::int64_t seq;
  };
  std::vector<Committed> committed;
  committed.push_back({0, config_.vocab_size, -(prefix + 1)});
  for (std::int64_t p = 0; p < prefix; ++p) {
    const TokenId token = condition.mode == ConditionMode::kUnconditional
                              ? config_.vocab_size + 1
                              : condition.prefix[static_cast<std::size_t>(p)];
    committed.push_back({static_cast<std::size_t>(p + 1), token, p - prefix});
  }
  for (Position p : state.decoded_positions()) {
    committed.push_back({model_slot(shape, p), state.at(p), state.commit_seq(p)});
  }

  std::vector<std::vector<std::size_t>> context(committed.size());
  for (std::size_t a = 0; a < committed.size(); ++a) {
    for (std::size_t b = 0; b < a; ++b) {
      if (policy == ContextPolicy::kRecomputeAll || committed[b].seq < committed[a].seq) {
        context[a].push_back(b);
      }
    }
  }

  std::vector<detail::SlotInput> inputs;
  std::vector<std::size_t> query_context_end;
  for (const Query& q : queries) {
    inputs.push_back(detail::query_input(state, condition, q));
    std::size_t end = 0;
    while (end < committed.size() && committed[end].slot < inputs.back().slot) ++end;
    query_context_end.push_back(end);
  }

  std::vector<float> hs(committed.size() * d), keys(committed.size() * d),
      values(committed.size() * d);
  std::vector<float> hq(queries.size() * d), qk(d), qv(d);
  for (std::size_t a = 0; a < committed.size(); ++a) {
    embed(committed[a].slot, committed[a].token, hs.data() + a * d);
  }
  for (std::size_t q = 0; q < queries.size(); ++q) {
    embed(inputs[q].slot, input_token(inputs[q]), hq.data() + q * d);
  }

  Scratch s(config_.width);
  LayerContext ctx;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    const bool last = l + 1 == layers_.size();
    for (std::size_t a = 0; a < committed.size(); ++a) {
      float* h = hs.data() + a * d;
      project(layer, h, s, keys.data() + a * d, values.data() + a * d);
      if (last) continue;
      ctx.keys.clear();
      ctx.values.clear();
      for (std::size_t b : context[a]) {
        ctx.keys.push_back(keys.data() + b * d);
        ctx.values.push_back(values.data() + b * d);
      }
      attend_and_mix(layer, h, keys.data() + a * d, values.data() + a * d, ctx, s, nullptr);
    }
    for (std::size_t q = 0; q < queries.size(); ++q) {
      float* h = hq.data() + q * d;
      project(layer, h, s, qk.data(), qv.data());
      ctx.keys.clear();
      ctx.values.clear();
      for (std::size_t b = 0; b < query_context_end[q]; ++b) {
        ctx.keys.push_back(keys.data() + b * d);
        ctx.values.push_back(values.data() + b * d);
      }
      attend_and_mix(layer, h, qk.data(), qv.data(), ctx, s, nullptr);
    }
  }

  std::vector<LogitVector> out;
  out.reserve(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) out.push_back(head(hq.data() + q * d, s));
  return out;
}

}  // namespace zipar
