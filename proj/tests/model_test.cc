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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "test_support.h"
#include "zipar/engine.h"
#include "zipar/errors.h"
#include "zipar/local_oracle.h"
#include "zipar/model.h"
#include "zipar/simd/kernels.h"
#include "zipar/toy_transformer.h"

namespace zipar {
namespace {

using testing::small_toy;

double max_abs_diff(const LogitVector& a, const LogitVector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.scores.size(); ++i) {
    m = std::max(m, std::abs(a.scores[i] - b.scores[i]));
  }
  return m;
}

// Commits row-major until `count` image tokens are present, token = (i*7+j) % V.
void fill_raster(DecodeState& st, ContextCache* cache, const ModelBackend* backend,
                 const Conditioning& cond, int count) {
  const GridShape& s = st.shape();
  int done = 0;
  for (int i = 0; i < s.rows && done < count; ++i) {
    for (int j = 0; j < s.row_stride() && done < count; ++j) {
      const TokenId t = j == s.cols ? *s.eor_token_id : (i * 7 + j) % s.vocab_size;
      st.commit({i, j}, t);
      if (cache) backend->commit(*cache, cond, {i, j}, t);
      if (j < s.cols) ++done;
    }
  }
}

TEST(AvailabilityMaskTest, ExcludesLaterRasterPositions) {
  const GridShape shape = make_shape(3, 4, 8, false, 2);
  DecodeState st(shape);
  st.commit({0, 0}, 1);
  st.commit({0, 1}, 1);
  st.commit({1, 0}, 1);
  // Query (0, 2): (1, 0) lies later in raster order and must be excluded.
  EXPECT_EQ(availability_mask(st, {0, 2}), (std::vector<std::int64_t>{0, 1, 2, 3}));
  EXPECT_EQ(availability_mask(st, {1, 1}), (std::vector<std::int64_t>{0, 1, 2, 3, 6}));
  EXPECT_EQ(availability_mask(st, {0, 0}), (std::vector<std::int64_t>{0, 1}));
}

TEST(AvailabilityMaskTest, IncludesPreInsertedEor) {
  const GridShape shape = make_shape(2, 2, 8, true);
  DecodeState st(shape);
  st.commit({0, 0}, 1);
  st.commit({0, 2}, 7);
  EXPECT_EQ(availability_mask(st, {1, 0}), (std::vector<std::int64_t>{0, 2}));
}

TEST(ContextCacheTest, DoubleCommitThrows) {
  const ToyTransformer toy(small_toy());
  const GridShape shape = make_shape(2, 2, 32);
  const auto cond = Conditioning::conditional({});
  ContextCache cache = toy.make_cache(shape, cond);
  EXPECT_EQ(cache.present_count(), 1u);
  toy.commit(cache, cond, {0, 0}, 3);
  EXPECT_THROW(toy.commit(cache, cond, {0, 0}, 3), IntegrityError);
  EXPECT_THROW(cache.entry(model_slot(shape, {0, 1})), IntegrityError);
}

TEST(ContextCacheTest, MismatchWithStateIsDetected) {
  const ToyTransformer toy(small_toy());
  const GridShape shape = make_shape(2, 2, 32);
  const auto cond = Conditioning::conditional({});
  ContextCache cache = toy.make_cache(shape, cond);
  DecodeState st(shape);
  st.commit({0, 0}, 3);
  EXPECT_THROW(check_cache_matches(cache, st), IntegrityError);
  const Query q{{0, 1}, std::nullopt};
  EXPECT_THROW(toy.forward_cached(cache, st, {&q, 1}, cond), IntegrityError);
  toy.commit(cache, cond, {0, 0}, 3);
  check_cache_matches(cache, st);
  ContextCache other = toy.make_cache(make_shape(2, 3, 32), cond);
  EXPECT_THROW(check_cache_matches(other, st), IntegrityError);
}

TEST(ToyTransformerTest, ParametersAreReproducibleFromTheSeed) {
  const ToyTransformer a(small_toy(32, 1)), b(small_toy(32, 1)), c(small_toy(32, 2));
  EXPECT_EQ(a.parameter_checksum(), b.parameter_checksum());
  EXPECT_NE(a.parameter_checksum(), c.parameter_checksum());
}

TEST(ToyTransformerTest, ConfigValidation) {
  auto c = small_toy();
  c.heads = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_toy();
  c.layers = 0;
  EXPECT_THROW(ToyTransformer{c}, ConfigError);
  c = small_toy();
  c.max_positions = 8;
  const ToyTransformer toy(c);
  EXPECT_THROW(toy.make_cache(make_shape(3, 3, 32), Conditioning::conditional({})), ConfigError);
}

TEST(ToyTransformerTest, SidecarRoundTrip) {
  const auto c = small_toy(48, 99);
  const auto path = std::filesystem::temp_directory_path() / "zipar_sidecar_test.json";
  write_sidecar(path.string(), c);
  const ToyTransformerConfig back = read_sidecar(path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.vocab_size, 48);
  EXPECT_EQ(back.width, c.width);
  EXPECT_EQ(back.heads, c.heads);
  EXPECT_EQ(back.layers, c.layers);
  EXPECT_EQ(ToyTransformer(back).parameter_checksum(), ToyTransformer(c).parameter_checksum());
  EXPECT_THROW(toy_config_from_json("{\"seed\":1}"), ConfigError);
}

TEST(ToyTransformerTest, PlaceholderIsRequiredForUndecodedInputSlot) {
  const ToyTransformer toy(small_toy());
  const GridShape shape = make_shape(2, 3, 32);
  const auto cond = Conditioning::conditional({});
  DecodeState st(shape);
  ContextCache cache = toy.make_cache(shape, cond);
  fill_raster(st, &cache, &toy, cond, 2);
  const Query missing{{1, 0}, std::nullopt};
  EXPECT_THROW(toy.forward_cached(cache, st, {&missing, 1}, cond), IntegrityError);
  const Query with{{1, 0}, TokenId{5}};
  const Query other{{1, 0}, TokenId{6}};
  const auto a = toy.forward_cached(cache, st, {&with, 1}, cond);
  const auto b = toy.forward_cached(cache, st, {&other, 1}, cond);
  EXPECT_GT(max_abs_diff(a[0], b[0]), 0.0);
}

TEST(ToyTransformerTest, DuplicateQueriesAreRejected) {
  const ToyTransformer toy(small_toy());
  const GridShape shape = make_shape(2, 2, 32);
  const auto cond = Conditioning::conditional({});
  DecodeState st(shape);
  const ContextCache cache = toy.make_cache(shape, cond);
  const std::vector<Query> qs{{{0, 0}, std::nullopt}, {{0, 0}, std::nullopt}};
  EXPECT_THROW(toy.forward_cached(cache, st, qs, cond), DomainError);
}

TEST(ToyTransformerTest, ConditioningMustMatchTheShape) {
  const ToyTransformer toy(small_toy());
  const GridShape shape = make_shape(2, 2, 32, false, 2);
  EXPECT_THROW(toy.make_cache(shape, Conditioning::conditional({1})), ConfigError);
  EXPECT_THROW(toy.make_cache(shape, Conditioning::conditional({1, 32})), ConfigError);
  EXPECT_THROW(toy.make_cache(make_shape(2, 2, 16), Conditioning::conditional({})), ConfigError);
  toy.make_cache(shape, Conditioning::unconditional(2));
}

TEST(ToyTransformerTest, CausalityIgnoresTokensOutsideTheMask) {
  // Tokens from lower rows lie after the query in raster order; changing
  // them must not move the query's logits, while masked-in tokens must.
  const ToyTransformer toy(small_toy());
  const GridShape shape = make_shape(3, 4, 32);
  const auto cond = Conditioning::conditional({});
  auto build = [&](TokenId lower, TokenId left) {
    DecodeState st(shape);
    ContextCache cache = toy.make_cache(shape, cond);
    auto put = [&](Position p, TokenId t) {
      st.commit(p, t);
      toy.commit(cache, cond, p, t);
    };
    put({0, 0}, left);
    put({0, 1}, 2);
    put({0, 2}, 3);
    put({1, 0}, lower);
    const Query q{{0, 3}, std::nullopt};
    return toy.forward_cached(cache, st, {&q, 1}, cond)[0];
  };
  EXPECT_EQ(max_abs_diff(build(4, 1), build(9, 1)), 0.0);
  EXPECT_GT(max_abs_diff(build(4, 1), build(4, 8)), 1e-6);
}

TEST(ToyTransformerTest, CachedForwardMatchesDenseDuringFixedDecoding) {
  const ToyTransformer toy(small_toy());
  for (bool eor : {false, true}) {
    const GridShape shape = make_shape(6, 6, 32, eor, 1);
    GenerationOptions options;
    options.prefix = {5};
    std::int64_t checked = 0;
    double worst = 0.0;
    options.observer = [&](const StepView& view) {
      const auto dense = toy.forward(view.state, view.queries, view.condition);
      for (std::size_t q = 0; q < dense.size(); ++q) {
        worst = std::max(worst, max_abs_diff(dense[q], view.logits[q]));
        ++checked;
      }
    };
    generate_fixed(shape, 2, toy, options, 3);
    EXPECT_EQ(checked, shape.image_tokens());
    EXPECT_LT(worst, 1e-5) << "eor=" << eor;
  }
}

TEST(ToyTransformerTest, ForwardDoesNotWriteTheCache) {
  const ToyTransformer toy(small_toy());
  const GridShape shape = make_shape(3, 3, 32);
  const auto cond = Conditioning::conditional({});
  DecodeState st(shape);
  ContextCache cache = toy.make_cache(shape, cond);
  fill_raster(st, &cache, &toy, cond, 4);
  const std::size_t before = cache.present_count();
  const std::vector<Query> qs{{{1, 1}, std::nullopt}, {{2, 0}, TokenId{1}}};
  const auto a = toy.forward_cached(cache, st, qs, cond);
  const auto b = toy.forward_cached(cache, st, qs, cond);
  EXPECT_EQ(cache.present_count(), before);
  EXPECT_EQ(a[0].scores, b[0].scores);
  EXPECT_EQ(a[1].scores, b[1].scores);
}

TEST(ToyTransformerTest, CommitTimeContextDiffersFromRecomputeAll) {
  // Window 2 on W = 6: (1, 0) is committed before (0, 2) exists and keeps
  // its partial-context entry. Recomputing it with full context changes the
  // logits of later queries that attend to it. Query (1, 2) reads the (1, 0)
  // entry; its own input slot (1, 1) is recomputed either way.
  const ToyTransformer toy(small_toy());
  const GridShape shape = make_shape(2, 6, 32);
  const auto cond = Conditioning::conditional({});
  DecodeState st(shape);
  for (int j = 0; j < 2; ++j) st.commit({0, j}, j + 1);
  st.commit({1, 0}, 9);
  for (int j = 2; j < 6; ++j) st.commit({0, j}, j + 1);
  st.commit({1, 1}, 4);
  const Query q{{1, 2}, std::nullopt};
  const auto commit_time = toy.forward_dense(st, {&q, 1}, cond, ToyTransformer::ContextPolicy::kCommitTime);
  const auto recompute = toy.forward_dense(st, {&q, 1}, cond, ToyTransformer::ContextPolicy::kRecomputeAll);
  EXPECT_GT(max_abs_diff(commit_time[0], recompute[0]), 1e-6);

  // In raster commit order the two policies coincide.
  DecodeState ordered(shape);
  fill_raster(ordered, nullptr, nullptr, cond, 7);
  const Query q2{{1, 1}, std::nullopt};
  const auto a = toy.forward_dense(ordered, {&q2, 1}, cond, ToyTransformer::ContextPolicy::kCommitTime);
  const auto b = toy.forward_dense(ordered, {&q2, 1}, cond, ToyTransformer::ContextPolicy::kRecomputeAll);
  EXPECT_LT(max_abs_diff(a[0], b[0]), 1e-5);
}

TEST(ToyTransformerTest, UnconditionalContextUsesTheNullPrefix) {
  const ToyTransformer toy(small_toy());
  const GridShape shape = make_shape(2, 2, 32, false, 1);
  DecodeState st(shape);
  const Query q{{0, 0}, std::nullopt};
  const auto c3 = toy.forward(st, {&q, 1}, Conditioning::conditional({3}));
  const auto c4 = toy.forward(st, {&q, 1}, Conditioning::conditional({4}));
  const auto u = toy.forward(st, {&q, 1}, Conditioning::unconditional(1));
  Conditioning u_other = Conditioning::unconditional(1);
  u_other.prefix = {4};
  const auto u2 = toy.forward(st, {&q, 1}, u_other);
  EXPECT_GT(max_abs_diff(c3[0], c4[0]), 1e-6);
  EXPECT_GT(max_abs_diff(c3[0], u[0]), 1e-6);
  EXPECT_EQ(u[0].scores, u2[0].scores);
}

TEST(ToyTransformerTest, AttentionWeightsAreAMaskedDistribution) {
  const ToyTransformer toy(small_toy());
  const GridShape shape = make_shape(3, 4, 32, false, 1);
  const auto cond = Conditioning::conditional({2});
  DecodeState st(shape);
  ContextCache cache = toy.make_cache(shape, cond);
  auto put = [&](Position p, TokenId t) {
    st.commit(p, t);
    toy.commit(cache, cond, p, t);
  };
  put({0, 0}, 1);
  put({0, 1}, 2);
  put({1, 0}, 3);
  put({0, 2}, 4);
  const Query q{{1, 1}, std::nullopt};
  std::vector<double> w;
  const LogitVector via_attention = toy.query_with_attention(cache, st, q, cond, w);
  EXPECT_EQ(via_attention.scores, toy.forward_cached(cache, st, {&q, 1}, cond)[0].scores);
  ASSERT_EQ(w.size(), cache.slot_count());
  EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
  const auto mask = availability_mask(st, q.pos);
  std::vector<bool> allowed(w.size(), false);
  allowed[0] = true;
  for (auto r : mask) allowed[static_cast<std::size_t>(r) + 1] = true;
  for (std::size_t s = 0; s < w.size(); ++s) {
    EXPECT_GE(w[s], 0.0);
    if (!allowed[s]) {
      EXPECT_EQ(w[s], 0.0) << "slot " << s;
    }
  }
  // (0, 3) is undecoded, so nothing may land on it.
  EXPECT_EQ(w[model_slot(shape, {0, 3})], 0.0);
}

TEST(ToyTransformerTest, KernelVariantsGiveIdenticalLogits) {
  if (simd::avx2_kernels() == nullptr) GTEST_SKIP() << "AVX2/FMA unavailable";
  const simd::SimdLevel before = simd::active_kernels().level;
  auto run = [](simd::SimdLevel level) {
    simd::select_kernels(level);
    const ToyTransformer toy(small_toy());
    GenerationOptions options;
    options.record_distributions = true;
    return generate_fixed(make_shape(5, 5, 32), 2, toy, options, 11);
  };
  const GenerationResult scalar = run(simd::SimdLevel::kScalar);
  const GenerationResult avx2 = run(simd::SimdLevel::kAvx2);
  simd::select_kernels(before);
  EXPECT_EQ(scalar.grid, avx2.grid);
  ASSERT_EQ(scalar.distributions.size(), avx2.distributions.size());
  for (std::size_t k = 0; k < scalar.distributions.size(); ++k) {
    EXPECT_EQ(scalar.distributions[k], avx2.distributions[k]) << "token " << k;
  }
}

TEST(LocalOracleTest, LogitsDependOnlyOnTheNeighbourhood) {
  const LocalOracle oracle({.radius = 2, .vocab_size = 16, .seed = 3});
  const GridShape shape = make_shape(3, 5, 16);
  const auto cond = Conditioning::conditional({});
  auto logits_at = [&](TokenId far) {
    DecodeState st(shape);
    for (int j = 0; j < 5; ++j) st.commit({0, j}, j == 4 ? far : j);
    st.commit({1, 0}, 7);
    st.commit({1, 1}, 8);
    const Query q{{1, 2}, std::nullopt};
    return oracle.forward(st, {&q, 1}, cond)[0];
  };
  // (0, 4) lies outside {x(1,1), x(0,2), x(0,3)}.
  EXPECT_EQ(logits_at(4).scores, logits_at(11).scores);

  DecodeState st(shape);
  st.commit({0, 0}, 1);
  st.commit({0, 1}, 2);
  EXPECT_EQ(oracle.neighbourhood(st, {1, 0}), (std::vector<TokenId>{-1, 1, 2}));
  EXPECT_EQ(oracle.neighbourhood(st, {0, 2}), (std::vector<TokenId>{2, -1, -1}));
  EXPECT_EQ(oracle.neighbourhood(st, {1, 1}), (std::vector<TokenId>{-1, 2, -1}));
}

TEST(LocalOracleTest, LogitsAreBoundedAndSeeded) {
  const LocalOracle a({.radius = 1, .vocab_size = 64, .seed = 1, .sharpness = 2.0});
  const LocalOracle b({.radius = 1, .vocab_size = 64, .seed = 2, .sharpness = 2.0});
  const auto cond = Conditioning::conditional({});
  const auto la = a.logits_for({-1, -1}, cond);
  const auto lb = b.logits_for({-1, -1}, cond);
  EXPECT_NE(la.scores, lb.scores);
  for (double x : la.scores) {
    EXPECT_GE(x, -2.0);
    EXPECT_LE(x, 2.0);
  }
  EXPECT_NE(la.scores, a.logits_for({-1, -1}, Conditioning::unconditional(0)).scores);
  EXPECT_THROW(LocalOracle({.radius = 0}), ConfigError);
}

TEST(LocalOracleTest, CacheMustTrackTheState) {
  const LocalOracle oracle({.radius = 1, .vocab_size = 8});
  const GridShape shape = make_shape(2, 2, 8);
  const auto cond = Conditioning::conditional({});
  ContextCache cache = oracle.make_cache(shape, cond);
  DecodeState st(shape);
  st.commit({0, 0}, 1);
  const Query q{{0, 1}, std::nullopt};
  EXPECT_THROW(oracle.forward_cached(cache, st, {&q, 1}, cond), IntegrityError);
  oracle.commit(cache, cond, {0, 0}, 1);
  EXPECT_EQ(oracle.forward_cached(cache, st, {&q, 1}, cond)[0].scores,
            oracle.forward(st, {&q, 1}, cond)[0].scores);
}

}  // namespace
}  // namespace zipar
