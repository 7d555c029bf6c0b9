// Copyright 2026 The unieval Authors.
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

#include <cmath>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "unieval/attribution.hpp"
#include "unieval/error.hpp"
#include "unieval/faithfulness.hpp"

using namespace unieval;

namespace {

const std::vector<std::string> kVocab{"a", "b", "c", "d", "e"};

// Head 0 attends uniformly; head 1 looks for "pos", which alone drives the
// class through the hidden unit.
ToyAttentionParams planted_heads() {
  ToyAttentionParams p;
  p.vocab = {"pos", "f"};
  p.dim = 2;
  p.heads = 2;
  p.head_dim = 2;
  p.hidden = 1;
  p.embedding = {{4.0, 0.0}, {0.0, 1.0}};
  p.start_embedding = {1.0, 0.0};
  p.oov_embedding = {0.0, 0.0};
  p.wq = {{0, 0, 0, 0}, {1, 0, 0, 1}};
  p.wk = {{1, 0, 0, 1}, {1, 0, 0, 1}};
  p.wv = {{1, 0, 0, 1}, {1, 0, 0, 1}};
  p.w1 = {0, 0, 1, 0};
  p.b1 = {-1.5};
  p.w2 = {0, 5};
  p.b2 = {0, 0};
  return p;
}

}  // namespace

TEST_CASE("IG on the linear model is the closed form for any step count") {
  const auto params = testing::small_linear(kVocab, 13);
  const auto model = make_linear_bow_model(params);
  Rng rng(3);
  for (int t = 0; t < 10; ++t) {
    const auto x = testing::random_instance(rng, kVocab, 3, 4);
    for (int steps : {1, 2, 50, 333}) {
      for (int target : {0, 1}) {
        const auto ig = integrated_gradients(*model, x, steps, target);
        for (int i = 0; i < x.size(); ++i) {
          const auto row = model->row(x.token(i));
          const double sign = target == 1 ? 1.0 : -1.0;
          CHECK(std::fabs(ig.scores[static_cast<std::size_t>(i)] - sign * (row[1] - row[0]) / 2.0) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("IG completeness on the toy attention model") {
  const auto model = make_toy_attention_model(kVocab, "[MASK]", 101);
  Rng rng(10);
  double gap50 = 0.0, gap200 = 0.0;
  for (int t = 0; t < 50; ++t) {
    const auto x = testing::random_instance(rng, kVocab, 3, 3);
    const int target = model->predict(x.tokens()).label;
    const double full = centered_logit(model->predict(x.tokens()), target);
    const double base = centered_logit(model->predict(all_mask(x, "[MASK]")), target);
    const auto ig = integrated_gradients(*model, x, 200, target);
    const double sum = std::accumulate(ig.scores.begin(), ig.scores.end(), 0.0);
    CHECK(std::fabs(sum - (full - base)) <= 1e-2);
    gap200 += std::fabs(sum - (full - base));
    const auto coarse = integrated_gradients(*model, x, 50, target);
    gap50 += std::fabs(std::accumulate(coarse.scores.begin(), coarse.scores.end(), 0.0) - (full - base));
  }
  CHECK(gap200 <= gap50);
}

TEST_CASE("shapley sets have the documented kinds and sizes") {
  const ModelPtr model = make_linear_bow_model(testing::small_linear(kVocab, 1));
  const auto x = testing::make_instance("i", {"a", "b", "c"}, {"d", "e"});
  MethodOptions o;
  o.seed = 5;
  const auto sets = explain_instance("shapley", model, x, 0, o);
  REQUIRE(sets.size() == 3);
  CHECK(sets[0].kind == ExplanationKind::kToken);
  CHECK(sets[0].entries.size() == 5);
  CHECK(sets[1].kind == ExplanationKind::kTokenPair);
  CHECK(sets[1].entries.size() == 6);
  CHECK(sets[2].kind == ExplanationKind::kSpanPair);
  // Efficiency of the token set.
  ModelGame g(model, x);
  double sum = 0.0;
  for (const auto& e : sets[0].entries) sum += e.score;
  CHECK(std::fabs(sum - (g.full_value() - g.empty_value())) <= 1e-12);
}

TEST_CASE("capability check names what is missing") {
  const auto linear = make_linear_bow_model(testing::small_linear(kVocab, 1));
  try {
    check_method_capability("attention", *linear);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kCapability);
    CHECK(std::string(e.what()).find("attention") != std::string::npos);
  }
  CHECK_NOTHROW(check_method_capability("ig", *linear));
  const auto constant = make_constant_model({0.5, 0.5});
  CHECK_THROWS_AS(check_method_capability("ig", *constant), Error);
}

TEST_CASE("select_head picks the head that attends to the decisive token") {
  const auto model = make_toy_attention_model(planted_heads());
  std::vector<Instance> calib{testing::make_instance("1", {"f", "pos"}, {"f", "f"}),
                              testing::make_instance("2", {"f", "f"}, {"pos", "f"}),
                              testing::make_instance("3", {"f", "f", "pos"}, {"f"})};
  for (const auto& x : calib) REQUIRE(model->predict(x.tokens()).label == 1);
  // Comprehensiveness of each head's top token, computed directly.
  int comp0 = 0, comp1 = 0;
  for (const auto& x : calib) {
    const int y = model->predict(x.tokens()).label;
    const auto t0 = attention_token(*model, x, 0, "a").entries[0].unit[0];
    const auto t1 = attention_token(*model, x, 1, "a").entries[0].unit[0];
    comp0 += model->predict(mask_omit(x, {t0}, "[MASK]")).label != y;
    comp1 += model->predict(mask_omit(x, {t1}, "[MASK]")).label != y;
  }
  CHECK(comp1 > comp0);
  CHECK(select_head(*model, calib, {0, 1}, 1) == 1);
}

TEST_CASE("attention interaction averages both directions") {
  const auto model = make_toy_attention_model(kVocab, "[MASK]", 7);
  const auto x = testing::make_instance("i", {"a", "b"}, {"c", "d", "e"});
  const auto map = model->attention(x.tokens());
  const auto g = attention_graph(map, x, 1);
  const auto set = attention_interaction(x, g, "attention");
  CHECK(set.entries.size() == 6);
  for (const auto& e : set.entries) {
    const int p = e.unit[0], q = e.unit[1];
    const double want = (map.heads[1].at(map.position_of(p), map.position_of(q)) +
                         map.heads[1].at(map.position_of(q), map.position_of(p))) /
                        2.0;
    CHECK(e.score == doctest::Approx(want).epsilon(1e-15));
  }
}

TEST_CASE("explain_dataset parallel equals serial") {
  const ModelPtr model = make_linear_bow_model(testing::small_linear(kVocab, 4));
  Rng rng(6);
  std::vector<Instance> data;
  for (int i = 0; i < 12; ++i) data.push_back(testing::random_instance(rng, kVocab, 3, 3, "i" + std::to_string(i)));
  MethodOptions o;
  o.seed = 77;
  for (const std::string method : {"shapley", "kernel-shapley"}) {
    const auto a = explain_dataset(method, model, data, o, true);
    const auto b = explain_dataset(method, model, data, o, false);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      for (const auto& x : data) {
        const auto& ea = a[k].at(x.id).entries;
        const auto& eb = b[k].at(x.id).entries;
        REQUIRE(ea.size() == eb.size());
        for (std::size_t e = 0; e < ea.size(); ++e) {
          CHECK(ea[e].unit == eb[e].unit);
          CHECK(ea[e].score == eb[e].score);
        }
      }
    }
  }
}

TEST_CASE("serial and OpenMP kernels are bit-identical") {
  Rng rng(14);
  for (int n : {1, 5, 11}) {
    const auto g = testing::random_game(n, rng);
    const auto t = coalition_table(g);
    CHECK(t == kernels::serial::coalition_table(g));
    CHECK(shapley_from_table(t, n) == kernels::serial::shapley_from_table(t, n));
    CHECK(directed_bivariate_from_table(t, n) == kernels::serial::directed_bivariate_from_table(t, n));
  }
}
