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

#include "doctest.h"
#include "helpers.hpp"
#include "unieval/attribution.hpp"
#include "unieval/error.hpp"
#include "unieval/model.hpp"
#include "unieval/toy_models.hpp"

using namespace unieval;
using testing::make_instance;

namespace {

// dim 2, one head of width 2, identity projections; the start token embeds
// to (1, 0).
ToyAttentionParams hand_attention(double hot) {
  ToyAttentionParams p;
  p.vocab = {"hot", "x"};
  p.dim = 2;
  p.heads = 1;
  p.head_dim = 2;
  p.hidden = 2;
  p.embedding = {{hot, 0.0}, {0.0, 1.0}};
  p.start_embedding = {1.0, 0.0};
  p.oov_embedding = {0.0, 0.0};
  p.wq = {{1, 0, 0, 1}};
  p.wk = {{1, 0, 0, 1}};
  p.wv = {{1, 0, 0, 1}};
  p.w1 = {1, 0, 0, 1};
  p.b1 = {0, 0};
  p.w2 = {1, 0, 0, 1};
  p.b2 = {0, 0};
  return p;
}

}  // namespace

TEST_CASE("mask helpers keep length and boundary") {
  const auto x = make_instance("a", {"a", "dog"}, {"an", "animal"});
  CHECK(mask_omit(x, {1}, "[MASK]") == TokenSeq{"a", "[MASK]", "an", "animal"});
  CHECK(mask_keep(x, {1, 3}, "[MASK]") == TokenSeq{"[MASK]", "dog", "[MASK]", "animal"});
  CHECK(all_mask(x, "_") == TokenSeq{"_", "_", "_", "_"});
  CHECK(mask_omit(x, {}, "[MASK]") == x.tokens());
  CHECK_THROWS_AS(mask_omit(x, {4}, "[MASK]"), Error);
}

TEST_CASE("linear model evaluates the closed-form softmax") {
  LinearBowParams p;
  p.vocab = {"dog", "cat"};
  p.weights = {{0.0, 2.0}, {0.5, 0.0}};
  p.bias = {0.1, -0.1};
  const auto model = make_linear_bow_model(p);
  const auto x = make_instance("a", {"a", "dog"}, {"an", "animal"});
  const auto pred = model->predict(x.tokens());
  // logits (0.1, 1.9)
  const double e0 = std::exp(0.1), e1 = std::exp(1.9);
  CHECK(pred.label == 1);
  CHECK(pred.probs[1] == doctest::Approx(e1 / (e0 + e1)).epsilon(1e-14));

  // Two tokens by hand: cat + cat gives (1.1, -0.1).
  const auto two = model->predict({"cat", "cat"});
  const double a = std::exp(1.1), b = std::exp(-0.1);
  CHECK(two.label == 0);
  CHECK(two.probs[0] == doctest::Approx(a / (a + b)).epsilon(1e-14));
}

TEST_CASE("make_prediction validates and breaks ties low") {
  CHECK(make_prediction({0.5, 0.5}).label == 0);
  CHECK_THROWS_AS(make_prediction({0.6, 0.6}), Error);
  CHECK_THROWS_AS(make_prediction({-0.1, 1.1}), Error);
  const auto p = make_prediction({0.2, 0.8});
  CHECK(centered_logit(p, 1) == doctest::Approx((std::log(0.8) - std::log(0.2)) / 2.0));
}

TEST_CASE("capabilities are enforced") {
  const auto model = make_constant_model({0.7, 0.3});
  try {
    model->grad_dot({"a"}, {"[MASK]"}, 0.5, 0);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kCapability);
  }
  CHECK_THROWS_AS(model->attention({"a"}), Error);
}

TEST_CASE("linear grad_dot is alpha independent and zero along zero direction") {
  const auto model = make_linear_bow_model(testing::small_linear({"a", "b", "c"}, 3));
  const TokenSeq x{"a", "b", "c", "a"};
  const TokenSeq base(4, "[MASK]");
  const auto g1 = model->grad_dot(x, base, 0.1, 1);
  const auto g2 = model->grad_dot(x, base, 0.9, 1);
  CHECK(g1 == g2);
  for (double v : model->grad_dot(x, x, 0.5, 1)) CHECK(v == 0.0);
}

TEST_CASE("toy attention grad_dot matches finite differences along the path") {
  const std::vector<std::string> vocab{"a", "b", "c", "d"};
  const auto model = make_toy_attention_model(vocab, "[MASK]", 17);
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = testing::random_instance(rng, vocab, 3, 2);
    const auto x = inst.tokens();
    const TokenSeq base(x.size(), "[MASK]");
    for (double alpha : {0.25, 0.5, 0.8}) {
      for (int target : {0, 1}) {
        const auto g = model->grad_dot(x, base, alpha, target);
        const double h = 1e-5;
        for (std::size_t i = 0; i < x.size(); ++i) {
          std::vector<double> up(x.size(), alpha), dn(x.size(), alpha);
          up[i] += h;
          dn[i] -= h;
          auto centered = [&](const std::vector<double>& l) {
            return l[static_cast<std::size_t>(target)] - (l[0] + l[1]) / 2.0;
          };
          const double fd =
              (centered(model->path_logits(x, base, up)) - centered(model->path_logits(x, base, dn))) /
              (2.0 * h);
          CHECK(std::fabs(g[i] - fd) <= 1e-3);
        }
      }
    }
  }
}

TEST_CASE("path_logits at alpha 1 and 0 hit the endpoints") {
  const auto model = make_toy_attention_model({"a", "b"}, "[MASK]", 4);
  const TokenSeq x{"a", "b", "b"};
  const TokenSeq base(3, "[MASK]");
  const std::vector<double> ones(3, 1.0), zeros(3, 0.0);
  CHECK(model->path_logits(x, base, ones) == model->logits(x));
  CHECK(model->path_logits(x, base, zeros) == model->logits(base));
}

TEST_CASE("equal query/key logits give uniform attention rows") {
  auto p = hand_attention(5.0);
  p.wq = {{0, 0, 0, 0}};
  const auto model = make_toy_attention_model(p);
  const auto map = model->attention({"hot", "x"});
  REQUIRE(map.positions() == 3);
  CHECK(map.alignment == std::vector<int>{-1, 0, 1});
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) CHECK(map.heads[0].at(r, c) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  map.validate();
}

TEST_CASE("token dominating key similarity ranks first") {
  const auto model = make_toy_attention_model(hand_attention(5.0));
  const auto x = make_instance("h", {"x"}, {"hot"});
  const auto map = model->attention(x.tokens());
  // Scores from the start query (1, 0): start 1/sqrt2, x 0, hot 5/sqrt2.
  const double s = 1.0 / std::sqrt(2.0);
  const double z = std::exp(s) + 1.0 + std::exp(5.0 * s);
  CHECK(map.heads[0].at(0, 2) == doctest::Approx(std::exp(5.0 * s) / z).epsilon(1e-14));
  const auto set = attention_token(*model, x, 0, "attention");
  CHECK(set.entries[0].unit == ExplanationUnit::token(1));
}

TEST_CASE("attention map validation") {
  AttentionMap m;
  m.alignment = {-1, 0};
  SquareMatrix a(2);
  a.at(0, 0) = 0.5;
  a.at(0, 1) = 0.6;
  a.at(1, 1) = 1.0;
  m.heads.push_back(a);
  CHECK_THROWS_AS(m.validate(), Error);
  CHECK(m.anchor_position() == 0);
  CHECK(m.position_of(0) == 1);
}

TEST_CASE("params survive json") {
  const auto lp = testing::small_linear({"a", "b"}, 1);
  const auto back = linear_params_from_json(to_json(lp));
  CHECK(back.weights == lp.weights);
  CHECK(back.bias == lp.bias);
  const auto ap = random_attention_params({"a", "b"}, 2, 4, 2, 2, 4, 8);
  const auto aback = attention_params_from_json(to_json(ap));
  CHECK(aback.wq == ap.wq);
  CHECK(aback.w2 == ap.w2);
}
