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

#include <algorithm>

#include "doctest.h"
#include "unieval/attribution.hpp"
#include "unieval/error.hpp"
#include "unieval/synth.hpp"

using namespace unieval;

TEST_CASE("synthetic task is deterministic and consistent") {
  SynthSpec spec;
  spec.instances = 120;
  const auto a = generate(spec);
  const auto b = generate(spec);
  REQUIRE(a.records.size() == 120);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(serialize_record(a.records[i]) == serialize_record(b.records[i]));
    const auto& r = a.records[i];
    if (r.gold) r.gold->validate(r.instance);
    CHECK(r.gold.has_value() == (a.clean_labels[i] == 1));
  }
  CHECK(a.models_json() == b.models_json());
  spec.seed += 1;
  CHECK(serialize_record(generate(spec).records[0]) != serialize_record(a.records[0]));
}

TEST_CASE("infeasible settings are rejected") {
  SynthSpec spec;
  spec.m_min = 9;
  spec.m_max = 3;
  CHECK_THROWS_AS(generate(spec), Error);
  SynthSpec rates;
  rates.positive_rate = 0.9;
  rates.decoy_rate = 0.5;
  CHECK_THROWS_AS(generate(rates), Error);
}

TEST_CASE("linear model separates the clean labels") {
  SynthSpec spec;
  spec.instances = 300;
  const auto out = generate(spec);
  const auto model = make_linear_bow_model(out.linear);
  int right = 0;
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    right += model->predict(out.records[i].instance.tokens()).label == out.clean_labels[i];
  }
  CHECK(right >= 285);
}

TEST_CASE("attention model reads the planted pair") {
  SynthSpec spec;
  spec.instances = 300;
  const auto out = generate(spec);
  const auto model = make_toy_attention_model(out.attention);
  int right = 0;
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    right += model->predict(out.records[i].instance.tokens()).label == out.clean_labels[i];
  }
  CHECK(static_cast<double>(right) / 300.0 >= 0.95);
}

TEST_CASE("exact Shapley ranks the planted heads first") {
  SynthSpec spec;
  spec.instances = 300;
  spec.seed = 1234;
  const auto out = generate(spec);
  const ModelPtr model = make_linear_bow_model(out.linear);
  int eligible = 0, hits = 0;
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    const auto& r = out.records[i];
    // Clean positives with exactly one planted pair and an unflipped label.
    if (!r.gold || r.gold->pair_gold->size() != 1 || r.instance.label != out.clean_labels[i]) continue;
    ++eligible;
    const auto set = exact_shapley_set(ModelGame(model, r.instance), "shapley");
    TokenSet top{set.entries[0].unit[0], set.entries[1].unit[0]};
    std::sort(top.begin(), top.end());
    hits += top == *r.gold->token_gold;
  }
  REQUIRE(eligible >= 20);
  CHECK(static_cast<double>(hits) / eligible >= 0.9);
}
