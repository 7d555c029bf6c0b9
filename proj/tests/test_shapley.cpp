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
#include "unieval/shapley.hpp"

using namespace unieval;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double w = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) w = std::max(w, std::fabs(a[i] - b[i]));
  return w;
}

}  // namespace

TEST_CASE("two-player hand game") {
  TableGame g(2, {0.0, 1.0, 1.0, 2.0});
  const auto phi = exact_shapley(g);
  CHECK(phi[0] == doctest::Approx(1.0));
  CHECK(phi[1] == doctest::Approx(1.0));
}

TEST_CASE("exact shapley equals the permutation definition") {
  Rng rng(31);
  for (int n = 1; n <= 7; ++n) {
    const auto g = testing::random_game(n, rng);
    CHECK(max_abs_diff(exact_shapley(g), testing::shapley_by_permutations(g)) <= 1e-12);
  }
}

TEST_CASE("exact shapley efficiency over 200 games") {
  Rng rng(77);
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + static_cast<int>(uniform_index(rng, 10));
    const auto g = testing::random_game(n, rng);
    const auto phi = exact_shapley(g);
    const double sum = std::accumulate(phi.begin(), phi.end(), 0.0);
    CHECK(std::fabs(sum - (g.full_value() - g.empty_value())) <= 1e-9);
  }
}

TEST_CASE("exact shapley refuses games above the cap") {
  FunctionGame g(15, [](const Coalition&) { return 0.0; });
  try {
    exact_shapley(g);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kContract);
  }
}

TEST_CASE("kernel shap tracks exact values") {
  Rng rng(5);
  const auto g = testing::random_game(10, rng);
  const auto exact = exact_shapley(g);
  const auto a = kernel_shap(g, 4096, 1);
  const auto b = kernel_shap(g, 4096, 2);
  CHECK(a.phi != b.phi);
  CHECK(max_abs_diff(a.phi, exact) <= 0.05);
  CHECK(max_abs_diff(b.phi, exact) <= 0.05);
  const double sum = std::accumulate(a.phi.begin(), a.phi.end(), 0.0);
  CHECK(std::fabs(sum - (g.full_value() - g.empty_value())) <= 1e-9);
  CHECK(kernel_shap(g, 4096, 1).phi == a.phi);
}

TEST_CASE("kernel shap recovers additive games") {
  const std::vector<double> w{0.3, -0.2, 0.0, 1.5, -0.7, 0.25};
  FunctionGame g(6, [&](const Coalition& s) {
    double v = -0.4;
    for (std::size_t i = 0; i < w.size(); ++i) v += s[i] ? w[i] : 0.0;
    return v;
  });
  const auto r = kernel_shap(g, 300, 9);
  CHECK(max_abs_diff(r.phi, w) <= 1e-6);
}

TEST_CASE("kernel shap corrupt hook breaks efficiency") {
  Rng rng(6);
  const auto g = testing::random_game(6, rng);
  KernelShapOptions o;
  o.corrupt_weights = 1.5;
  const auto r = kernel_shap(g, 500, 3, o);
  const double sum = std::accumulate(r.phi.begin(), r.phi.end(), 0.0);
  CHECK(std::fabs(sum - (g.full_value() - g.empty_value())) > 1e-3);
}

TEST_CASE("directed bivariate on the AND game") {
  // v(S) = 1 iff {0, 1} subset of S, three players.
  std::vector<double> t(8, 0.0);
  t[3] = t[7] = 1.0;
  TableGame g(3, t);
  BivariateOptions o;
  CHECK(bivariate_shapley_directed(g, 0, 1, o) == doctest::Approx(1.0));
  // Orders with 2 before 0: (2,0,1) (1,2,0) (2,1,0); 0 scores in the last two.
  CHECK(bivariate_shapley_directed(g, 0, 2, o) == doctest::Approx(testing::directed_by_subsets(g, 0, 2)));
  CHECK(testing::directed_by_subsets(g, 0, 2) == doctest::Approx(2.0 / 3.0));
  // Conditioning on the partner raises the score above the plain Shapley value.
  CHECK(bivariate_shapley_directed(g, 0, 1, o) > exact_shapley(g)[0]);
}

TEST_CASE("directed bivariate equals restricted-subset enumeration") {
  Rng rng(41);
  for (int n : {3, 4}) {
    for (int t = 0; t < 10; ++t) {
      const auto g = testing::random_game(n, rng);
      const auto table = directed_bivariate_from_table(g.table(), n);
      for (int i = 0; i < n; ++i) {
        CHECK(table[static_cast<std::size_t>(i * n + i)] == 0.0);
        for (int j = 0; j < n; ++j) {
          if (i == j) continue;
          CHECK(std::fabs(table[static_cast<std::size_t>(i * n + j)] - testing::directed_by_subsets(g, i, j)) <=
                1e-12);
        }
      }
    }
  }
}

TEST_CASE("2x2 instance pair scores match brute force") {
  Rng rng(12);
  const auto g = testing::random_game(4, rng);
  const auto r = bivariate_shapley(g, 2);
  for (int p = 0; p < 2; ++p) {
    for (int q = 2; q < 4; ++q) {
      const double want = (testing::directed_by_subsets(g, p, q) + testing::directed_by_subsets(g, q, p)) / 2.0;
      CHECK(std::fabs(r.pair_at(p, q) - want) <= 1e-12);
    }
  }
}

TEST_CASE("sampled bivariate approaches exact above the cap setting") {
  Rng rng(2);
  const auto g = testing::random_game(6, rng);
  BivariateOptions sampled;
  sampled.exact_cap = 3;
  sampled.permutations = 20000;
  sampled.seed = 4;
  for (int i : {0, 2}) {
    CHECK(std::fabs(bivariate_shapley_directed(g, i, 5, sampled) - testing::directed_by_subsets(g, i, 5)) < 0.05);
  }
}

TEST_CASE("model game values are target probabilities on kept tokens") {
  LinearBowParams p = testing::small_linear({"a", "b"}, 2);
  const auto model = make_linear_bow_model(p);
  const auto x = testing::make_instance("i", {"a"}, {"b"});
  ModelGame g(model, x, 1);
  const auto v = g.values(std::vector<Coalition>{{1, 0}});
  CHECK(v[0] == model->predict({"a", "[MASK]"}).probs[1]);
}
