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
#include <functional>

#include "doctest.h"
#include "helpers.hpp"
#include "unieval/attribution.hpp"
#include "unieval/louvain.hpp"

using namespace unieval;

namespace {

// Modularity written out edge by edge from a weight matrix.
double modularity_oracle(const std::vector<std::vector<double>>& w, const std::vector<int>& c) {
  const std::size_t n = w.size();
  std::vector<double> k(n, 0.0);
  double two_m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) k[i] += w[i][j];
    two_m += k[i];
  }
  if (two_m == 0.0) return 0.0;
  double q = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (c[i] == c[j]) q += w[i][j] - k[i] * k[j] / two_m;
    }
  }
  return q / two_m;
}

std::vector<int> brute_force_best(const std::vector<std::vector<double>>& w, double& best_q) {
  const int n = static_cast<int>(w.size());
  std::vector<int> a(static_cast<std::size_t>(n), 0), best;
  best_q = -1e300;
  std::function<void(int, int)> rec = [&](int pos, int top) {
    if (pos == n) {
      const double q = modularity_oracle(w, a);
      if (q > best_q + 1e-12) {
        best_q = q;
        best = a;
      }
      return;
    }
    for (int c = 0; c <= top + 1; ++c) {
      a[static_cast<std::size_t>(pos)] = c;
      rec(pos + 1, std::max(top, c));
    }
  };
  rec(1, 0);
  return best;
}

WeightedGraph to_graph(const std::vector<std::vector<double>>& w) {
  WeightedGraph g(static_cast<int>(w.size()));
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t j = i; j < w.size(); ++j) {
      if (w[i][j] != 0.0) g.set(static_cast<int>(i), static_cast<int>(j), w[i][j]);
    }
  }
  return g;
}

std::vector<std::vector<double>> two_blocks() {
  std::vector<std::vector<double>> w(8, std::vector<double>(8, 0.0));
  for (int p : {0, 1}) {
    for (int q : {4, 5}) w[p][q] = w[q][p] = 1.0;
  }
  for (int p : {2, 3}) {
    for (int q : {6, 7}) w[p][q] = w[q][p] = 1.0;
  }
  return w;
}

}  // namespace

TEST_CASE("modularity agrees with the oracle") {
  Rng rng(8);
  std::vector<std::vector<double>> w(6, std::vector<double>(6, 0.0));
  for (int i = 0; i < 6; ++i) {
    for (int j = i + 1; j < 6; ++j) w[i][j] = w[j][i] = uniform01(rng) < 0.5 ? uniform01(rng) : 0.0;
  }
  const auto g = to_graph(w);
  for (int t = 0; t < 20; ++t) {
    std::vector<int> c(6);
    for (int& x : c) x = static_cast<int>(uniform_index(rng, 3));
    CHECK(modularity(g, c) == doctest::Approx(modularity_oracle(w, c)).epsilon(1e-12));
  }
  CHECK(modularity(WeightedGraph(3), std::vector<int>{0, 1, 2}) == 0.0);
}

TEST_CASE("two disconnected blocks are recovered") {
  const auto w = two_blocks();
  double best_q = 0.0;
  const auto best = brute_force_best(w, best_q);
  const auto found = louvain(to_graph(w));
  CHECK(found == best);
  CHECK(found == std::vector<int>{0, 0, 1, 1, 0, 0, 1, 1});
  CHECK(modularity(to_graph(w), found) == doctest::Approx(best_q).epsilon(1e-12));
}

TEST_CASE("louvain matches brute force on small random graphs") {
  Rng rng(21);
  for (int t = 0; t < 15; ++t) {
    const int n = 5 + static_cast<int>(uniform_index(rng, 3));
    std::vector<std::vector<double>> w(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    // Planted groups with light noise keep the optimum unique.
    std::vector<int> group(static_cast<std::size_t>(n));
    for (auto& g : group) g = static_cast<int>(uniform_index(rng, 2));
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double base = group[static_cast<std::size_t>(i)] == group[static_cast<std::size_t>(j)] ? 1.0 : 0.05;
        w[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = w[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
            base + 0.01 * uniform01(rng);
      }
    }
    double best_q = 0.0;
    brute_force_best(w, best_q);
    const auto found = louvain(to_graph(w), 1.0, static_cast<std::uint64_t>(t));
    CHECK(modularity_oracle(w, found) == doctest::Approx(best_q).epsilon(1e-9));
  }
}

TEST_CASE("labels are canonical") {
  const auto w = two_blocks();
  const auto a = louvain(to_graph(w), 1.0, 1);
  const auto b = louvain(to_graph(w), 1.0, 2);
  CHECK(a == b);
  CHECK(a[0] == 0);
}

TEST_CASE("span pairs and scores from the two-block instance") {
  const auto x = testing::make_instance("s", {"a", "b", "c", "d"}, {"e", "f", "g", "h"});
  InteractionGraph g(4, 4);
  std::vector<ScoredUnit> pairs;
  for (int p = 0; p < 4; ++p) {
    for (int q = 4; q < 8; ++q) {
      double s = 0.0;
      if (p < 2 && q < 6) s = 1.0;
      if (p >= 2 && q >= 6) s = 0.5;
      g.set(p, q, s);
      g.set(q, p, s);
      pairs.push_back({ExplanationUnit::pair(p, q), s});
    }
  }
  const auto pair_set_ = make_attribution("s", ExplanationKind::kTokenPair, "m", pairs);
  SpanDiagnostics diag;
  const auto spans = louvain_spans(x, pair_set_, g, "m", 1.0, 0, RankingRule::kSigned, &diag);
  REQUIRE(spans.entries.size() == 2);
  // ((0,1),(4,5)): four pairs of 1.0 over four tokens; ((2,3),(6,7)): 4 x 0.5 / 4.
  CHECK(spans.entries[0].unit == ExplanationUnit::span_pair(0, 1, 4, 5));
  CHECK(spans.entries[0].score == doctest::Approx(1.0));
  CHECK(spans.entries[1].unit == ExplanationUnit::span_pair(2, 3, 6, 7));
  CHECK(spans.entries[1].score == doctest::Approx(0.5));
  CHECK(diag.communities == 2);
  CHECK(diag.one_sided == 0);
}

TEST_CASE("non-contiguous communities split into runs") {
  // Tokens 0 and 2 of part1 bind to part2 token 4; 1 and 3 to 5.
  const auto x = testing::make_instance("r", {"a", "b", "c", "d"}, {"e", "f"});
  InteractionGraph g(4, 2);
  std::vector<ScoredUnit> pairs;
  for (int p = 0; p < 4; ++p) {
    for (int q = 4; q < 6; ++q) {
      const double s = (p % 2 == q - 4) ? 1.0 : 0.0;
      g.set(p, q, s);
      g.set(q, p, s);
      pairs.push_back({ExplanationUnit::pair(p, q), s});
    }
  }
  const auto ps = make_attribution("r", ExplanationKind::kTokenPair, "m", pairs);
  const auto spans = louvain_spans(x, ps, g, "m");
  CHECK(spans.entries.size() == 4);
  for (const auto& e : spans.entries) {
    CHECK(e.unit[0] == e.unit[1]);
    CHECK(e.score == doctest::Approx(0.5));
  }
}
