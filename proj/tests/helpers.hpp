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

#ifndef UNIEVAL_TESTS_HELPERS_HPP_
#define UNIEVAL_TESTS_HELPERS_HPP_

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "unieval/core.hpp"
#include "unieval/game.hpp"
#include "unieval/rng.hpp"
#include "unieval/toy_models.hpp"

namespace testing {

using namespace unieval;

inline Instance make_instance(std::string id, TokenSeq p1, TokenSeq p2, int label = 0) {
  Instance x;
  x.id = std::move(id);
  x.part1 = std::move(p1);
  x.part2 = std::move(p2);
  x.label = label;
  return x;
}

inline TableGame random_game(int n, Rng& rng) {
  std::vector<double> t(std::size_t{1} << n);
  for (double& v : t) v = uniform01(rng);
  return TableGame(n, std::move(t));
}

// Shapley value straight from the permutation definition.
inline std::vector<double> shapley_by_permutations(const TableGame& g) {
  const int n = g.num_players();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> phi(static_cast<std::size_t>(n), 0.0);
  long count = 0;
  do {
    std::uint64_t s = 0;
    for (int p : order) {
      phi[static_cast<std::size_t>(p)] += g.table()[s | (std::uint64_t{1} << p)] - g.table()[s];
      s |= std::uint64_t{1} << p;
    }
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  for (double& v : phi) v /= static_cast<double>(count);
  return phi;
}

// Shap(i | j) over the coalitions that contain j and not i, each weighted by
// the share of orders (with j before i) that put exactly that set before i.
inline double directed_by_subsets(const TableGame& g, int i, int j) {
  const int n = g.num_players();
  std::vector<double> fact(static_cast<std::size_t>(n) + 1, 1.0);
  for (int k = 1; k <= n; ++k) fact[static_cast<std::size_t>(k)] = fact[static_cast<std::size_t>(k - 1)] * k;
  double sum = 0.0;
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << n); ++s) {
    if (!(s & (std::uint64_t{1} << j)) || (s & (std::uint64_t{1} << i))) continue;
    const int size = __builtin_popcountll(s);
    // Orders with exactly S before i: |S|! (n-|S|-1)!; j is in S, so j
    // precedes i in all of them. Orders with j before i: n!/2.
    const double w = fact[static_cast<std::size_t>(size)] *
                     fact[static_cast<std::size_t>(n - size - 1)] / (fact[static_cast<std::size_t>(n)] / 2.0);
    sum += w * (g.table()[s | (std::uint64_t{1} << i)] - g.table()[s]);
  }
  return sum;
}

inline LinearBowParams small_linear(const std::vector<std::string>& vocab, std::uint64_t seed) {
  Rng rng(seed);
  LinearBowParams p;
  p.vocab = vocab;
  for (std::size_t v = 0; v < vocab.size(); ++v) {
    p.weights.push_back({uniform01(rng) - 0.5, 2.0 * uniform01(rng) - 1.0});
  }
  p.bias = {0.2, -0.1};
  return p;
}

inline Instance random_instance(Rng& rng, const std::vector<std::string>& vocab, int m, int n,
                                std::string id = "r") {
  Instance x;
  x.id = std::move(id);
  for (int i = 0; i < m; ++i) x.part1.push_back(vocab[uniform_index(rng, vocab.size())]);
  for (int i = 0; i < n; ++i) x.part2.push_back(vocab[uniform_index(rng, vocab.size())]);
  return x;
}

}  // namespace testing

#endif  // UNIEVAL_TESTS_HELPERS_HPP_
