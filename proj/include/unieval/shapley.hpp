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

#ifndef UNIEVAL_SHAPLEY_HPP_
#define UNIEVAL_SHAPLEY_HPP_

#include <cstdint>
#include <vector>

#include "unieval/game.hpp"

namespace unieval {

// Exact Shapley values by enumerating all coalitions. Efficiency holds to
// rounding: sum(phi) = v(F) - v(empty). Throws ContractError above `cap`.
std::vector<double> exact_shapley(const Game& game, int cap = kDefaultExactCap);

// Ridge damping used when the kernel regression is singular.
inline constexpr double kKernelRidge = 1e-8;

struct KernelShapOptions {
  // Test hook: multiply the fitted coefficients by this factor after solving,
  // breaking efficiency on purpose.
  double corrupt_weights = 1.0;
};

struct KernelShapResult {
  std::vector<double> phi;
  bool ridge_fallback = false;
  int distinct_coalitions = 0;
};

// Kernel SHAP: coalition sizes are drawn with probability proportional to the
// total Shapley-kernel weight of that size, members uniformly, and the
// equally-weighted least-squares fit is solved with sum(phi) = v(F) - v(empty)
// imposed exactly. Requires samples >= n + 2. Deterministic in seed.
KernelShapResult kernel_shap(const Game& game, int samples, std::uint64_t seed,
                             const KernelShapOptions& options = {});

struct BivariateOptions {
  int exact_cap = kDefaultExactCap;
  int permutations = 2000;  // used above the cap
  std::uint64_t seed = 0;
};

// Shap(i | j): expected marginal contribution of i over orders in which j
// precedes i, i.e. restricted to coalitions S with j in S and i not in S.
// Exact when n <= cap, otherwise permutation sampling.
double bivariate_shapley_directed(const Game& game, int i, int j,
                                  const BivariateOptions& options = {});

struct BivariateResult {
  int m = 0;
  int n = 0;
  // Row-major (m+n) x (m+n) directed scores; only cross-part entries are
  // populated.
  std::vector<double> directed;
  // Cross-part pair scores (Shap(p|q) + Shap(q|p)) / 2, row-major m x n.
  std::vector<double> pair;

  double directed_at(int i, int j) const {
    return directed[static_cast<std::size_t>(i) * static_cast<std::size_t>(m + n) +
                    static_cast<std::size_t>(j)];
  }
  double pair_at(int p, int q) const {
    return pair[static_cast<std::size_t>(p) * static_cast<std::size_t>(n) +
                static_cast<std::size_t>(q - m)];
  }
};

// Directed and symmetric scores for every cross-part pair of a game whose
// first m players are part1.
BivariateResult bivariate_shapley(const Game& game, int m,
                                  const BivariateOptions& options = {});

}  // namespace unieval

#endif  // UNIEVAL_SHAPLEY_HPP_
