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

#include "unieval/shapley.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <exception>
#include <map>

#include "unieval/error.hpp"
#include "unieval/rng.hpp"

namespace unieval {

std::vector<double> exact_shapley(const Game& game, int cap) {
  const int n = game.num_players();
  const auto table = coalition_table(game, cap);
  return shapley_from_table(table, n);
}

namespace {

// Draws a coalition size in [1, n-1] with P(z) proportional to 1 / (z (n - z)),
// the summed Shapley-kernel weight of all coalitions of size z.
class SizeSampler {
 public:
  explicit SizeSampler(int n) {
    double total = 0.0;
    for (int z = 1; z < n; ++z) {
      total += 1.0 / (static_cast<double>(z) * (n - z));
      cdf_.push_back(total);
    }
    for (double& c : cdf_) c /= total;
  }
  int draw(Rng& rng) const {
    const double u = uniform01(rng);
    for (std::size_t k = 0; k < cdf_.size(); ++k) {
      if (u < cdf_[k]) return static_cast<int>(k) + 1;
    }
    return static_cast<int>(cdf_.size());
  }

 private:
  std::vector<double> cdf_;
};

Coalition random_coalition(int n, int size, Rng& rng) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  Coalition s(static_cast<std::size_t>(n), 0);
  for (int k = 0; k < size; ++k) {
    const auto pick = k + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n - k)));
    std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick)]);
    s[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])] = 1;
  }
  return s;
}

}  // namespace

KernelShapResult kernel_shap(const Game& game, int samples, std::uint64_t seed,
                             const KernelShapOptions& options) {
  const int n = game.num_players();
  require(n >= 1, ErrorKind::kContract, "game without players");
  require(samples >= n + 2, ErrorKind::kContract,
          "kernel_shap needs at least n + 2 = " + std::to_string(n + 2) + " samples");

  const Coalition empty(static_cast<std::size_t>(n), 0);
  const Coalition full(static_cast<std::size_t>(n), 1);
  KernelShapResult result;
  if (n == 1) {
    auto ends = game.values(std::vector<Coalition>{empty, full});
    result.phi = {(ends[1] - ends[0]) * options.corrupt_weights};
    return result;
  }

  Rng rng(split_seed(seed, 0x5ca1ab1e));
  SizeSampler sizes(n);
  std::vector<Coalition> drawn;
  drawn.reserve(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) drawn.push_back(random_coalition(n, sizes.draw(rng), rng));

  // Evaluate each distinct coalition once.
  std::map<Coalition, std::size_t> slot;
  std::vector<Coalition> unique{empty, full};
  slot[empty] = 0;
  slot[full] = 1;
  for (const auto& c : drawn) {
    if (slot.emplace(c, unique.size()).second) unique.push_back(c);
  }
  const auto vals = game.values(unique);
  result.distinct_coalitions = static_cast<int>(unique.size()) - 2;
  const double v0 = vals[0];
  const double delta = vals[1] - v0;

  // Eliminate the last player through the efficiency constraint:
  //   v(S) - v0 - z_last * delta = sum_{i < n-1} (z_i - z_last) phi_i
  const int cols = n - 1;
  Eigen::MatrixXd x(samples, cols);
  Eigen::VectorXd y(samples);
  for (int r = 0; r < samples; ++r) {
    const auto& c = drawn[static_cast<std::size_t>(r)];
    const double last = c[static_cast<std::size_t>(n - 1)];
    for (int i = 0; i < cols; ++i) x(r, i) = c[static_cast<std::size_t>(i)] - last;
    y(r) = vals[slot.at(c)] - v0 - last * delta;
  }

  Eigen::VectorXd beta;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() == cols) {
    beta = qr.solve(y);
  } else {
    result.ridge_fallback = true;
    Eigen::MatrixXd gram = x.transpose() * x;
    gram.diagonal().array() += kKernelRidge;
    beta = gram.ldlt().solve(x.transpose() * y);
  }

  result.phi.assign(static_cast<std::size_t>(n), 0.0);
  double sum = 0.0;
  for (int i = 0; i < cols; ++i) {
    result.phi[static_cast<std::size_t>(i)] = beta(i);
    sum += beta(i);
  }
  result.phi[static_cast<std::size_t>(n - 1)] = delta - sum;
  if (options.corrupt_weights != 1.0) {
    for (double& p : result.phi) p *= options.corrupt_weights;
  }
  return result;
}

namespace {

double directed_exact(const Game& game, int i, int j) {
  const int n = game.num_players();
  std::vector<int> others;
  for (int k = 0; k < n; ++k) {
    if (k != i && k != j) others.push_back(k);
  }
  const std::uint64_t total = std::uint64_t{1} << others.size();
  std::vector<Coalition> batch;
  std::vector<int> sizes;
  batch.reserve(2 * total);
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    Coalition s(static_cast<std::size_t>(n), 0);
    s[static_cast<std::size_t>(j)] = 1;
    int size = 1;
    for (std::size_t k = 0; k < others.size(); ++k) {
      if ((mask >> k) & 1U) {
        s[static_cast<std::size_t>(others[k])] = 1;
        ++size;
      }
    }
    batch.push_back(s);
    s[static_cast<std::size_t>(i)] = 1;
    batch.push_back(std::move(s));
    sizes.push_back(size);
  }
  const auto vals = game.values(batch);
  double sum = 0.0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    sum += shapley_weight(n, sizes[k]) * (vals[2 * k + 1] - vals[2 * k]);
  }
  return 2.0 * sum;
}

double directed_sampled(const Game& game, int i, int j, int permutations, std::uint64_t seed) {
  const int n = game.num_players();
  Rng rng = make_rng(seed, static_cast<std::uint64_t>(i) * 1000003ULL + static_cast<std::uint64_t>(j));
  std::vector<Coalition> batch;
  batch.reserve(2 * static_cast<std::size_t>(permutations));
  for (int t = 0; t < permutations; ++t) {
    auto order = random_permutation(n, rng);
    auto pi = std::find(order.begin(), order.end(), i);
    auto pj = std::find(order.begin(), order.end(), j);
    if (pi < pj) std::iter_swap(pi, pj);
    Coalition s(static_cast<std::size_t>(n), 0);
    for (auto it = order.begin(); *it != i; ++it) s[static_cast<std::size_t>(*it)] = 1;
    batch.push_back(s);
    s[static_cast<std::size_t>(i)] = 1;
    batch.push_back(std::move(s));
  }
  const auto vals = game.values(batch);
  double sum = 0.0;
  for (int t = 0; t < permutations; ++t) {
    sum += vals[2 * static_cast<std::size_t>(t) + 1] - vals[2 * static_cast<std::size_t>(t)];
  }
  return sum / permutations;
}

}  // namespace

double bivariate_shapley_directed(const Game& game, int i, int j, const BivariateOptions& options) {
  const int n = game.num_players();
  require(i != j, ErrorKind::kContract, "bivariate Shapley needs two distinct tokens");
  require(i >= 0 && i < n && j >= 0 && j < n, ErrorKind::kContract,
          "bivariate Shapley token index out of range");
  if (n <= options.exact_cap) return directed_exact(game, i, j);
  require(options.permutations >= 1, ErrorKind::kContract, "need at least one permutation");
  return directed_sampled(game, i, j, options.permutations, options.seed);
}

BivariateResult bivariate_shapley(const Game& game, int m, const BivariateOptions& options) {
  const int total = game.num_players();
  require(m >= 1 && m < total, ErrorKind::kContract, "both parts need at least one token");
  BivariateResult r;
  r.m = m;
  r.n = total - m;
  const auto width = static_cast<std::size_t>(total);
  r.directed.assign(width * width, 0.0);
  if (total <= options.exact_cap) {
    const auto table = coalition_table(game, options.exact_cap);
    const auto all = directed_bivariate_from_table(table, total);
    for (int i = 0; i < total; ++i) {
      for (int j = 0; j < total; ++j) {
        if ((i < m) != (j < m)) r.directed[i * width + j] = all[i * width + j];
      }
    }
  } else {
    // Every ordered cross pair, sampled independently.
    std::vector<std::pair<int, int>> ordered;
    for (int p = 0; p < m; ++p) {
      for (int q = m; q < total; ++q) {
        ordered.emplace_back(p, q);
        ordered.emplace_back(q, p);
      }
    }
    std::vector<double> vals(ordered.size());
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) if (game.parallel_safe())
    for (std::int64_t k = 0; k < static_cast<std::int64_t>(ordered.size()); ++k) {
      try {
        const auto [a, b] = ordered[static_cast<std::size_t>(k)];
        vals[static_cast<std::size_t>(k)] =
            directed_sampled(game, a, b, options.permutations, options.seed);
      } catch (...) {
#pragma omp critical(unieval_bivariate_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
    for (std::size_t k = 0; k < ordered.size(); ++k) {
      const auto [a, b] = ordered[k];
      r.directed[static_cast<std::size_t>(a) * width + static_cast<std::size_t>(b)] = vals[k];
    }
  }
  r.pair.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(r.n), 0.0);
  for (int p = 0; p < m; ++p) {
    for (int q = m; q < total; ++q) {
      r.pair[static_cast<std::size_t>(p) * static_cast<std::size_t>(r.n) +
             static_cast<std::size_t>(q - m)] =
          0.5 * (r.directed_at(p, q) + r.directed_at(q, p));
    }
  }
  return r;
}

}  // namespace unieval
