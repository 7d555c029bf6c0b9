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

#ifndef UNIEVAL_GAME_HPP_
#define UNIEVAL_GAME_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "unieval/core.hpp"
#include "unieval/model.hpp"

namespace unieval {

// Membership flags over the players 0..n-1.
using Coalition = std::vector<std::uint8_t>;

Coalition coalition_from_mask(std::uint64_t mask, int n);
std::uint64_t mask_from_coalition(const Coalition& s);

// A cooperative game v(S) over n players.
class Game {
 public:
  virtual ~Game() = default;
  virtual int num_players() const = 0;
  virtual std::vector<double> values(std::span<const Coalition> coalitions) const = 0;
  // Whether values() may be called from several threads at once.
  virtual bool parallel_safe() const { return true; }

  double value(const Coalition& s) const;
  double empty_value() const;
  double full_value() const;
};

// Game given by an explicit table indexed by bitmask (bit i = player i).
class TableGame : public Game {
 public:
  TableGame(int n, std::vector<double> table);
  int num_players() const override { return n_; }
  std::vector<double> values(std::span<const Coalition> coalitions) const override;
  const std::vector<double>& table() const { return table_; }

 private:
  int n_;
  std::vector<double> table_;
};

class FunctionGame : public Game {
 public:
  FunctionGame(int n, std::function<double(const Coalition&)> fn);
  int num_players() const override { return n_; }
  std::vector<double> values(std::span<const Coalition> coalitions) const override;

 private:
  int n_;
  std::function<double(const Coalition&)> fn_;
};

// v(S) = probability of the target class on mask_keep(x, S). The target is the
// model's prediction on the unperturbed input.
class ModelGame : public Game {
 public:
  ModelGame(ModelPtr model, Instance x);
  ModelGame(ModelPtr model, Instance x, int target);

  int num_players() const override { return x_.size(); }
  std::vector<double> values(std::span<const Coalition> coalitions) const override;
  bool parallel_safe() const override { return model_->thread_safe(); }

  const Instance& instance() const { return x_; }
  const Model& model() const { return *model_; }
  int target() const { return target_; }

 private:
  ModelPtr model_;
  Instance x_;
  int target_;
};

// Largest player count for which full 2^n enumeration is allowed.
inline constexpr int kDefaultExactCap = 14;

// Shapley permutation weight |S|! (n - |S| - 1)! / n! for |S| = s.
double shapley_weight(int n, int s);

// v over all 2^n coalitions (index = bitmask). Coalitions are evaluated in
// batches spread over OpenMP threads when the game allows it.
std::vector<double> coalition_table(const Game& game, int cap = kDefaultExactCap);

// Per-player Shapley values from a full coalition table. Parallel over
// players.
std::vector<double> shapley_from_table(std::span<const double> table, int n);

// Directed bivariate Shapley for every ordered pair, row-major n x n:
// entry (i, j) is the expected marginal contribution of i over random orders
// in which j precedes i. Diagonal is zero. Parallel over i.
std::vector<double> directed_bivariate_from_table(std::span<const double> table, int n);

namespace kernels::serial {

// Single-threaded references for the parallel kernels above; results are
// bit-identical.
std::vector<double> coalition_table(const Game& game, int cap = kDefaultExactCap);
std::vector<double> shapley_from_table(std::span<const double> table, int n);
std::vector<double> directed_bivariate_from_table(std::span<const double> table, int n);

}  // namespace kernels::serial

}  // namespace unieval

#endif  // UNIEVAL_GAME_HPP_
