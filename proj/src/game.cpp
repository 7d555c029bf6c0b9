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

#include "unieval/game.hpp"

#include <algorithm>
#include <bit>
#include <exception>

#include "unieval/error.hpp"

namespace unieval {

Coalition coalition_from_mask(std::uint64_t mask, int n) {
  Coalition s(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = (mask >> i) & 1U;
  return s;
}

std::uint64_t mask_from_coalition(const Coalition& s) {
  require(s.size() <= 64, ErrorKind::kContract, "coalition too large for a bitmask");
  std::uint64_t mask = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i]) mask |= 1ULL << i;
  }
  return mask;
}

double Game::value(const Coalition& s) const {
  return values(std::span<const Coalition>(&s, 1)).front();
}

double Game::empty_value() const {
  return value(Coalition(static_cast<std::size_t>(num_players()), 0));
}

double Game::full_value() const {
  return value(Coalition(static_cast<std::size_t>(num_players()), 1));
}

TableGame::TableGame(int n, std::vector<double> table) : n_(n), table_(std::move(table)) {
  require(n >= 1 && n < 31, ErrorKind::kContract, "table game size out of range");
  require(table_.size() == (std::size_t{1} << n), ErrorKind::kContract,
          "table game needs 2^n values");
}

std::vector<double> TableGame::values(std::span<const Coalition> coalitions) const {
  std::vector<double> out;
  out.reserve(coalitions.size());
  for (const auto& s : coalitions) out.push_back(table_[mask_from_coalition(s)]);
  return out;
}

FunctionGame::FunctionGame(int n, std::function<double(const Coalition&)> fn)
    : n_(n), fn_(std::move(fn)) {}

std::vector<double> FunctionGame::values(std::span<const Coalition> coalitions) const {
  std::vector<double> out;
  out.reserve(coalitions.size());
  for (const auto& s : coalitions) out.push_back(fn_(s));
  return out;
}

ModelGame::ModelGame(ModelPtr model, Instance x)
    : model_(std::move(model)), x_(std::move(x)), target_(model_->predict(x_.tokens()).label) {}

ModelGame::ModelGame(ModelPtr model, Instance x, int target)
    : model_(std::move(model)), x_(std::move(x)), target_(target) {
  require(target_ >= 0 && target_ < model_->num_classes(), ErrorKind::kContract,
          "target class out of range");
}

std::vector<double> ModelGame::values(std::span<const Coalition> coalitions) const {
  std::vector<TokenSeq> batch;
  batch.reserve(coalitions.size());
  const auto& mask = model_->mask_token();
  for (const auto& s : coalitions) {
    require(static_cast<int>(s.size()) == x_.size(), ErrorKind::kContract,
            "coalition size does not match instance");
    TokenSeq seq = x_.tokens();
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s[i]) seq[i] = mask;
    }
    batch.push_back(std::move(seq));
  }
  auto preds = model_->predict_batch(batch);
  std::vector<double> out;
  out.reserve(preds.size());
  for (const auto& p : preds) out.push_back(p.probs[static_cast<std::size_t>(target_)]);
  return out;
}

double shapley_weight(int n, int s) {
  // 1 / (n * C(n-1, s))
  double binom = 1.0;
  for (int k = 1; k <= s; ++k) binom = binom * (n - 1 - s + k) / k;
  return 1.0 / (static_cast<double>(n) * binom);
}

namespace {

constexpr std::uint64_t kChunk = 512;

void check_cap(int n, int cap) {
  require(n >= 1, ErrorKind::kContract, "game without players");
  require(n <= cap && n < 31, ErrorKind::kContract,
          "exact enumeration over " + std::to_string(n) + " players exceeds the cap of " +
              std::to_string(cap) + "; use kernel_shap or permutation sampling");
}

void fill_chunk(const Game& game, int n, std::uint64_t begin, std::uint64_t end,
                std::vector<double>& table) {
  std::vector<Coalition> batch;
  batch.reserve(end - begin);
  for (std::uint64_t mask = begin; mask < end; ++mask) batch.push_back(coalition_from_mask(mask, n));
  auto vals = game.values(batch);
  for (std::uint64_t mask = begin; mask < end; ++mask) table[mask] = vals[mask - begin];
}

std::vector<double> weights_by_size(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) w[static_cast<std::size_t>(s)] = shapley_weight(n, s);
  return w;
}

double shapley_one(std::span<const double> table, int n, int i, const std::vector<double>& w) {
  const std::uint64_t total = std::uint64_t{1} << n;
  const std::uint64_t bit = std::uint64_t{1} << i;
  double sum = 0.0;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    if (mask & bit) continue;
    sum += w[static_cast<std::size_t>(std::popcount(mask))] * (table[mask | bit] - table[mask]);
  }
  return sum;
}

void directed_row(std::span<const double> table, int n, int i, const std::vector<double>& w,
                  double* row) {
  const std::uint64_t total = std::uint64_t{1} << n;
  const std::uint64_t bit = std::uint64_t{1} << i;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    if (mask & bit) continue;
    const double c =
        w[static_cast<std::size_t>(std::popcount(mask))] * (table[mask | bit] - table[mask]);
    for (std::uint64_t rest = mask; rest; rest &= rest - 1) row[std::countr_zero(rest)] += c;
  }
  // Orders with j before i have probability 1/2.
  for (int j = 0; j < n; ++j) row[j] *= 2.0;
  row[i] = 0.0;
}

}  // namespace

std::vector<double> coalition_table(const Game& game, int cap) {
  const int n = game.num_players();
  check_cap(n, cap);
  const std::uint64_t total = std::uint64_t{1} << n;
  std::vector<double> table(total);
  const auto chunks = static_cast<std::int64_t>((total + kChunk - 1) / kChunk);
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) if (game.parallel_safe())
  for (std::int64_t c = 0; c < chunks; ++c) {
    const auto begin = static_cast<std::uint64_t>(c) * kChunk;
    const std::uint64_t end = std::min(total, begin + kChunk);
    try {
      fill_chunk(game, n, begin, end, table);
    } catch (...) {
#pragma omp critical(unieval_table_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return table;
}

std::vector<double> shapley_from_table(std::span<const double> table, int n) {
  require(table.size() == (std::size_t{1} << n), ErrorKind::kContract, "table size != 2^n");
  const auto w = weights_by_size(n);
  std::vector<double> phi(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) phi[static_cast<std::size_t>(i)] = shapley_one(table, n, i, w);
  return phi;
}

std::vector<double> directed_bivariate_from_table(std::span<const double> table, int n) {
  require(table.size() == (std::size_t{1} << n), ErrorKind::kContract, "table size != 2^n");
  const auto w = weights_by_size(n);
  std::vector<double> out(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    directed_row(table, n, i, w, out.data() + static_cast<std::size_t>(i) * n);
  }
  return out;
}

namespace kernels::serial {

std::vector<double> coalition_table(const Game& game, int cap) {
  const int n = game.num_players();
  check_cap(n, cap);
  const std::uint64_t total = std::uint64_t{1} << n;
  std::vector<double> table(total);
  for (std::uint64_t begin = 0; begin < total; begin += kChunk) {
    fill_chunk(game, n, begin, std::min(total, begin + kChunk), table);
  }
  return table;
}

std::vector<double> shapley_from_table(std::span<const double> table, int n) {
  require(table.size() == (std::size_t{1} << n), ErrorKind::kContract, "table size != 2^n");
  const auto w = weights_by_size(n);
  std::vector<double> phi(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) phi[static_cast<std::size_t>(i)] = shapley_one(table, n, i, w);
  return phi;
}

std::vector<double> directed_bivariate_from_table(std::span<const double> table, int n) {
  require(table.size() == (std::size_t{1} << n), ErrorKind::kContract, "table size != 2^n");
  const auto w = weights_by_size(n);
  std::vector<double> out(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    directed_row(table, n, i, w, out.data() + static_cast<std::size_t>(i) * n);
  }
  return out;
}

}  // namespace kernels::serial

}  // namespace unieval
