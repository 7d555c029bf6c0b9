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

// Serial reference vs OpenMP kernels on random coalition tables.
#include <benchmark/benchmark.h>

#include <cmath>

#include "unieval/game.hpp"
#include "unieval/rng.hpp"

using namespace unieval;

namespace {

TableGame random_game(int n) {
  Rng rng(make_rng(42, static_cast<std::uint64_t>(n)));
  std::vector<double> t(std::size_t{1} << n);
  for (double& v : t) v = uniform01(rng);
  return TableGame(n, std::move(t));
}

// A game whose values cost something to compute, like a model call would.
FunctionGame costly_game(int n) {
  return FunctionGame(n, [](const Coalition& s) {
    double v = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i]) v += std::sin(static_cast<double>(i) * 0.37 + v);
    }
    for (int r = 0; r < 200; ++r) v = std::cos(v) * 0.9 + 0.1;
    return v;
  });
}

void BM_CoalitionTableSerial(benchmark::State& st) {
  const auto g = costly_game(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::serial::coalition_table(g));
}
void BM_CoalitionTableParallel(benchmark::State& st) {
  const auto g = costly_game(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(coalition_table(g));
}

void BM_ShapleySerial(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const auto g = random_game(n);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::serial::shapley_from_table(g.table(), n));
}
void BM_ShapleyParallel(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const auto g = random_game(n);
  for (auto _ : st) benchmark::DoNotOptimize(shapley_from_table(g.table(), n));
}

void BM_BivariateSerial(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const auto g = random_game(n);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::serial::directed_bivariate_from_table(g.table(), n));
}
void BM_BivariateParallel(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const auto g = random_game(n);
  for (auto _ : st) benchmark::DoNotOptimize(directed_bivariate_from_table(g.table(), n));
}

}  // namespace

BENCHMARK(BM_CoalitionTableSerial)->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CoalitionTableParallel)->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ShapleySerial)->Arg(10)->Arg(14)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ShapleyParallel)->Arg(10)->Arg(14)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BivariateSerial)->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BivariateParallel)->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
