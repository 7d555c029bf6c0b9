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

#include "unieval/louvain.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "unieval/error.hpp"
#include "unieval/rng.hpp"

namespace unieval {

WeightedGraph::WeightedGraph(int nodes)
    : n_(nodes), w_(static_cast<std::size_t>(nodes) * static_cast<std::size_t>(nodes), 0.0) {
  require(nodes >= 0, ErrorKind::kContract, "negative node count");
}

void WeightedGraph::set(int i, int j, double w) {
  require(std::isfinite(w) && w >= 0.0, ErrorKind::kContract,
          "graph weights must be finite and non-negative");
  w_[index(i, j)] = w;
  w_[index(j, i)] = w;
}

void WeightedGraph::add(int i, int j, double w) {
  if (i == j) {
    w_[index(i, i)] += w;
    return;
  }
  w_[index(i, j)] += w;
  w_[index(j, i)] += w;
}

double WeightedGraph::degree(int i) const {
  double k = 0.0;
  for (int j = 0; j < n_; ++j) k += at(i, j);
  return k;
}

double WeightedGraph::total_weight() const {
  double t = 0.0;
  for (double w : w_) t += w;
  return t;
}

double modularity(const WeightedGraph& g, std::span<const int> community, double resolution) {
  const double m2 = g.total_weight();
  if (m2 <= 0.0) return 0.0;
  std::vector<double> k(static_cast<std::size_t>(g.size()));
  for (int i = 0; i < g.size(); ++i) k[static_cast<std::size_t>(i)] = g.degree(i);
  double q = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    for (int j = 0; j < g.size(); ++j) {
      if (community[static_cast<std::size_t>(i)] != community[static_cast<std::size_t>(j)]) continue;
      q += g.at(i, j) - resolution * k[static_cast<std::size_t>(i)] * k[static_cast<std::size_t>(j)] / m2;
    }
  }
  return q / m2;
}

namespace {

constexpr double kGainEps = 1e-12;

// One local-moving phase. Returns true if any node changed community.
bool local_moves(const WeightedGraph& g, double resolution, Rng& rng, std::vector<int>& comm) {
  const int n = g.size();
  const double m2 = g.total_weight();
  std::vector<double> k(static_cast<std::size_t>(n));
  std::vector<double> tot(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    k[static_cast<std::size_t>(i)] = g.degree(i);
    tot[static_cast<std::size_t>(comm[static_cast<std::size_t>(i)])] += k[static_cast<std::size_t>(i)];
  }
  bool moved_any = false;
  bool moved = true;
  while (moved) {
    moved = false;
    for (int i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const int own = comm[ui];
      tot[static_cast<std::size_t>(own)] -= k[ui];
      // Links from i into each neighbouring community.
      std::map<int, double> links;
      links[own] += 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i || g.at(i, j) <= 0.0) continue;
        links[comm[static_cast<std::size_t>(j)]] += g.at(i, j);
      }
      double best = -INFINITY;
      std::vector<int> tied;
      for (const auto& [c, kin] : links) {
        const double gain = kin - resolution * tot[static_cast<std::size_t>(c)] * k[ui] / m2;
        if (gain > best + kGainEps) {
          best = gain;
          tied.assign(1, c);
        } else if (gain >= best - kGainEps) {
          tied.push_back(c);
        }
      }
      int target = own;
      if (std::find(tied.begin(), tied.end(), own) == tied.end()) {
        target = tied.size() == 1
                     ? tied.front()
                     : tied[static_cast<std::size_t>(uniform_index(rng, tied.size()))];
      }
      tot[static_cast<std::size_t>(target)] += k[ui];
      if (target != own) {
        comm[ui] = target;
        moved = true;
        moved_any = true;
      }
    }
  }
  return moved_any;
}

// Relabels to 0..k-1 in order of first appearance.
int canonicalize(std::vector<int>& comm) {
  std::map<int, int> relabel;
  for (int& c : comm) {
    auto it = relabel.emplace(c, static_cast<int>(relabel.size())).first;
    c = it->second;
  }
  return static_cast<int>(relabel.size());
}

}  // namespace

std::vector<int> louvain(const WeightedGraph& g, double resolution, std::uint64_t seed) {
  require(resolution > 0.0, ErrorKind::kContract, "louvain resolution must be positive");
  const int n = g.size();
  std::vector<int> membership(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) membership[static_cast<std::size_t>(i)] = i;
  if (n == 0 || g.total_weight() <= 0.0) return membership;

  Rng rng(split_seed(seed, 0x10a1a));
  WeightedGraph level = g;
  while (true) {
    std::vector<int> comm(static_cast<std::size_t>(level.size()));
    for (int i = 0; i < level.size(); ++i) comm[static_cast<std::size_t>(i)] = i;
    const bool moved = local_moves(level, resolution, rng, comm);
    const int groups = canonicalize(comm);
    for (int& c : membership) c = comm[static_cast<std::size_t>(c)];
    if (!moved || groups == level.size()) break;
    WeightedGraph next(groups);
    for (int i = 0; i < level.size(); ++i) {
      for (int j = 0; j < level.size(); ++j) {
        const double w = level.at(i, j);
        if (w == 0.0) continue;
        const int a = comm[static_cast<std::size_t>(i)];
        const int b = comm[static_cast<std::size_t>(j)];
        // Each ordered entry contributes once; add() mirrors off-diagonal.
        if (a == b) {
          next.add(a, a, w);
        } else if (a < b) {
          next.add(a, b, w);
        }
      }
    }
    level = std::move(next);
  }
  canonicalize(membership);
  return membership;
}

}  // namespace unieval
