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

#ifndef UNIEVAL_LOUVAIN_HPP_
#define UNIEVAL_LOUVAIN_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace unieval {

// Dense symmetric weighted graph with non-negative weights. Diagonal entries
// are self-loops (used by the aggregation step).
class WeightedGraph {
 public:
  explicit WeightedGraph(int nodes);

  int size() const { return n_; }
  double at(int i, int j) const { return w_[index(i, j)]; }
  // Sets both (i, j) and (j, i).
  void set(int i, int j, double w);
  void add(int i, int j, double w);
  double degree(int i) const;
  double total_weight() const;  // sum of all degrees (= 2m)

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(j);
  }
  int n_;
  std::vector<double> w_;
};

// Q = 1/(2m) * sum_ij [A_ij - resolution * k_i k_j / (2m)] [c_i == c_j].
// Zero for an edgeless graph.
double modularity(const WeightedGraph& g, std::span<const int> community,
                  double resolution = 1.0);

// Louvain community detection (local moving + aggregation until no
// improvement). Nodes are visited in index order; the seed only breaks ties
// between equally good target communities. Labels are canonical: numbered in
// order of each community's smallest node.
std::vector<int> louvain(const WeightedGraph& g, double resolution = 1.0,
                         std::uint64_t seed = 0);

}  // namespace unieval

#endif  // UNIEVAL_LOUVAIN_HPP_
