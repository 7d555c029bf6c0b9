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

#ifndef UNIEVAL_COMPLEXITY_HPP_
#define UNIEVAL_COMPLEXITY_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "unieval/core.hpp"
#include "unieval/faithfulness.hpp"

namespace unieval {

// |a_i| / sum_j |a_j|. Throws DegenerateError when every score is zero.
std::vector<double> normalized_mass(std::span<const double> scores);

// -sum p_i ln p_i, with 0 ln 0 = 0.
double shannon_entropy(std::span<const double> p);

struct ComplexityValue {
  double cl = 0.0;
  int used = 0;             // entries the entropy was taken over
  bool saturated = false;   // fewer than k_x entries available
};

// Entropy of the normalized magnitudes of the top k_x entries.
ComplexityValue entropy_complexity(const AttributionSet& attr, int k_x);

// Entropy over every entry of the set (the form that ignores budgets).
ComplexityValue original_complexity(const AttributionSet& attr);

struct ComplexityOptions {
  std::uint64_t seed = 0;
  bool original_form = false;
};

struct ComplexityScore {
  std::string method;
  ExplanationKind kind = ExplanationKind::kToken;
  double cl = 0.0;
  int saturations = 0;
  std::vector<double> per_instance;  // aligned with ComplexityResult::ids
};

struct ComplexityResult {
  std::vector<ComplexityScore> methods;
  double random_ref = 0.0;
  double upper_bound = 0.0;
  int n_instances = 0;
  std::uint64_t seed = 0;
  bool original_form = false;
  std::vector<std::string> ids;  // scored instances
  std::vector<int> k_x;          // per scored instance
  std::vector<SkippedInstance> skipped;
};

// k_x per instance is the span method's entry count. Random reference:
// entropy of k_x uniform [0, 1) draws, seeded per instance. Upper bound:
// ln k_x. Instances degenerate for any method are skipped for all.
ComplexityResult dataset_complexity(const std::vector<Instance>& data,
                                    const std::vector<MethodSets>& methods,
                                    const MethodSets& span_source,
                                    const ComplexityOptions& options = {});

}  // namespace unieval

#endif  // UNIEVAL_COMPLEXITY_HPP_
