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

#ifndef UNIEVAL_FAITHFULNESS_HPP_
#define UNIEVAL_FAITHFULNESS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "unieval/core.hpp"
#include "unieval/model.hpp"

namespace unieval {

// theta for span-step k: unique tokens in the top-k span pairs. Saturates when
// k exceeds the span count. Throws DegenerateError on an empty set.
int budget_from_spans(const AttributionSet& spans, int k);
// theta for k = 1..k_max.
std::vector<int> budgets_from_spans(const AttributionSet& spans, int k_max);

struct Selection {
  std::vector<ExplanationUnit> units;
  TokenSet tokens;
  bool saturated = false;  // ran out of units before reaching theta
  bool overshoot = false;  // |tokens| > theta
};

// Smallest ranked prefix covering at least theta tokens. SpanIntEx sets take
// exactly the top-k units instead (theta is ignored for them).
Selection match_budget(const AttributionSet& attr, int theta, int k);

// 1 iff omitting the tokens changes the prediction away from y.
int comp_point(const Model& model, const Instance& x, const TokenSet& tokens, int y);
// 1 iff keeping only the tokens preserves the prediction y.
int suff_point(const Model& model, const Instance& x, const TokenSet& tokens, int y);

struct FaithfulnessOptions {
  int k_max = 3;
  std::uint64_t seed = 0;
  bool parallel = true;
};

struct FaithfulnessScore {
  std::string method;
  ExplanationKind kind = ExplanationKind::kToken;
  double comp = 0.0;
  double suff = 0.0;  // mean SP point (higher = more sufficient)
  int overshoots = 0;
  int saturations = 0;
};

struct SkippedInstance {
  std::string id;
  std::string reason;
};

struct FaithfulnessResult {
  std::vector<FaithfulnessScore> methods;
  double random_comp = 0.0;
  double random_suff = 0.0;
  // round(mean theta_k) over scored instances, per k.
  std::vector<int> random_sizes;
  int n_instances = 0;
  int k_max = 0;
  std::uint64_t seed = 0;
  std::vector<SkippedInstance> skipped;
};

// Comprehensiveness and sufficiency per method, averaged over k = 1..k_max and
// instances, with token budgets taken from `span_source`. The random baseline
// is drawn once per instance (seed split by instance position) and shared by
// all methods. Instances without spans are skipped for every method.
FaithfulnessResult unified_faithfulness(const Model& model, const std::vector<Instance>& data,
                                        const std::vector<MethodSets>& methods,
                                        const MethodSets& span_source,
                                        const FaithfulnessOptions& options = {});

}  // namespace unieval

#endif  // UNIEVAL_FAITHFULNESS_HPP_
