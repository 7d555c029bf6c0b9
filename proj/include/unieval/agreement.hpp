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

#ifndef UNIEVAL_AGREEMENT_HPP_
#define UNIEVAL_AGREEMENT_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "unieval/core.hpp"
#include "unieval/faithfulness.hpp"

namespace unieval {

// exact: identical index tuple. overlap: a predicted interaction matches a
// gold one when its part1 range intersects the gold part1 range and its part2
// range intersects the gold part2 range. Token pairs are compared as
// single-token span pairs, so pair and span units can be matched against each
// other. For tokens both matchers reduce to equality.
enum class Matcher { kExact, kOverlap };

std::string_view matcher_name(Matcher m);
Matcher parse_matcher(std::string_view name);

bool units_match(const ExplanationUnit& predicted, const ExplanationUnit& gold, Matcher m);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

// Empty prediction gives (0, 0). Gold must be non-empty.
PrecisionRecall precision_recall(std::span<const ExplanationUnit> predicted,
                                 std::span<const ExplanationUnit> gold, Matcher m);

// sum_i (R_i - R_{i-1}) P_i over nested prediction sets, R_{-1} = 0.
double average_precision(const std::vector<std::vector<ExplanationUnit>>& nested,
                         std::span<const ExplanationUnit> gold, Matcher m);

// Token units for a token set.
std::vector<ExplanationUnit> token_units(const TokenSet& tokens);

// Token-level gold: token_gold if given, else tokens flattened from pair and
// span gold. Empty when there is none.
TokenSet token_gold_of(const GoldAnnotation& gold);
// Interaction gold for a kind: TokenIntEx prefers pair_gold, SpanIntEx
// prefers span_gold; each falls back to the other.
std::vector<ExplanationUnit> interaction_gold_of(const GoldAnnotation& gold, ExplanationKind kind);

struct AgreementOptions {
  int k_max = 3;
  Matcher matcher = Matcher::kExact;
  std::uint64_t seed = 0;
};

struct MapScore {
  std::string method;
  ExplanationKind kind = ExplanationKind::kToken;
  double map = 0.0;
  int n_instances = 0;
};

struct LevelResult {
  std::string level;  // "token" or "interaction"
  Matcher matcher = Matcher::kExact;
  std::vector<MapScore> methods;
  double random_map = 0.0;
  int n_instances = 0;  // instances with gold at this level
  std::vector<SkippedInstance> skipped;
};

// Token-level MAP. Prediction sets are the tokens of the budget-matched
// prefixes at k = 1..k_max. The random baseline ranks a random permutation of
// the tokens and cuts it at round(mean theta_k).
LevelResult map_token_level(const std::vector<Instance>& data,
                            const std::map<std::string, GoldAnnotation>& golds,
                            const std::vector<MethodSets>& methods, const MethodSets& span_source,
                            const AgreementOptions& options = {});

// Interaction-level MAP for TokenIntEx and SpanIntEx sets (TokenEx is a
// contract violation). Prediction sets are the budget-matched unit prefixes.
// The random baseline draws cross-part token pairs without replacement, as
// many as the span method selects on average at each k.
LevelResult map_interaction_level(const std::vector<Instance>& data,
                                  const std::map<std::string, GoldAnnotation>& golds,
                                  const std::vector<MethodSets>& methods,
                                  const MethodSets& span_source,
                                  const AgreementOptions& options = {});

}  // namespace unieval

#endif  // UNIEVAL_AGREEMENT_HPP_
