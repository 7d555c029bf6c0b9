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

#ifndef UNIEVAL_ATTRIBUTION_HPP_
#define UNIEVAL_ATTRIBUTION_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "unieval/core.hpp"
#include "unieval/game.hpp"
#include "unieval/model.hpp"
#include "unieval/shapley.hpp"

namespace unieval {

// Directed bipartite weights between the two parts of an instance; entry
// (i, j) is the importance of i given j. Only cross-part entries are used.
struct InteractionGraph {
  int m = 0;
  int n = 0;
  std::vector<double> directed;  // (m+n) x (m+n), row-major

  InteractionGraph() = default;
  InteractionGraph(int m_, int n_);
  int size() const { return m + n; }
  double at(int i, int j) const;
  void set(int i, int j, double w);
  // Throws NumericError on a non-finite cross-part weight.
  void validate() const;
};

InteractionGraph graph_from_bivariate(const BivariateResult& r);

// Efficiency-exact Shapley values as a TokenEx set.
AttributionSet exact_shapley_set(const ModelGame& game, const std::string& method,
                                 RankingRule rule = RankingRule::kSigned,
                                 int cap = kDefaultExactCap);

// Kernel SHAP as a TokenEx set; a ridge fallback is noted in warnings.
AttributionSet kernel_shap_set(const ModelGame& game, const std::string& method, int samples,
                               std::uint64_t seed, RankingRule rule = RankingRule::kSigned,
                               const KernelShapOptions& options = {});

// Cross-part pair scores from a bivariate result as a TokenIntEx set.
AttributionSet pair_set(const std::string& instance_id, const std::string& method,
                        const BivariateResult& r, RankingRule rule = RankingRule::kSigned);

struct IgResult {
  std::vector<double> scores;
  // |sum(scores) - (g(x) - g(baseline))| on the centered target logit.
  double completeness_gap = 0.0;
};

// Midpoint-rule integrated gradients against the all-mask baseline.
IgResult integrated_gradients(const Model& model, const Instance& x, int steps, int target);

AttributionSet ig_set(const Model& model, const Instance& x, int steps, const std::string& method,
                      RankingRule rule = RankingRule::kSigned);

// Attention from the anchor position to each token in one head.
std::vector<double> attention_token_scores(const AttentionMap& map, const Instance& x, int head);
AttributionSet attention_token(const Model& model, const Instance& x, int head,
                               const std::string& method,
                               RankingRule rule = RankingRule::kSigned);

// Directed attention weights between tokens of opposite parts.
InteractionGraph attention_graph(const AttentionMap& map, const Instance& x, int head);
// (att[p->q] + att[q->p]) / 2 for every cross pair.
AttributionSet attention_interaction(const Instance& x, const InteractionGraph& g,
                                     const std::string& method,
                                     RankingRule rule = RankingRule::kSigned);

// Head whose attention_token explanations give the highest mean
// comprehensiveness point when the top `budget` tokens are omitted, over the
// calibration set. Ties go to the lowest head.
int select_head(const Model& model, const std::vector<Instance>& calibration,
                const std::vector<int>& heads, int budget = 1);

struct SpanDiagnostics {
  int communities = 0;
  // Communities whose tokens all lie in one part (no span pair possible).
  int one_sided = 0;
};

// Louvain over the symmetrised graph (weights shifted to be non-negative),
// then every community is cut into maximal contiguous runs per part and each
// cross pair of runs becomes a span pair scored by the summed pair scores
// inside it divided by the number of tokens it covers.
AttributionSet louvain_spans(const Instance& x, const AttributionSet& pairs,
                             const InteractionGraph& g, const std::string& method,
                             double resolution = 1.0, std::uint64_t seed = 0,
                             RankingRule rule = RankingRule::kSigned,
                             SpanDiagnostics* diagnostics = nullptr);

// Built-in method families. Each yields one set per listed kind.
//   shapley         TokenEx, TokenIntEx, SpanIntEx (exact up to the cap)
//   kernel-shapley  TokenEx
//   attention       TokenEx, TokenIntEx, SpanIntEx
//   ig              TokenEx
const std::vector<std::string>& method_names();
std::vector<ExplanationKind> method_kinds(const std::string& method);
// Throws CapabilityError naming what the model lacks.
void check_method_capability(const std::string& method, const Model& model);

struct MethodOptions {
  int exact_cap = kDefaultExactCap;
  int kernel_samples = 2048;
  int permutations = 2000;
  int ig_steps = 50;
  int head = 0;  // attention head
  double resolution = 1.0;
  RankingRule rule = RankingRule::kSigned;
  std::uint64_t seed = 0;
};

// All sets of one method for one instance. `position` is the instance's index
// in the dataset and selects its random stream.
std::vector<AttributionSet> explain_instance(const std::string& method, const ModelPtr& model,
                                             const Instance& x, std::size_t position,
                                             const MethodOptions& options);

// explain_instance over a dataset, grouped per kind. Parallel over instances
// for thread-safe models.
std::vector<MethodSets> explain_dataset(const std::string& method, const ModelPtr& model,
                                        const std::vector<Instance>& data,
                                        const MethodOptions& options, bool parallel = true);

}  // namespace unieval

#endif  // UNIEVAL_ATTRIBUTION_HPP_
