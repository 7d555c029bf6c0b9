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

#ifndef UNIEVAL_SIMULATABILITY_HPP_
#define UNIEVAL_SIMULATABILITY_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "unieval/core.hpp"
#include "unieval/model.hpp"

namespace unieval {

enum class Insertion { kNone, kSymbol, kText };

std::string_view insertion_name(Insertion i);
Insertion parse_insertion(std::string_view name);

// "#1" .. "#9", then "#9+".
std::string rank_mark(int rank);

// part1 + part2 with every explained region wrapped as "<" tokens ">" "#r",
// r being the 1-based rank of the unit. Pair members are wrapped separately
// and share r. A region overlapping an earlier (better-ranked) one only wraps
// its not yet covered sub-runs.
TokenSeq insert_symbol(const Instance& x, std::span<const ExplanationUnit> units);

// part1 + part2 + "||" + rendered units: tokens separated by ";", members of
// an interaction by ",". Nothing is appended for an empty list.
TokenSeq insert_text(const Instance& x, std::span<const ExplanationUnit> units);

TokenSeq insert_explanation(Insertion mode, const Instance& x,
                            std::span<const ExplanationUnit> units);

enum class Split { kTrain = 0, kDev = 1, kTest = 2 };

struct SplitRatios {
  double train = 0.6;
  double dev = 0.2;
  double test = 0.2;
};

struct SimulationDataset {
  std::vector<Instance> instances;
  std::vector<int> simulated;  // original model's predictions
  std::vector<Split> split;
  int num_classes = 2;

  std::size_t size() const { return instances.size(); }
  int count(Split s) const;
};

// Predictions are computed once; membership comes from a seeded shuffle with
// floor(ratio * N) train and dev instances and the rest in test.
SimulationDataset build_simulation_splits(const Model& model, const std::vector<Instance>& data,
                                          const SplitRatios& ratios, std::uint64_t seed);

struct AgentParams {
  int epochs = 40;
  double learning_rate = 0.1;
  double l2 = 1e-4;
  int patience = 8;  // epochs without dev improvement before stopping
  std::uint64_t seed = 0;
};

// Softmax regression over unigram and adjacent-bigram counts. Features are
// collected from the training split; unseen features are ignored.
class Agent {
 public:
  Agent() = default;
  Agent(std::vector<std::string> features, int classes);

  int classes() const { return classes_; }
  const std::vector<std::string>& features() const { return features_; }
  std::vector<double> logits(const TokenSeq& seq) const;
  int predict(const TokenSeq& seq) const;

  // Sparse feature vector (index, count) for a sequence.
  std::vector<std::pair<int, double>> featurize(const TokenSeq& seq) const;

  std::vector<double>& weights() { return w_; }  // features x classes
  std::vector<double>& bias() { return b_; }
  const std::vector<double>& weights() const { return w_; }
  const std::vector<double>& bias() const { return b_; }

  nlohmann::json to_json() const;

 private:
  std::vector<std::string> features_;
  std::map<std::string, int> index_;
  int classes_ = 0;
  std::vector<double> w_;
  std::vector<double> b_;
};

// Per instance id: the ranked units to insert.
using ExplanationLists = std::map<std::string, std::vector<ExplanationUnit>>;

struct TrainedAgent {
  Agent agent;
  int best_epoch = 0;
  double dev_f1 = 0.0;
  double test_f1 = 0.0;
};

// Trains on the inserted train split, keeps the epoch with the best dev
// macro-F1 and reports test macro-F1 against the simulated labels.
// `explanations` may be null for Insertion::kNone; missing ids get no
// insertion.
TrainedAgent train_agent(const SimulationDataset& sim, Insertion mode,
                         const ExplanationLists* explanations, const AgentParams& params);

// Macro-F1 over the classes present in gold or predictions.
double macro_f1(std::span<const int> predicted, std::span<const int> gold, int classes);

// Top units per instance at span step k under the unified budget.
ExplanationLists select_for_simulation(const std::vector<Instance>& data, const MethodSets& method,
                                       const MethodSets& span_source, int k);

struct SimulatabilityOptions {
  int k = 1;
  Insertion insertion = Insertion::kSymbol;
  SplitRatios ratios;
  AgentParams agent;
  std::uint64_t seed = 0;
};

struct SimulatabilityScore {
  std::string method;
  ExplanationKind kind = ExplanationKind::kToken;
  double sf = 0.0;
  double rsf = 0.0;
  TrainedAgent trained;
};

struct SimulatabilityResult {
  Insertion insertion = Insertion::kSymbol;
  int k = 1;
  std::uint64_t seed = 0;
  double sf_o = 0.0;
  TrainedAgent baseline;
  std::vector<SimulatabilityScore> methods;
  int train = 0;
  int dev = 0;
  int test = 0;
};

// One baseline agent without explanations and one agent per method; all share
// splits, features family, hyperparameters and seed.
SimulatabilityResult unified_simulatability(const Model& model, const std::vector<Instance>& data,
                                            const std::vector<MethodSets>& methods,
                                            const MethodSets& span_source,
                                            const SimulatabilityOptions& options = {});

// Same with explanation lists already selected (e.g. gold annotations).
SimulatabilityResult simulate_with_lists(const SimulationDataset& sim,
                                         const std::vector<std::string>& names,
                                         const std::vector<ExplanationKind>& kinds,
                                         const std::vector<ExplanationLists>& lists,
                                         const SimulatabilityOptions& options);

}  // namespace unieval

#endif  // UNIEVAL_SIMULATABILITY_HPP_
