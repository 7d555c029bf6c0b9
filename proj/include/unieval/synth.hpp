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

#ifndef UNIEVAL_SYNTH_HPP_
#define UNIEVAL_SYNTH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "unieval/io.hpp"
#include "unieval/toy_models.hpp"

namespace unieval {

// Planted task: pair h consists of a part1 head "p<h>" and a part2 head
// "q<h>". Label 1 iff both heads of some pair occur. Positives carry one
// planted pair (sometimes two), each head inside a short run with filler
// modifiers; decoys carry a single head; the rest are filler only. Noise flips
// the stored label.
struct SynthSpec {
  int instances = 500;
  int vocab_size = 40;  // filler words
  int m_min = 7;
  int m_max = 7;
  int n_min = 7;
  int n_max = 7;
  int pairs = 6;
  double positive_rate = 0.6;
  double decoy_rate = 0.15;
  // Chance that a positive carries a second, different pair.
  double extra_pair_rate = 0.7;
  double noise = 0.05;
  double head_weight = 4.0;  // linear model logit per head
  std::uint64_t seed = 20240611;
  std::string mask_token = "[MASK]";

  // Throws ValidationError for infeasible settings.
  void validate() const;
};

struct SynthOutput {
  std::vector<Record> records;
  // Labels before noise.
  std::vector<int> clean_labels;
  LinearBowParams linear;
  ToyAttentionParams attention;

  // {"linear": ..., "attention": ...}
  nlohmann::json models_json() const;
};

SynthOutput generate(const SynthSpec& spec);

}  // namespace unieval

#endif  // UNIEVAL_SYNTH_HPP_
