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

#ifndef UNIEVAL_CONFIG_HPP_
#define UNIEVAL_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace unieval {

// One run. The text form is flat "key = value" lines, '#' starts a comment,
// lists are comma separated. Every key is listed in README.md.
struct RunConfig {
  std::string model;          // builtin:<name> | adapter:stdio:<cmd> | adapter:http:<url>
  std::string models_file;    // parameters for builtin:linear / builtin:attention
  std::string dataset;
  std::string output = "out";
  std::string attributions;   // defaults to output
  std::vector<std::string> methods{"shapley"};
  std::vector<std::string> properties{"faithfulness", "agreement", "simulatability",
                                      "complexity"};
  std::string span_method;    // defaults to the first method with spans
  std::optional<std::uint64_t> seed;  // mandatory before running
  int k_faith = 3;
  int k_sim = 1;
  int jobs = 0;               // 0 = available parallelism
  std::vector<std::string> matchers{"exact", "overlap"};
  std::string insertion = "symbol";
  std::string ranking = "signed";
  bool complexity_original = false;
  int exact_cap = 14;
  int kernel_samples = 2048;
  int permutations = 2000;
  int ig_steps = 50;
  std::string head = "0";     // attention head index or "auto"
  double resolution = 1.0;
  std::vector<double> constant_probs{0.7, 0.3};
  double timeout_s = 30.0;
  int window = 64;

  // Throws ConfigError for unknown names or out-of-range values.
  void validate() const;
  std::uint64_t require_seed() const;

  // Canonical "key = value" text of every field that affects results
  // (output, attributions and jobs are left out).
  std::string canonical() const;
};

// Sets one key from its text value; ConfigError on unknown keys or bad types.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

// Applies a config file on top of `config`. `origin` is used in messages.
void apply_config_text(RunConfig& config, const std::string& text,
                       const std::string& origin = "config");

// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string& bytes);

// Hash of the canonical config plus the bytes of every input file it names.
std::string config_hash(const RunConfig& config);

std::vector<std::string> split_list(const std::string& s);

}  // namespace unieval

#endif  // UNIEVAL_CONFIG_HPP_
