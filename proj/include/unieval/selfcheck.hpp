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

#ifndef UNIEVAL_SELFCHECK_HPP_
#define UNIEVAL_SELFCHECK_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace unieval {

struct SelfcheckOptions {
  std::uint64_t seed = 20240611;
  // Test hook: scale fitted kernel SHAP coefficients so efficiency breaks.
  bool corrupt_kernel_weights = false;
};

struct SelfcheckItem {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelfcheckResult {
  std::vector<SelfcheckItem> items;
  bool passed() const;
  // One "PASS|FAIL <name>: <detail>" line per item plus a final tally. No
  // timings, so two runs print the same text.
  std::string summary() const;
};

// Exact-vs-sampled oracles, loopback adapter conformance and the cheap
// invariants, on small seeded inputs.
SelfcheckResult run_selfcheck(const SelfcheckOptions& options = {});

}  // namespace unieval

#endif  // UNIEVAL_SELFCHECK_HPP_
