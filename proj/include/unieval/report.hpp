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

#ifndef UNIEVAL_REPORT_HPP_
#define UNIEVAL_REPORT_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "unieval/agreement.hpp"
#include "unieval/complexity.hpp"
#include "unieval/faithfulness.hpp"
#include "unieval/simulatability.hpp"

namespace unieval {

inline constexpr const char* kReportSchemaVersion = "1.0";

struct ReportMeta {
  std::string dataset_id;
  std::string model_id;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> methods;
  std::string span_method;
};

// Per-property seeds are derived from the master seed with these streams.
namespace seed_stream {
inline constexpr std::uint64_t kExplain = 0xe1;
inline constexpr std::uint64_t kFaithfulness = 0xf1;
inline constexpr std::uint64_t kAgreement = 0xa1;
inline constexpr std::uint64_t kSimulatability = 0x51;
inline constexpr std::uint64_t kComplexity = 0xc1;
}  // namespace seed_stream

struct DiagnosticReport {
  ReportMeta meta;
  std::optional<FaithfulnessResult> faithfulness;
  std::vector<LevelResult> agreement;  // empty when not requested
  bool agreement_requested = false;
  std::optional<SimulatabilityResult> simulatability;
  std::optional<ComplexityResult> complexity;
  // Levels or properties that could not be scored, with the reason.
  std::vector<std::string> notes;

  // Throws NumericError when a score leaves its documented range.
  void check_ranges() const;
  nlohmann::json to_json() const;
};

// Results CSVs. Doubles use the shortest round-trip form.
std::string faithfulness_csv(const FaithfulnessResult& r);
std::string agreement_csv(const std::vector<LevelResult>& levels);
std::string simulatability_csv(const SimulatabilityResult& r);
std::string complexity_csv(const ComplexityResult& r);

// method,kind,axis,raw,normalized. Axes are mapped onto [0, 1] with 1 the
// desirable end: comp, suff and MAP as is, (RSF + 1) / 2, and
// 1 - CL / upper_bound for complexity.
std::string radar_csv(const DiagnosticReport& report);

// Plain-text table of a report JSON for the terminal.
std::string render_report(const nlohmann::json& report);

}  // namespace unieval

#endif  // UNIEVAL_REPORT_HPP_
