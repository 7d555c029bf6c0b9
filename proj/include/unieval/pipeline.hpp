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

#ifndef UNIEVAL_PIPELINE_HPP_
#define UNIEVAL_PIPELINE_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "unieval/config.hpp"
#include "unieval/io.hpp"
#include "unieval/model.hpp"
#include "unieval/report.hpp"
#include "unieval/synth.hpp"

namespace unieval {

// builtin:constant | builtin:linear | builtin:attention (the last two read
// `models_file`), adapter:stdio:<cmd> | adapter:http:<url>.
ModelPtr load_model(const RunConfig& config);

// "<method>.<Kind>.jsonl"
std::string attribution_filename(const std::string& method, ExplanationKind kind);

// Writes data.jsonl, models.json and synth.manifest.json into `dir`.
void run_synth(const SynthSpec& spec, const std::filesystem::path& dir, std::ostream& log);

struct ExplainOutput {
  std::vector<std::filesystem::path> files;
  std::uint64_t predictions = 0;
};

// One JSONL file per (method, kind) plus explain.manifest.json.
ExplainOutput run_explain(const RunConfig& config, std::ostream& log);

// Loads the attribution files, runs the requested properties and writes
// report.json, the per-property CSVs, radar.csv, agents/ and
// eval.manifest.json.
DiagnosticReport run_eval(const RunConfig& config, std::ostream& log);

// Applies --jobs to OpenMP.
void apply_jobs(int jobs);

}  // namespace unieval

#endif  // UNIEVAL_PIPELINE_HPP_
