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

#ifndef UNIEVAL_IO_HPP_
#define UNIEVAL_IO_HPP_

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "unieval/core.hpp"

namespace unieval {

struct Record {
  Instance instance;
  std::optional<GoldAnnotation> gold;
};

// Dataset JSONL: one record per line,
//   {"id", "part1", "part2", "label", "token_gold"?, "pair_gold"?, "span_gold"?}
// Parse errors carry the 1-based line number; index violations name the id;
// repeated ids are a conflict.
std::vector<Record> load_dataset(const std::filesystem::path& path);
std::vector<Record> parse_dataset(std::istream& in);

std::string serialize_record(const Record& record);
void write_dataset(const std::filesystem::path& path,
                   const std::vector<Record>& records);

// AttributionSet JSONL:
//   {"id", "kind", "method", "entries": [{"unit": [ints], "score": f64}]}
std::string serialize_attribution(const AttributionSet& set);
AttributionSet parse_attribution(const std::string& line);
void write_attributions(const std::filesystem::path& path,
                        const std::vector<AttributionSet>& sets);
std::vector<AttributionSet> load_attributions(const std::filesystem::path& path);

// Index by instance id.
std::map<std::string, AttributionSet> by_instance(std::vector<AttributionSet> sets);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

// Shortest round-trippable decimal for a double.
std::string format_double(double v);

}  // namespace unieval

#endif  // UNIEVAL_IO_HPP_
