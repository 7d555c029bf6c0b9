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

#include "unieval/io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "unieval/error.hpp"

namespace unieval {

using nlohmann::json;

namespace {

std::vector<int> int_list(const json& j, const std::string& where) {
  require(j.is_array(), ErrorKind::kParse, where + ": expected an array of ints");
  std::vector<int> out;
  for (const auto& v : j) {
    require(v.is_number_integer(), ErrorKind::kParse, where + ": expected int");
    out.push_back(v.get<int>());
  }
  return out;
}

TokenSeq token_list(const json& j, const std::string& field) {
  require(j.is_array(), ErrorKind::kParse, "'" + field + "' must be an array of strings");
  TokenSeq out;
  for (const auto& v : j) {
    require(v.is_string(), ErrorKind::kParse, "'" + field + "' must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

Record record_from_json(const json& j) {
  require(j.is_object(), ErrorKind::kParse, "record is not a JSON object");
  for (const char* field : {"id", "part1", "part2", "label"}) {
    require(j.contains(field), ErrorKind::kParse,
            std::string("missing field '") + field + "'");
  }
  require(j["id"].is_string(), ErrorKind::kParse, "'id' must be a string");
  require(j["label"].is_number_integer(), ErrorKind::kParse, "'label' must be an int");
  Record r;
  r.instance.id = j["id"].get<std::string>();
  r.instance.part1 = token_list(j["part1"], "part1");
  r.instance.part2 = token_list(j["part2"], "part2");
  r.instance.label = j["label"].get<int>();

  GoldAnnotation gold;
  gold.instance_id = r.instance.id;
  if (j.contains("token_gold") && !j["token_gold"].is_null()) {
    auto idx = int_list(j["token_gold"], "token_gold");
    std::set<int> uniq(idx.begin(), idx.end());
    gold.token_gold = TokenSet(uniq.begin(), uniq.end());
  }
  if (j.contains("pair_gold") && !j["pair_gold"].is_null()) {
    require(j["pair_gold"].is_array(), ErrorKind::kParse, "'pair_gold' must be an array");
    std::vector<ExplanationUnit> pairs;
    for (const auto& e : j["pair_gold"]) {
      auto idx = int_list(e, "pair_gold entry");
      require(idx.size() == 2, ErrorKind::kParse, "pair_gold entries are [p, q]");
      pairs.push_back(ExplanationUnit::pair(idx[0], idx[1]));
    }
    gold.pair_gold = std::move(pairs);
  }
  if (j.contains("span_gold") && !j["span_gold"].is_null()) {
    require(j["span_gold"].is_array(), ErrorKind::kParse, "'span_gold' must be an array");
    std::vector<ExplanationUnit> spans;
    for (const auto& e : j["span_gold"]) {
      auto idx = int_list(e, "span_gold entry");
      require(idx.size() == 4, ErrorKind::kParse,
              "span_gold entries are [s, s+l1, t, t+l2]");
      spans.push_back(ExplanationUnit::span_pair(idx[0], idx[1], idx[2], idx[3]));
    }
    gold.span_gold = std::move(spans);
  }
  if (!gold.empty()) r.gold = std::move(gold);
  return r;
}

json units_json(const std::vector<ExplanationUnit>& units) {
  json arr = json::array();
  for (const auto& u : units) {
    json e = json::array();
    for (int i : u.indices()) e.push_back(i);
    arr.push_back(std::move(e));
  }
  return arr;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<Record> parse_dataset(std::istream& in) {
  std::vector<Record> out;
  std::set<std::string> ids;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Record r = [&] {
      try {
        return record_from_json(json::parse(line));
      } catch (const json::exception& e) {
        fail(ErrorKind::kParse, "line " + std::to_string(lineno) + ": " + e.what());
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kParse) throw;
        fail(ErrorKind::kParse, "line " + std::to_string(lineno) + ": " + e.what());
      }
    }();
    r.instance.validate();
    if (r.gold) r.gold->validate(r.instance);
    require(ids.insert(r.instance.id).second, ErrorKind::kConflict,
            "duplicate instance id '" + r.instance.id + "' at line " +
                std::to_string(lineno));
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Record> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kValidation,
          "cannot open dataset " + path.string());
  return parse_dataset(in);
}

std::string serialize_record(const Record& record) {
  const Instance& x = record.instance;
  json j;
  j["id"] = x.id;
  j["part1"] = x.part1;
  j["part2"] = x.part2;
  j["label"] = x.label;
  if (record.gold) {
    if (record.gold->token_gold) j["token_gold"] = *record.gold->token_gold;
    if (record.gold->pair_gold) j["pair_gold"] = units_json(*record.gold->pair_gold);
    if (record.gold->span_gold) j["span_gold"] = units_json(*record.gold->span_gold);
  }
  return j.dump();
}

void write_dataset(const std::filesystem::path& path,
                   const std::vector<Record>& records) {
  std::string out;
  for (const auto& r : records) {
    out += serialize_record(r);
    out += '\n';
  }
  write_file(path, out);
}

std::string serialize_attribution(const AttributionSet& set) {
  // Hand-rolled so scores use the shortest round-trip representation.
  std::string out = "{\"id\":" + json(set.instance_id).dump() + ",\"kind\":\"" +
                    std::string(kind_name(set.kind)) + "\",\"method\":" +
                    json(set.method).dump() + ",\"entries\":[";
  for (std::size_t k = 0; k < set.entries.size(); ++k) {
    if (k) out += ',';
    out += "{\"unit\":[";
    const auto idx = set.entries[k].unit.indices();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(idx[i]);
    }
    out += "],\"score\":" + format_double(set.entries[k].score) + "}";
  }
  out += "]}";
  return out;
}

AttributionSet parse_attribution(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    fail(ErrorKind::kParse, e.what());
  }
  for (const char* field : {"id", "kind", "method", "entries"}) {
    require(j.contains(field), ErrorKind::kParse,
            std::string("attribution record missing '") + field + "'");
  }
  AttributionSet s;
  s.instance_id = j["id"].get<std::string>();
  s.kind = parse_kind(j["kind"].get<std::string>());
  s.method = j["method"].get<std::string>();
  for (const auto& e : j["entries"]) {
    auto idx = int_list(e.at("unit"), "unit");
    auto unit = ExplanationUnit::from_indices(idx);
    require(unit.kind() == s.kind, ErrorKind::kValidation,
            "unit arity does not match kind in record " + s.instance_id);
    s.entries.push_back({unit, e.at("score").get<double>()});
  }
  return s;
}

void write_attributions(const std::filesystem::path& path,
                        const std::vector<AttributionSet>& sets) {
  std::string out;
  for (const auto& s : sets) {
    out += serialize_attribution(s);
    out += '\n';
  }
  write_file(path, out);
}

std::vector<AttributionSet> load_attributions(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kValidation,
          "cannot open attribution file " + path.string());
  std::vector<AttributionSet> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(parse_attribution(line));
    } catch (const Error& e) {
      fail(e.kind(), path.string() + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::map<std::string, AttributionSet> by_instance(std::vector<AttributionSet> sets) {
  std::map<std::string, AttributionSet> out;
  for (auto& s : sets) {
    auto id = s.instance_id;
    require(out.emplace(id, std::move(s)).second, ErrorKind::kConflict,
            "two attribution sets for instance " + id);
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kValidation, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::kValidation, "cannot write " + path.string());
  out << content;
}

}  // namespace unieval
