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

#include "unieval/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>

#include "unieval/agreement.hpp"
#include "unieval/attribution.hpp"
#include "unieval/error.hpp"
#include "unieval/io.hpp"
#include "unieval/simulatability.hpp"

namespace unieval {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& want) {
  fail(ErrorKind::kConfig, "config key '" + key + "': '" + value + "' is not " + want);
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    bad_value(key, v, "a non-negative integer");
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "a boolean");
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"model", [](RunConfig& c, auto&, auto& v) { c.model = v; }},
      {"models_file", [](RunConfig& c, auto&, auto& v) { c.models_file = v; }},
      {"dataset", [](RunConfig& c, auto&, auto& v) { c.dataset = v; }},
      {"output", [](RunConfig& c, auto&, auto& v) { c.output = v; }},
      {"attributions", [](RunConfig& c, auto&, auto& v) { c.attributions = v; }},
      {"methods", [](RunConfig& c, auto&, auto& v) { c.methods = split_list(v); }},
      {"properties", [](RunConfig& c, auto&, auto& v) { c.properties = split_list(v); }},
      {"span_method", [](RunConfig& c, auto&, auto& v) { c.span_method = v; }},
      {"seed", [](RunConfig& c, auto& k, auto& v) { c.seed = to_u64(k, v); }},
      {"k_faith", [](RunConfig& c, auto& k, auto& v) { c.k_faith = to_int(k, v); }},
      {"k_sim", [](RunConfig& c, auto& k, auto& v) { c.k_sim = to_int(k, v); }},
      {"jobs", [](RunConfig& c, auto& k, auto& v) { c.jobs = to_int(k, v); }},
      {"matchers", [](RunConfig& c, auto&, auto& v) { c.matchers = split_list(v); }},
      {"insertion", [](RunConfig& c, auto&, auto& v) { c.insertion = v; }},
      {"ranking", [](RunConfig& c, auto&, auto& v) { c.ranking = v; }},
      {"complexity_original",
       [](RunConfig& c, auto& k, auto& v) { c.complexity_original = to_bool(k, v); }},
      {"exact_cap", [](RunConfig& c, auto& k, auto& v) { c.exact_cap = to_int(k, v); }},
      {"kernel_samples", [](RunConfig& c, auto& k, auto& v) { c.kernel_samples = to_int(k, v); }},
      {"permutations", [](RunConfig& c, auto& k, auto& v) { c.permutations = to_int(k, v); }},
      {"ig_steps", [](RunConfig& c, auto& k, auto& v) { c.ig_steps = to_int(k, v); }},
      {"head", [](RunConfig& c, auto&, auto& v) { c.head = v; }},
      {"resolution", [](RunConfig& c, auto& k, auto& v) { c.resolution = to_double(k, v); }},
      {"constant_probs",
       [](RunConfig& c, auto& k, auto& v) {
         c.constant_probs.clear();
         for (const auto& p : split_list(v)) c.constant_probs.push_back(to_double(k, p));
       }},
      {"timeout_s", [](RunConfig& c, auto& k, auto& v) { c.timeout_s = to_double(k, v); }},
      {"window", [](RunConfig& c, auto& k, auto& v) { c.window = to_int(k, v); }},
  };
  return table;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

}  // namespace

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  const auto& t = setters();
  auto it = t.find(key);
  if (it == t.end()) fail(ErrorKind::kConfig, "unknown config key '" + key + "'");
  it->second(config, key, value);
}

void apply_config_text(RunConfig& config, const std::string& text, const std::string& origin) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::kConfig, origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      set_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      fail(ErrorKind::kConfig, origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void RunConfig::validate() const {
  auto check = [](bool ok, const std::string& msg) { require(ok, ErrorKind::kConfig, msg); };
  const auto& known = method_names();
  check(!methods.empty(), "no methods given");
  for (const auto& m : methods) {
    check(std::find(known.begin(), known.end(), m) != known.end(),
          "unknown method '" + m + "' (known: " + join(known) + ")");
  }
  static const std::vector<std::string> props{"faithfulness", "agreement", "simulatability",
                                              "complexity"};
  for (const auto& p : properties) {
    check(std::find(props.begin(), props.end(), p) != props.end(),
          "unknown property '" + p + "' (known: " + join(props) + ")");
  }
  if (!span_method.empty()) {
    const auto kinds = method_kinds(span_method);
    check(std::find(kinds.begin(), kinds.end(), ExplanationKind::kSpanPair) != kinds.end(),
          "span_method '" + span_method + "' produces no SpanIntEx sets");
  }
  for (const auto& m : matchers) {
    try {
      parse_matcher(m);
    } catch (const Error&) {
      fail(ErrorKind::kConfig, "unknown matcher '" + m + "' (known: exact,overlap)");
    }
  }
  try {
    parse_insertion(insertion);
  } catch (const Error&) {
    fail(ErrorKind::kConfig, "unknown insertion '" + insertion + "' (known: none,symbol,text)");
  }
  check(ranking == "signed" || ranking == "magnitude",
        "ranking must be signed or magnitude, got '" + ranking + "'");
  check(k_faith >= 1, "k_faith must be >= 1");
  check(k_sim >= 1, "k_sim must be >= 1");
  check(jobs >= 0, "jobs must be >= 0");
  check(exact_cap >= 1 && exact_cap <= 24, "exact_cap must lie in [1, 24]");
  check(kernel_samples >= 1, "kernel_samples must be positive");
  check(permutations >= 1, "permutations must be positive");
  check(ig_steps >= 1, "ig_steps must be >= 1");
  check(resolution > 0.0, "resolution must be positive");
  check(timeout_s > 0.0, "timeout_s must be positive");
  check(window >= 1, "window must be >= 1");
  if (head != "auto") {
    int h = -1;
    const auto r = std::from_chars(head.data(), head.data() + head.size(), h);
    check(r.ec == std::errc() && r.ptr == head.data() + head.size() && h >= 0,
          "head must be a non-negative integer or auto");
  }
}

std::uint64_t RunConfig::require_seed() const {
  require(seed.has_value(), ErrorKind::kConfig,
          "no seed given; pass --seed or set seed in the config file");
  return *seed;
}

std::string RunConfig::canonical() const {
  std::vector<std::pair<std::string, std::string>> kv = {
      {"model", model},
      {"models_file", models_file},
      {"dataset", dataset},
      {"methods", join(methods)},
      {"properties", join(properties)},
      {"span_method", span_method},
      {"seed", seed ? std::to_string(*seed) : std::string()},
      {"k_faith", std::to_string(k_faith)},
      {"k_sim", std::to_string(k_sim)},
      {"matchers", join(matchers)},
      {"insertion", insertion},
      {"ranking", ranking},
      {"complexity_original", complexity_original ? "true" : "false"},
      {"exact_cap", std::to_string(exact_cap)},
      {"kernel_samples", std::to_string(kernel_samples)},
      {"permutations", std::to_string(permutations)},
      {"ig_steps", std::to_string(ig_steps)},
      {"head", head},
      {"resolution", format_double(resolution)},
  };
  std::string probs;
  for (std::size_t i = 0; i < constant_probs.size(); ++i) {
    probs += (i ? "," : "") + format_double(constant_probs[i]);
  }
  kv.emplace_back("constant_probs", probs);
  std::sort(kv.begin(), kv.end());
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const RunConfig& config) {
  std::string material = config.canonical();
  for (const auto& path : {config.dataset, config.models_file}) {
    if (!path.empty() && std::filesystem::exists(path)) {
      material += "file:" + fnv1a_hex(read_file(path)) + "\n";
    }
  }
  return fnv1a_hex(material);
}

}  // namespace unieval
