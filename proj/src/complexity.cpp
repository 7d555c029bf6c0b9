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

#include "unieval/complexity.hpp"

#include <algorithm>
#include <cmath>

#include "unieval/error.hpp"
#include "unieval/rng.hpp"

namespace unieval {

std::vector<double> normalized_mass(std::span<const double> scores) {
  double total = 0.0;
  for (double s : scores) {
    require(std::isfinite(s), ErrorKind::kNumeric, "non-finite attribution score");
    total += std::abs(s);
  }
  if (!(total > 0.0)) fail(ErrorKind::kDegenerate, "all attribution scores are zero");
  std::vector<double> p;
  p.reserve(scores.size());
  for (double s : scores) p.push_back(std::abs(s) / total);
  return p;
}

double shannon_entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

namespace {

ComplexityValue entropy_of_prefix(const AttributionSet& attr, int count) {
  std::vector<double> scores;
  scores.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) scores.push_back(attr.entries[static_cast<std::size_t>(i)].score);
  ComplexityValue v;
  v.used = count;
  v.cl = shannon_entropy(normalized_mass(scores));
  return v;
}

}  // namespace

ComplexityValue entropy_complexity(const AttributionSet& attr, int k_x) {
  require(k_x >= 1, ErrorKind::kContract, "complexity budget k_x must be at least 1");
  const int count = std::min(k_x, attr.upper_limit());
  if (count == 0) fail(ErrorKind::kDegenerate, "empty attribution set for '" + attr.instance_id + "'");
  auto v = entropy_of_prefix(attr, count);
  v.saturated = count < k_x;
  return v;
}

ComplexityValue original_complexity(const AttributionSet& attr) {
  if (attr.entries.empty()) fail(ErrorKind::kDegenerate, "empty attribution set for '" + attr.instance_id + "'");
  return entropy_of_prefix(attr, attr.upper_limit());
}

ComplexityResult dataset_complexity(const std::vector<Instance>& data,
                                    const std::vector<MethodSets>& methods,
                                    const MethodSets& span_source,
                                    const ComplexityOptions& options) {
  require(span_source.kind == ExplanationKind::kSpanPair, ErrorKind::kConfig,
          "the budget source must be a SpanIntEx method");
  ComplexityResult r;
  r.seed = options.seed;
  r.original_form = options.original_form;
  r.methods.resize(methods.size());
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    r.methods[mi].method = methods[mi].method;
    r.methods[mi].kind = methods[mi].kind;
  }
  double random_sum = 0.0;
  double upper_sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& x = data[i];
    if (!span_source.has(x.id) || span_source.at(x.id).entries.empty()) {
      r.skipped.push_back({x.id, "span method produced no spans"});
      continue;
    }
    const int k_x = options.original_form ? x.size() : span_source.at(x.id).upper_limit();
    std::vector<ComplexityValue> values;
    std::string reason;
    for (const auto& ms : methods) {
      try {
        values.push_back(options.original_form ? original_complexity(ms.at(x.id))
                                               : entropy_complexity(ms.at(x.id), k_x));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kDegenerate) throw;
        reason = ms.label() + ": " + e.what();
        break;
      }
    }
    if (!reason.empty()) {
      r.skipped.push_back({x.id, reason});
      continue;
    }
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      r.methods[mi].per_instance.push_back(values[mi].cl);
      r.methods[mi].cl += values[mi].cl;
      r.methods[mi].saturations += values[mi].saturated ? 1 : 0;
    }
    Rng rng = make_rng(options.seed, i);
    std::vector<double> draws(static_cast<std::size_t>(k_x));
    for (double& d : draws) d = uniform01(rng);
    // A draw of exactly zero everywhere has probability 0 but is still guarded.
    double total = 0.0;
    for (double d : draws) total += d;
    random_sum += total > 0.0 ? shannon_entropy(normalized_mass(draws)) : 0.0;
    upper_sum += std::log(static_cast<double>(k_x));
    r.ids.push_back(x.id);
    r.k_x.push_back(k_x);
    ++r.n_instances;
  }
  require(r.n_instances > 0, ErrorKind::kDegenerate, "complexity: every instance was skipped");
  for (auto& s : r.methods) s.cl /= r.n_instances;
  r.random_ref = random_sum / r.n_instances;
  r.upper_bound = upper_sum / r.n_instances;
  return r;
}

}  // namespace unieval
