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

#include "unieval/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "unieval/error.hpp"

namespace unieval {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kCapability: return "unsupported-capability";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kConflict: return "conflict";
    case ErrorKind::kTransport: return "model-unavailable";
    case ErrorKind::kProtocol: return "protocol";
    case ErrorKind::kCapacity: return "capacity";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kDegenerate: return "degenerate-input";
    case ErrorKind::kContract: return "contract-violation";
  }
  return "unknown";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return 2;
    case ErrorKind::kCapability: return 3;
    case ErrorKind::kValidation:
    case ErrorKind::kParse:
    case ErrorKind::kConflict:
    case ErrorKind::kCapacity: return 4;
    case ErrorKind::kTransport:
    case ErrorKind::kProtocol: return 5;
    default: return 1;
  }
}

const std::string& Instance::token(int i) const {
  require(i >= 0 && i < size(), ErrorKind::kValidation,
          "token index " + std::to_string(i) + " out of range for instance " + id);
  return i < m() ? part1[static_cast<std::size_t>(i)]
                 : part2[static_cast<std::size_t>(i - m())];
}

TokenSeq Instance::tokens() const {
  TokenSeq out;
  out.reserve(static_cast<std::size_t>(size()));
  out.insert(out.end(), part1.begin(), part1.end());
  out.insert(out.end(), part2.begin(), part2.end());
  return out;
}

void Instance::validate(int num_classes) const {
  require(!id.empty(), ErrorKind::kValidation, "instance with empty id");
  require(m() >= 1 && n() >= 1, ErrorKind::kValidation,
          "instance " + id + ": both parts need at least one token");
  for (int i = 0; i < size(); ++i) {
    require(!token(i).empty(), ErrorKind::kValidation,
            "instance " + id + ": empty token at index " + std::to_string(i));
  }
  require(label >= 0, ErrorKind::kValidation,
          "instance " + id + ": negative label");
  if (num_classes > 0) {
    require(label < num_classes, ErrorKind::kValidation,
            "instance " + id + ": label " + std::to_string(label) +
                " outside [0, " + std::to_string(num_classes) + ")");
  }
}

std::string_view kind_name(ExplanationKind kind) {
  switch (kind) {
    case ExplanationKind::kToken: return "TokenEx";
    case ExplanationKind::kTokenPair: return "TokenIntEx";
    case ExplanationKind::kSpanPair: return "SpanIntEx";
  }
  return "?";
}

ExplanationKind parse_kind(std::string_view name) {
  if (name == "TokenEx") return ExplanationKind::kToken;
  if (name == "TokenIntEx") return ExplanationKind::kTokenPair;
  if (name == "SpanIntEx") return ExplanationKind::kSpanPair;
  fail(ErrorKind::kValidation, "unknown explanation kind '" + std::string(name) + "'");
}

ExplanationUnit ExplanationUnit::token(int i) {
  return {ExplanationKind::kToken, {i, 0, 0, 0}};
}

ExplanationUnit ExplanationUnit::pair(int p, int q) {
  return {ExplanationKind::kTokenPair, {p, q, 0, 0}};
}

ExplanationUnit ExplanationUnit::span_pair(int s, int s_end, int t, int t_end) {
  return {ExplanationKind::kSpanPair, {s, s_end, t, t_end}};
}

ExplanationUnit ExplanationUnit::from_indices(std::span<const int> idx) {
  switch (idx.size()) {
    case 1: return token(idx[0]);
    case 2: return pair(idx[0], idx[1]);
    case 4: return span_pair(idx[0], idx[1], idx[2], idx[3]);
    default:
      fail(ErrorKind::kValidation,
           "explanation unit must have 1, 2 or 4 indices, got " +
               std::to_string(idx.size()));
  }
}

int ExplanationUnit::arity() const {
  switch (kind_) {
    case ExplanationKind::kToken: return 1;
    case ExplanationKind::kTokenPair: return 2;
    case ExplanationKind::kSpanPair: return 4;
  }
  return 0;
}

void ExplanationUnit::append_tokens(std::vector<int>& out) const {
  switch (kind_) {
    case ExplanationKind::kToken:
      out.push_back(idx_[0]);
      break;
    case ExplanationKind::kTokenPair:
      out.push_back(idx_[0]);
      out.push_back(idx_[1]);
      break;
    case ExplanationKind::kSpanPair:
      for (int i = idx_[0]; i <= idx_[1]; ++i) out.push_back(i);
      for (int i = idx_[2]; i <= idx_[3]; ++i) out.push_back(i);
      break;
  }
}

bool ExplanationUnit::valid_for(int m, int n) const {
  const int total = m + n;
  switch (kind_) {
    case ExplanationKind::kToken:
      return idx_[0] >= 0 && idx_[0] < total;
    case ExplanationKind::kTokenPair:
      return idx_[0] >= 0 && idx_[0] < m && idx_[1] >= m && idx_[1] < total;
    case ExplanationKind::kSpanPair:
      return idx_[0] >= 0 && idx_[0] <= idx_[1] && idx_[1] < m &&
             idx_[2] >= m && idx_[2] <= idx_[3] && idx_[3] < total;
  }
  return false;
}

void ExplanationUnit::validate(int m, int n) const {
  if (valid_for(m, n)) return;
  std::string enc = "[";
  for (int k = 0; k < arity(); ++k) {
    if (k) enc += ",";
    enc += std::to_string(idx_[static_cast<std::size_t>(k)]);
  }
  enc += "]";
  fail(ErrorKind::kValidation, std::string(kind_name(kind_)) + " unit " + enc +
                                   " out of range for m=" + std::to_string(m) +
                                   ", n=" + std::to_string(n));
}

std::vector<ExplanationUnit> AttributionSet::units() const {
  return top(upper_limit());
}

std::vector<ExplanationUnit> AttributionSet::top(int k) const {
  const auto count = static_cast<std::size_t>(std::clamp(k, 0, upper_limit()));
  std::vector<ExplanationUnit> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(entries[i].unit);
  return out;
}

void GoldAnnotation::validate(const Instance& x) const {
  auto check = [&](const ExplanationUnit& u) {
    if (!u.valid_for(x.m(), x.n())) {
      try {
        u.validate(x.m(), x.n());
      } catch (const Error& e) {
        fail(ErrorKind::kValidation, "instance " + x.id + ": gold " + e.what());
      }
    }
  };
  if (token_gold) {
    for (int i : *token_gold) check(ExplanationUnit::token(i));
  }
  if (pair_gold) {
    for (const auto& u : *pair_gold) {
      require(u.kind() == ExplanationKind::kTokenPair, ErrorKind::kValidation,
              "instance " + x.id + ": pair_gold entry is not a token pair");
      check(u);
    }
  }
  if (span_gold) {
    for (const auto& u : *span_gold) {
      require(u.kind() == ExplanationKind::kSpanPair, ErrorKind::kValidation,
              "instance " + x.id + ": span_gold entry is not a span pair");
      check(u);
    }
  }
}

const AttributionSet& MethodSets::at(const std::string& id) const {
  auto it = sets.find(id);
  require(it != sets.end(), ErrorKind::kValidation,
          "no " + label() + " attribution for instance '" + id + "'");
  return it->second;
}

std::string MethodSets::label() const {
  return method + "/" + std::string(kind_name(kind));
}

TokenSet tokens_of(std::span<const ExplanationUnit> units) {
  std::vector<int> out;
  for (const auto& u : units) u.append_tokens(out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

TokenSet tokens_of(const Instance& x, std::span<const ExplanationUnit> units) {
  for (const auto& u : units) {
    require(u.valid_for(x.m(), x.n()), ErrorKind::kContract,
            "unit does not belong to instance " + x.id);
  }
  return tokens_of(units);
}

std::vector<ScoredUnit> rank_entries(std::vector<ScoredUnit> entries,
                                     RankingRule rule) {
  for (const auto& e : entries) {
    require(std::isfinite(e.score), ErrorKind::kNumeric,
            "non-finite attribution score");
  }
  auto key = [rule](const ScoredUnit& e) {
    return rule == RankingRule::kMagnitude ? std::fabs(e.score) : e.score;
  };
  std::stable_sort(entries.begin(), entries.end(),
                   [&](const ScoredUnit& a, const ScoredUnit& b) {
                     const double ka = key(a);
                     const double kb = key(b);
                     if (ka != kb) return ka > kb;
                     return a.unit < b.unit;
                   });
  return entries;
}

AttributionSet make_attribution(std::string instance_id, ExplanationKind kind,
                                std::string method,
                                std::vector<ScoredUnit> entries,
                                RankingRule rule) {
  std::set<ExplanationUnit> seen;
  for (const auto& e : entries) {
    require(e.unit.kind() == kind, ErrorKind::kContract,
            "attribution entries must share one kind");
    require(seen.insert(e.unit).second, ErrorKind::kContract,
            "duplicate unit in attribution set for " + instance_id);
  }
  AttributionSet out;
  out.instance_id = std::move(instance_id);
  out.kind = kind;
  out.method = std::move(method);
  out.entries = rank_entries(std::move(entries), rule);
  return out;
}

AttributionSet token_attribution(const Instance& x, std::string method,
                                 std::span<const double> scores,
                                 RankingRule rule) {
  require(static_cast<int>(scores.size()) == x.size(), ErrorKind::kContract,
          "one score per token expected");
  std::vector<ScoredUnit> entries;
  entries.reserve(scores.size());
  for (int i = 0; i < x.size(); ++i) {
    entries.push_back({ExplanationUnit::token(i), scores[static_cast<std::size_t>(i)]});
  }
  return make_attribution(x.id, ExplanationKind::kToken, std::move(method),
                          std::move(entries), rule);
}

}  // namespace unieval
