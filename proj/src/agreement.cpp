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

#include "unieval/agreement.hpp"

#include <algorithm>
#include <cmath>

#include "unieval/error.hpp"
#include "unieval/rng.hpp"

namespace unieval {

std::string_view matcher_name(Matcher m) { return m == Matcher::kExact ? "exact" : "overlap"; }

Matcher parse_matcher(std::string_view name) {
  if (name == "exact") return Matcher::kExact;
  if (name == "overlap") return Matcher::kOverlap;
  fail(ErrorKind::kConfig, "unknown matcher '" + std::string(name) + "' (exact, overlap)");
}

namespace {

std::array<int, 4> as_span(const ExplanationUnit& u) {
  if (u.kind() == ExplanationKind::kTokenPair) return {u[0], u[0], u[1], u[1]};
  return {u[0], u[1], u[2], u[3]};
}

bool intersects(int a0, int a1, int b0, int b1) { return a0 <= b1 && b0 <= a1; }

}  // namespace

bool units_match(const ExplanationUnit& predicted, const ExplanationUnit& gold, Matcher m) {
  const bool pt = predicted.kind() == ExplanationKind::kToken;
  const bool gt = gold.kind() == ExplanationKind::kToken;
  require(pt == gt, ErrorKind::kContract, "cannot match token units against interactions");
  if (pt) return predicted[0] == gold[0];
  const auto p = as_span(predicted);
  const auto g = as_span(gold);
  if (m == Matcher::kExact) return p == g;
  return intersects(p[0], p[1], g[0], g[1]) && intersects(p[2], p[3], g[2], g[3]);
}

PrecisionRecall precision_recall(std::span<const ExplanationUnit> predicted,
                                 std::span<const ExplanationUnit> gold, Matcher m) {
  require(!gold.empty(), ErrorKind::kContract, "precision/recall needs a non-empty gold set");
  PrecisionRecall pr;
  if (predicted.empty()) return pr;
  int hit_pred = 0;
  for (const auto& p : predicted) {
    if (std::any_of(gold.begin(), gold.end(), [&](const auto& g) { return units_match(p, g, m); })) {
      ++hit_pred;
    }
  }
  int hit_gold = 0;
  for (const auto& g : gold) {
    if (std::any_of(predicted.begin(), predicted.end(),
                    [&](const auto& p) { return units_match(p, g, m); })) {
      ++hit_gold;
    }
  }
  pr.precision = static_cast<double>(hit_pred) / static_cast<double>(predicted.size());
  pr.recall = static_cast<double>(hit_gold) / static_cast<double>(gold.size());
  return pr;
}

double average_precision(const std::vector<std::vector<ExplanationUnit>>& nested,
                         std::span<const ExplanationUnit> gold, Matcher m) {
  double ap = 0.0;
  double prev_recall = 0.0;
  for (const auto& set : nested) {
    const auto pr = precision_recall(set, gold, m);
    ap += (pr.recall - prev_recall) * pr.precision;
    prev_recall = pr.recall;
  }
  return ap;
}

std::vector<ExplanationUnit> token_units(const TokenSet& tokens) {
  std::vector<ExplanationUnit> out;
  out.reserve(tokens.size());
  for (int t : tokens) out.push_back(ExplanationUnit::token(t));
  return out;
}

TokenSet token_gold_of(const GoldAnnotation& gold) {
  if (gold.token_gold) return *gold.token_gold;
  std::vector<ExplanationUnit> units;
  if (gold.pair_gold) units.insert(units.end(), gold.pair_gold->begin(), gold.pair_gold->end());
  if (gold.span_gold) units.insert(units.end(), gold.span_gold->begin(), gold.span_gold->end());
  return tokens_of(units);
}

std::vector<ExplanationUnit> interaction_gold_of(const GoldAnnotation& gold, ExplanationKind kind) {
  const auto& first = kind == ExplanationKind::kSpanPair ? gold.span_gold : gold.pair_gold;
  const auto& second = kind == ExplanationKind::kSpanPair ? gold.pair_gold : gold.span_gold;
  if (first && !first->empty()) return *first;
  if (second) return *second;
  return {};
}

namespace {

struct Budgets {
  std::vector<std::vector<int>> theta;  // per instance, per k
  std::vector<char> usable;
  std::vector<int> random_tokens;  // per k
  std::vector<int> random_units;   // per k
};

Budgets compute_budgets(const std::vector<Instance>& data, const MethodSets& span_source, int k_max,
                        std::vector<SkippedInstance>& skipped) {
  require(k_max >= 1, ErrorKind::kConfig, "k_max must be at least 1");
  require(span_source.kind == ExplanationKind::kSpanPair, ErrorKind::kConfig,
          "the budget source must be a SpanIntEx method");
  Budgets b;
  b.theta.resize(data.size());
  b.usable.assign(data.size(), 0);
  std::vector<double> token_sum(static_cast<std::size_t>(k_max), 0.0);
  std::vector<double> unit_sum(static_cast<std::size_t>(k_max), 0.0);
  int count = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!span_source.has(data[i].id) || span_source.at(data[i].id).entries.empty()) {
      skipped.push_back({data[i].id, "span method produced no spans"});
      continue;
    }
    const auto& spans = span_source.at(data[i].id);
    b.theta[i] = budgets_from_spans(spans, k_max);
    b.usable[i] = 1;
    ++count;
    for (int k = 1; k <= k_max; ++k) {
      token_sum[static_cast<std::size_t>(k - 1)] += b.theta[i][static_cast<std::size_t>(k - 1)];
      unit_sum[static_cast<std::size_t>(k - 1)] += std::min<int>(k, spans.upper_limit());
    }
  }
  for (int k = 0; k < k_max; ++k) {
    const double denom = count > 0 ? count : 1;
    b.random_tokens.push_back(static_cast<int>(std::lround(token_sum[static_cast<std::size_t>(k)] / denom)));
    b.random_units.push_back(static_cast<int>(std::lround(unit_sum[static_cast<std::size_t>(k)] / denom)));
  }
  return b;
}

const GoldAnnotation* gold_for(const std::map<std::string, GoldAnnotation>& golds,
                               const std::string& id) {
  auto it = golds.find(id);
  return it == golds.end() ? nullptr : &it->second;
}

}  // namespace

LevelResult map_token_level(const std::vector<Instance>& data,
                            const std::map<std::string, GoldAnnotation>& golds,
                            const std::vector<MethodSets>& methods, const MethodSets& span_source,
                            const AgreementOptions& options) {
  LevelResult r;
  r.level = "token";
  r.matcher = options.matcher;
  const auto b = compute_budgets(data, span_source, options.k_max, r.skipped);
  std::vector<double> sums(methods.size(), 0.0);
  double random_sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& x = data[i];
    const auto* g = gold_for(golds, x.id);
    if (!b.usable[i] || !g) continue;
    const auto gold = token_units(token_gold_of(*g));
    if (gold.empty()) continue;
    ++r.n_instances;
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const auto& attr = methods[mi].at(x.id);
      std::vector<std::vector<ExplanationUnit>> nested;
      for (int k = 1; k <= options.k_max; ++k) {
        const auto sel = match_budget(attr, b.theta[i][static_cast<std::size_t>(k - 1)], k);
        nested.push_back(token_units(sel.tokens));
      }
      sums[mi] += average_precision(nested, gold, options.matcher);
    }
    Rng rng = make_rng(options.seed, i);
    const auto perm = random_permutation(x.size(), rng);
    std::vector<std::vector<ExplanationUnit>> nested;
    for (int k = 1; k <= options.k_max; ++k) {
      const int size = std::min(b.random_tokens[static_cast<std::size_t>(k - 1)], x.size());
      TokenSet pick(perm.begin(), perm.begin() + size);
      std::sort(pick.begin(), pick.end());
      nested.push_back(token_units(pick));
    }
    random_sum += average_precision(nested, gold, options.matcher);
  }
  require(r.n_instances > 0, ErrorKind::kDegenerate, "token-level agreement: no instance has gold");
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    r.methods.push_back({methods[mi].method, methods[mi].kind, sums[mi] / r.n_instances,
                         r.n_instances});
  }
  r.random_map = random_sum / r.n_instances;
  return r;
}

LevelResult map_interaction_level(const std::vector<Instance>& data,
                                  const std::map<std::string, GoldAnnotation>& golds,
                                  const std::vector<MethodSets>& methods,
                                  const MethodSets& span_source, const AgreementOptions& options) {
  for (const auto& ms : methods) {
    require(ms.kind != ExplanationKind::kToken, ErrorKind::kContract,
            "interaction-level agreement is undefined for TokenEx (" + ms.method + ")");
  }
  LevelResult r;
  r.level = "interaction";
  r.matcher = options.matcher;
  const auto b = compute_budgets(data, span_source, options.k_max, r.skipped);
  std::vector<double> sums(methods.size(), 0.0);
  std::vector<int> counts(methods.size(), 0);
  double random_sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& x = data[i];
    const auto* g = gold_for(golds, x.id);
    if (!b.usable[i] || !g) continue;
    const auto pair_like = interaction_gold_of(*g, ExplanationKind::kTokenPair);
    if (pair_like.empty()) continue;
    ++r.n_instances;
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const auto gold = interaction_gold_of(*g, methods[mi].kind);
      const auto& attr = methods[mi].at(x.id);
      std::vector<std::vector<ExplanationUnit>> nested;
      for (int k = 1; k <= options.k_max; ++k) {
        nested.push_back(match_budget(attr, b.theta[i][static_cast<std::size_t>(k - 1)], k).units);
      }
      sums[mi] += average_precision(nested, gold, options.matcher);
      ++counts[mi];
    }
    // Random cross pairs, nested prefixes of one random order.
    Rng rng = make_rng(options.seed, i);
    const auto perm = random_permutation(x.m() * x.n(), rng);
    std::vector<std::vector<ExplanationUnit>> nested;
    for (int k = 1; k <= options.k_max; ++k) {
      const int size = std::min(b.random_units[static_cast<std::size_t>(k - 1)], x.m() * x.n());
      std::vector<ExplanationUnit> pick;
      for (int t = 0; t < size; ++t) {
        const int code = perm[static_cast<std::size_t>(t)];
        pick.push_back(ExplanationUnit::pair(code / x.n(), x.m() + code % x.n()));
      }
      nested.push_back(std::move(pick));
    }
    random_sum += average_precision(nested, pair_like, options.matcher);
  }
  require(r.n_instances > 0, ErrorKind::kDegenerate,
          "interaction-level agreement: no instance has pair or span gold");
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    r.methods.push_back({methods[mi].method, methods[mi].kind, sums[mi] / counts[mi], counts[mi]});
  }
  r.random_map = random_sum / r.n_instances;
  return r;
}

}  // namespace unieval
