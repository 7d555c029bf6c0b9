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

#include "unieval/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>

#include "unieval/error.hpp"
#include "unieval/faithfulness.hpp"
#include "unieval/louvain.hpp"
#include "unieval/rng.hpp"

namespace unieval {

InteractionGraph::InteractionGraph(int m_, int n_)
    : m(m_), n(n_),
      directed(static_cast<std::size_t>(m_ + n_) * static_cast<std::size_t>(m_ + n_), 0.0) {}

double InteractionGraph::at(int i, int j) const {
  return directed[static_cast<std::size_t>(i) * static_cast<std::size_t>(size()) +
                  static_cast<std::size_t>(j)];
}

void InteractionGraph::set(int i, int j, double w) {
  directed[static_cast<std::size_t>(i) * static_cast<std::size_t>(size()) +
           static_cast<std::size_t>(j)] = w;
}

void InteractionGraph::validate() const {
  for (int p = 0; p < m; ++p) {
    for (int q = m; q < size(); ++q) {
      require(std::isfinite(at(p, q)) && std::isfinite(at(q, p)), ErrorKind::kNumeric,
              "non-finite interaction weight between tokens " + std::to_string(p) + " and " +
                  std::to_string(q));
    }
  }
}

InteractionGraph graph_from_bivariate(const BivariateResult& r) {
  InteractionGraph g(r.m, r.n);
  for (int p = 0; p < r.m; ++p) {
    for (int q = r.m; q < r.m + r.n; ++q) {
      g.set(p, q, r.directed_at(p, q));
      g.set(q, p, r.directed_at(q, p));
    }
  }
  return g;
}

AttributionSet exact_shapley_set(const ModelGame& game, const std::string& method,
                                 RankingRule rule, int cap) {
  const auto phi = exact_shapley(game, cap);
  return token_attribution(game.instance(), method, phi, rule);
}

AttributionSet kernel_shap_set(const ModelGame& game, const std::string& method, int samples,
                               std::uint64_t seed, RankingRule rule,
                               const KernelShapOptions& options) {
  const auto r = kernel_shap(game, samples, seed, options);
  auto set = token_attribution(game.instance(), method, r.phi, rule);
  if (r.ridge_fallback) set.warnings.push_back("kernel regression singular; ridge 1e-8 applied");
  return set;
}

AttributionSet pair_set(const std::string& instance_id, const std::string& method,
                        const BivariateResult& r, RankingRule rule) {
  std::vector<ScoredUnit> entries;
  entries.reserve(static_cast<std::size_t>(r.m) * static_cast<std::size_t>(r.n));
  for (int p = 0; p < r.m; ++p) {
    for (int q = r.m; q < r.m + r.n; ++q) {
      entries.push_back({ExplanationUnit::pair(p, q), r.pair_at(p, q)});
    }
  }
  return make_attribution(instance_id, ExplanationKind::kTokenPair, method, std::move(entries),
                          rule);
}

IgResult integrated_gradients(const Model& model, const Instance& x, int steps, int target) {
  require(steps >= 1, ErrorKind::kConfig, "integrated gradients needs at least one step");
  require(model.capabilities().grad_dot, ErrorKind::kCapability,
          "model '" + model.id() + "' does not support grad_dot (needed by integrated gradients)");
  const auto tokens = x.tokens();
  const auto baseline = all_mask(x, model.mask_token());
  IgResult r;
  r.scores.assign(tokens.size(), 0.0);
  for (int t = 1; t <= steps; ++t) {
    const double alpha = (t - 0.5) / steps;
    const auto g = model.grad_dot(tokens, baseline, alpha, target);
    for (std::size_t i = 0; i < g.size(); ++i) r.scores[i] += g[i];
  }
  double total = 0.0;
  for (double& s : r.scores) {
    s /= steps;
    total += s;
  }
  const auto ends = model.predict_batch(std::vector<TokenSeq>{tokens, baseline});
  const double diff = centered_logit(ends[0], target) - centered_logit(ends[1], target);
  r.completeness_gap = std::abs(total - diff);
  return r;
}

AttributionSet ig_set(const Model& model, const Instance& x, int steps, const std::string& method,
                      RankingRule rule) {
  const int target = model.predict(x.tokens()).label;
  const auto r = integrated_gradients(model, x, steps, target);
  auto set = token_attribution(x, method, r.scores, rule);
  set.warnings.push_back("completeness_gap=" + std::to_string(r.completeness_gap));
  return set;
}

namespace {

void check_head(const AttentionMap& map, int head) {
  require(head >= 0 && head < static_cast<int>(map.heads.size()), ErrorKind::kValidation,
          "attention head " + std::to_string(head) + " out of range (model has " +
              std::to_string(map.heads.size()) + ")");
}

AttentionMap checked_attention(const Model& model, const Instance& x) {
  require(model.capabilities().attention, ErrorKind::kCapability,
          "model '" + model.id() + "' does not expose attention");
  return model.attention(x.tokens());
}

}  // namespace

std::vector<double> attention_token_scores(const AttentionMap& map, const Instance& x, int head) {
  check_head(map, head);
  const auto& a = map.heads[static_cast<std::size_t>(head)];
  const int anchor = map.anchor_position();
  std::vector<double> scores(static_cast<std::size_t>(x.size()));
  for (int i = 0; i < x.size(); ++i) {
    scores[static_cast<std::size_t>(i)] = a.at(anchor, map.position_of(i));
  }
  return scores;
}

AttributionSet attention_token(const Model& model, const Instance& x, int head,
                               const std::string& method, RankingRule rule) {
  const auto map = checked_attention(model, x);
  return token_attribution(x, method, attention_token_scores(map, x, head), rule);
}

InteractionGraph attention_graph(const AttentionMap& map, const Instance& x, int head) {
  check_head(map, head);
  const auto& a = map.heads[static_cast<std::size_t>(head)];
  InteractionGraph g(x.m(), x.n());
  for (int p = 0; p < x.m(); ++p) {
    for (int q = x.m(); q < x.size(); ++q) {
      const int pp = map.position_of(p);
      const int pq = map.position_of(q);
      g.set(p, q, a.at(pp, pq));
      g.set(q, p, a.at(pq, pp));
    }
  }
  return g;
}

AttributionSet attention_interaction(const Instance& x, const InteractionGraph& g,
                                     const std::string& method, RankingRule rule) {
  std::vector<ScoredUnit> entries;
  for (int p = 0; p < x.m(); ++p) {
    for (int q = x.m(); q < x.size(); ++q) {
      entries.push_back({ExplanationUnit::pair(p, q), 0.5 * (g.at(p, q) + g.at(q, p))});
    }
  }
  return make_attribution(x.id, ExplanationKind::kTokenPair, method, std::move(entries), rule);
}

int select_head(const Model& model, const std::vector<Instance>& calibration,
                const std::vector<int>& heads, int budget) {
  require(!calibration.empty(), ErrorKind::kConfig, "head selection needs calibration instances");
  require(!heads.empty(), ErrorKind::kConfig, "head selection needs candidate heads");
  require(budget >= 1, ErrorKind::kConfig, "head selection budget must be at least 1");
  std::vector<long> hits(heads.size(), 0);
  for (const auto& x : calibration) {
    const auto map = checked_attention(model, x);
    const int y = model.predict(x.tokens()).label;
    for (std::size_t h = 0; h < heads.size(); ++h) {
      const auto set = token_attribution(x, "attention", attention_token_scores(map, x, heads[h]));
      const auto top = set.top(budget);
      hits[h] += comp_point(model, x, tokens_of(top), y);
    }
  }
  std::size_t best = 0;
  for (std::size_t h = 1; h < heads.size(); ++h) {
    if (hits[h] > hits[best] || (hits[h] == hits[best] && heads[h] < heads[best])) best = h;
  }
  return heads[best];
}

namespace {

// Maximal runs of consecutive indices in a sorted list, as [first, last].
std::vector<std::pair<int, int>> contiguous_runs(const std::vector<int>& sorted) {
  std::vector<std::pair<int, int>> runs;
  for (int v : sorted) {
    if (!runs.empty() && runs.back().second + 1 == v) {
      runs.back().second = v;
    } else {
      runs.emplace_back(v, v);
    }
  }
  return runs;
}

}  // namespace

AttributionSet louvain_spans(const Instance& x, const AttributionSet& pairs,
                             const InteractionGraph& g, const std::string& method,
                             double resolution, std::uint64_t seed, RankingRule rule,
                             SpanDiagnostics* diagnostics) {
  require(pairs.kind == ExplanationKind::kTokenPair, ErrorKind::kContract,
          "span extraction needs a TokenIntEx set");
  require(g.m == x.m() && g.n == x.n(), ErrorKind::kContract,
          "interaction graph does not match the instance");
  g.validate();
  const int m = x.m();
  const int total = x.size();

  std::vector<double> score(static_cast<std::size_t>(m) * static_cast<std::size_t>(x.n()), 0.0);
  for (const auto& e : pairs.entries) {
    e.unit.validate(x.m(), x.n());
    score[static_cast<std::size_t>(e.unit[0]) * static_cast<std::size_t>(x.n()) +
          static_cast<std::size_t>(e.unit[1] - m)] = e.score;
  }
  auto pair_score = [&](int p, int q) {
    return score[static_cast<std::size_t>(p) * static_cast<std::size_t>(x.n()) +
                 static_cast<std::size_t>(q - m)];
  };

  double lowest = 0.0;
  for (int p = 0; p < m; ++p) {
    for (int q = m; q < total; ++q) lowest = std::min(lowest, 0.5 * (g.at(p, q) + g.at(q, p)));
  }
  WeightedGraph graph(total);
  for (int p = 0; p < m; ++p) {
    for (int q = m; q < total; ++q) graph.set(p, q, 0.5 * (g.at(p, q) + g.at(q, p)) - lowest);
  }
  const auto community = louvain(graph, resolution, seed);

  std::map<int, std::pair<std::vector<int>, std::vector<int>>> members;
  for (int i = 0; i < total; ++i) {
    auto& slot = members[community[static_cast<std::size_t>(i)]];
    (i < m ? slot.first : slot.second).push_back(i);
  }
  std::vector<ScoredUnit> entries;
  SpanDiagnostics diag;
  for (const auto& [c, sides] : members) {
    ++diag.communities;
    if (sides.first.empty() || sides.second.empty()) {
      ++diag.one_sided;
      continue;
    }
    for (const auto& [s, s_end] : contiguous_runs(sides.first)) {
      for (const auto& [t, t_end] : contiguous_runs(sides.second)) {
        double sum = 0.0;
        for (int p = s; p <= s_end; ++p) {
          for (int q = t; q <= t_end; ++q) sum += pair_score(p, q);
        }
        const int tokens = (s_end - s + 1) + (t_end - t + 1);
        entries.push_back({ExplanationUnit::span_pair(s, s_end, t, t_end), sum / tokens});
      }
    }
  }
  if (diagnostics) *diagnostics = diag;
  auto set = make_attribution(x.id, ExplanationKind::kSpanPair, method, std::move(entries), rule);
  if (diag.one_sided > 0) {
    set.warnings.push_back(std::to_string(diag.one_sided) +
                           " one-sided communities produced no span pair");
  }
  return set;
}

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names{"shapley", "kernel-shapley", "attention", "ig"};
  return names;
}

std::vector<ExplanationKind> method_kinds(const std::string& method) {
  if (method == "shapley" || method == "attention") {
    return {ExplanationKind::kToken, ExplanationKind::kTokenPair, ExplanationKind::kSpanPair};
  }
  if (method == "kernel-shapley" || method == "ig") return {ExplanationKind::kToken};
  std::string known;
  for (const auto& n : method_names()) known += (known.empty() ? "" : ", ") + n;
  fail(ErrorKind::kConfig, "unknown method '" + method + "' (known: " + known + ")");
}

void check_method_capability(const std::string& method, const Model& model) {
  method_kinds(method);
  if (method == "ig") {
    require(model.capabilities().grad_dot, ErrorKind::kCapability,
            "method 'ig' needs the grad_dot capability, which model '" + model.id() + "' lacks");
  }
  if (method == "attention") {
    require(model.capabilities().attention, ErrorKind::kCapability,
            "method 'attention' needs the attention capability, which model '" + model.id() +
                "' lacks");
  }
}

namespace {

std::vector<AttributionSet> explain_shapley(const ModelPtr& model, const Instance& x,
                                            std::size_t position, const MethodOptions& o) {
  const ModelGame game(model, x);
  const std::uint64_t seed = split_seed(o.seed, position);
  std::vector<AttributionSet> out;
  BivariateResult biv;
  if (x.size() <= o.exact_cap) {
    const auto table = coalition_table(game, o.exact_cap);
    const auto phi = shapley_from_table(table, x.size());
    out.push_back(token_attribution(x, "shapley", phi, o.rule));
    const auto all = directed_bivariate_from_table(table, x.size());
    biv.m = x.m();
    biv.n = x.n();
    biv.directed = all;
    biv.pair.assign(static_cast<std::size_t>(x.m()) * static_cast<std::size_t>(x.n()), 0.0);
    for (int p = 0; p < x.m(); ++p) {
      for (int q = x.m(); q < x.size(); ++q) {
        biv.pair[static_cast<std::size_t>(p) * static_cast<std::size_t>(x.n()) +
                 static_cast<std::size_t>(q - x.m())] =
            0.5 * (biv.directed_at(p, q) + biv.directed_at(q, p));
      }
    }
  } else {
    auto tok = kernel_shap_set(game, "shapley", std::max(o.kernel_samples, x.size() + 2),
                               split_seed(seed, 1), o.rule);
    tok.warnings.push_back("above the exact cap; kernel SHAP used");
    out.push_back(std::move(tok));
    BivariateOptions bo;
    bo.exact_cap = o.exact_cap;
    bo.permutations = o.permutations;
    bo.seed = split_seed(seed, 2);
    biv = bivariate_shapley(game, x.m(), bo);
  }
  out.push_back(pair_set(x.id, "shapley", biv, o.rule));
  out.push_back(louvain_spans(x, out.back(), graph_from_bivariate(biv), "shapley", o.resolution,
                              split_seed(seed, 3), o.rule));
  return out;
}

std::vector<AttributionSet> explain_attention(const ModelPtr& model, const Instance& x,
                                              std::size_t position, const MethodOptions& o) {
  const auto map = checked_attention(*model, x);
  std::vector<AttributionSet> out;
  out.push_back(token_attribution(x, "attention", attention_token_scores(map, x, o.head), o.rule));
  const auto g = attention_graph(map, x, o.head);
  out.push_back(attention_interaction(x, g, "attention", o.rule));
  out.push_back(louvain_spans(x, out.back(), g, "attention", o.resolution,
                              split_seed(split_seed(o.seed, position), 3), o.rule));
  return out;
}

}  // namespace

std::vector<AttributionSet> explain_instance(const std::string& method, const ModelPtr& model,
                                             const Instance& x, std::size_t position,
                                             const MethodOptions& options) {
  check_method_capability(method, *model);
  if (method == "shapley") return explain_shapley(model, x, position, options);
  if (method == "attention") return explain_attention(model, x, position, options);
  if (method == "kernel-shapley") {
    const ModelGame game(model, x);
    return {kernel_shap_set(game, method, std::max(options.kernel_samples, x.size() + 2),
                            split_seed(split_seed(options.seed, position), 1), options.rule)};
  }
  return {ig_set(*model, x, options.ig_steps, method, options.rule)};
}

std::vector<MethodSets> explain_dataset(const std::string& method, const ModelPtr& model,
                                        const std::vector<Instance>& data,
                                        const MethodOptions& options, bool parallel) {
  const auto kinds = method_kinds(method);
  check_method_capability(method, *model);
  std::vector<std::vector<AttributionSet>> results(data.size());
  std::exception_ptr error;
  const bool par = parallel && model->thread_safe();
#pragma omp parallel for schedule(dynamic) if (par)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(data.size()); ++i) {
    try {
      results[static_cast<std::size_t>(i)] =
          explain_instance(method, model, data[static_cast<std::size_t>(i)],
                           static_cast<std::size_t>(i), options);
    } catch (...) {
#pragma omp critical(unieval_explain_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  std::vector<MethodSets> out;
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    MethodSets ms;
    ms.method = method;
    ms.kind = kinds[k];
    for (auto& per : results) ms.sets.emplace(per[k].instance_id, std::move(per[k]));
    out.push_back(std::move(ms));
  }
  return out;
}

}  // namespace unieval
