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

#include "unieval/faithfulness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "unieval/error.hpp"
#include "unieval/rng.hpp"

namespace unieval {

int budget_from_spans(const AttributionSet& spans, int k) {
  require(k >= 1, ErrorKind::kContract, "span step k must be at least 1");
  require(spans.kind == ExplanationKind::kSpanPair, ErrorKind::kContract,
          "token budgets come from a SpanIntEx set");
  if (spans.entries.empty()) {
    fail(ErrorKind::kDegenerate, "no span explanations for instance '" + spans.instance_id + "'");
  }
  const auto top = spans.top(k);
  return static_cast<int>(tokens_of(top).size());
}

std::vector<int> budgets_from_spans(const AttributionSet& spans, int k_max) {
  std::vector<int> out;
  for (int k = 1; k <= k_max; ++k) out.push_back(budget_from_spans(spans, k));
  return out;
}

Selection match_budget(const AttributionSet& attr, int theta, int k) {
  Selection sel;
  if (attr.kind == ExplanationKind::kSpanPair) {
    sel.units = attr.top(k);
    sel.tokens = tokens_of(sel.units);
    sel.saturated = static_cast<int>(attr.entries.size()) < k;
    return sel;
  }
  std::vector<int> covered;
  for (const auto& e : attr.entries) {
    if (static_cast<int>(sel.tokens.size()) >= theta) break;
    sel.units.push_back(e.unit);
    e.unit.append_tokens(covered);
    std::sort(covered.begin(), covered.end());
    covered.erase(std::unique(covered.begin(), covered.end()), covered.end());
    sel.tokens = covered;
  }
  const int got = static_cast<int>(sel.tokens.size());
  sel.saturated = got < theta;
  sel.overshoot = got > theta;
  return sel;
}

int comp_point(const Model& model, const Instance& x, const TokenSet& tokens, int y) {
  return model.predict(mask_omit(x, tokens, model.mask_token())).label != y ? 1 : 0;
}

int suff_point(const Model& model, const Instance& x, const TokenSet& tokens, int y) {
  return model.predict(mask_keep(x, tokens, model.mask_token())).label == y ? 1 : 0;
}

namespace {

struct InstanceOutcome {
  bool scored = false;
  std::string skip_reason;
  // Per method: summed CP / SP over k.
  std::vector<int> cp;
  std::vector<int> sp;
  std::vector<int> overshoots;
  std::vector<int> saturations;
  int random_cp = 0;
  int random_sp = 0;
};

InstanceOutcome score_instance(const Model& model, const Instance& x, std::size_t position,
                               const std::vector<int>& theta,
                               const std::vector<MethodSets>& methods,
                               const std::vector<int>& random_sizes,
                               const FaithfulnessOptions& options) {
  InstanceOutcome out;
  const int k_max = options.k_max;
  const auto& mask = model.mask_token();
  const int y = model.predict(x.tokens()).label;

  // One batch: for each method and k an omit and a keep sequence, then the
  // random baseline's pairs.
  std::vector<TokenSeq> batch;
  batch.reserve(2 * (methods.size() + 1) * static_cast<std::size_t>(k_max));
  out.overshoots.assign(methods.size(), 0);
  out.saturations.assign(methods.size(), 0);
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    const auto& attr = methods[mi].at(x.id);
    for (int k = 1; k <= k_max; ++k) {
      const auto sel = match_budget(attr, theta[static_cast<std::size_t>(k - 1)], k);
      for (const auto& u : sel.units) u.validate(x.m(), x.n());
      out.overshoots[mi] += sel.overshoot ? 1 : 0;
      out.saturations[mi] += sel.saturated ? 1 : 0;
      batch.push_back(mask_omit(x, sel.tokens, mask));
      batch.push_back(mask_keep(x, sel.tokens, mask));
    }
  }
  Rng rng = make_rng(options.seed, position);
  const auto perm = random_permutation(x.size(), rng);
  for (int k = 1; k <= k_max; ++k) {
    const int size = std::min(random_sizes[static_cast<std::size_t>(k - 1)], x.size());
    TokenSet pick(perm.begin(), perm.begin() + size);
    std::sort(pick.begin(), pick.end());
    batch.push_back(mask_omit(x, pick, mask));
    batch.push_back(mask_keep(x, pick, mask));
  }

  const auto preds = model.predict_batch(batch);
  std::size_t at = 0;
  out.cp.assign(methods.size(), 0);
  out.sp.assign(methods.size(), 0);
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    for (int k = 1; k <= k_max; ++k) {
      out.cp[mi] += preds[at++].label != y ? 1 : 0;
      out.sp[mi] += preds[at++].label == y ? 1 : 0;
    }
  }
  for (int k = 1; k <= k_max; ++k) {
    out.random_cp += preds[at++].label != y ? 1 : 0;
    out.random_sp += preds[at++].label == y ? 1 : 0;
  }
  out.scored = true;
  return out;
}

}  // namespace

FaithfulnessResult unified_faithfulness(const Model& model, const std::vector<Instance>& data,
                                        const std::vector<MethodSets>& methods,
                                        const MethodSets& span_source,
                                        const FaithfulnessOptions& options) {
  require(options.k_max >= 1, ErrorKind::kConfig, "k_max must be at least 1");
  require(span_source.kind == ExplanationKind::kSpanPair, ErrorKind::kConfig,
          "the budget source must be a SpanIntEx method");
  FaithfulnessResult result;
  result.k_max = options.k_max;
  result.seed = options.seed;

  // Budgets first: the random baseline size depends on all of them.
  std::vector<std::vector<int>> theta(data.size());
  std::vector<char> usable(data.size(), 0);
  std::vector<double> theta_sum(static_cast<std::size_t>(options.k_max), 0.0);
  int usable_count = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& x = data[i];
    if (!span_source.has(x.id)) {
      result.skipped.push_back({x.id, "no span explanation"});
      continue;
    }
    const auto& spans = span_source.at(x.id);
    if (spans.entries.empty()) {
      result.skipped.push_back({x.id, "span method produced no spans"});
      continue;
    }
    theta[i] = budgets_from_spans(spans, options.k_max);
    usable[i] = 1;
    ++usable_count;
    for (int k = 0; k < options.k_max; ++k) theta_sum[static_cast<std::size_t>(k)] += theta[i][static_cast<std::size_t>(k)];
  }
  if (usable_count == 0) fail(ErrorKind::kDegenerate, "faithfulness: no instance has span explanations");
  for (double s : theta_sum) {
    result.random_sizes.push_back(static_cast<int>(std::lround(s / usable_count)));
  }

  std::vector<InstanceOutcome> outcomes(data.size());
  std::exception_ptr error;
  const bool parallel = options.parallel && model.thread_safe();
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(data.size()); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (!usable[ui]) continue;
    try {
      outcomes[ui] = score_instance(model, data[ui], ui, theta[ui], methods, result.random_sizes,
                                    options);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kCapacity || e.kind() == ErrorKind::kDegenerate) {
        outcomes[ui].skip_reason = e.what();
      } else {
#pragma omp critical(unieval_faith_error)
        if (!error) error = std::current_exception();
      }
    } catch (...) {
#pragma omp critical(unieval_faith_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  result.methods.resize(methods.size());
  std::vector<long> cp(methods.size(), 0);
  std::vector<long> sp(methods.size(), 0);
  long rcp = 0;
  long rsp = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!usable[i]) continue;
    const auto& o = outcomes[i];
    if (!o.scored) {
      result.skipped.push_back({data[i].id, o.skip_reason});
      continue;
    }
    ++result.n_instances;
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      cp[mi] += o.cp[mi];
      sp[mi] += o.sp[mi];
      result.methods[mi].overshoots += o.overshoots[mi];
      result.methods[mi].saturations += o.saturations[mi];
    }
    rcp += o.random_cp;
    rsp += o.random_sp;
  }
  require(result.n_instances > 0, ErrorKind::kDegenerate, "faithfulness: every instance was skipped");
  const double denom = static_cast<double>(result.n_instances) * options.k_max;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    auto& s = result.methods[mi];
    s.method = methods[mi].method;
    s.kind = methods[mi].kind;
    s.comp = static_cast<double>(cp[mi]) / denom;
    s.suff = static_cast<double>(sp[mi]) / denom;
  }
  result.random_comp = static_cast<double>(rcp) / denom;
  result.random_suff = static_cast<double>(rsp) / denom;
  return result;
}

}  // namespace unieval
