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

#include "unieval/simulatability.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <set>

#include "unieval/error.hpp"
#include "unieval/faithfulness.hpp"
#include "unieval/rng.hpp"

namespace unieval {

std::string_view insertion_name(Insertion i) {
  switch (i) {
    case Insertion::kNone:
      return "none";
    case Insertion::kSymbol:
      return "symbol";
    case Insertion::kText:
      return "text";
  }
  return "none";
}

Insertion parse_insertion(std::string_view name) {
  if (name == "none") return Insertion::kNone;
  if (name == "symbol") return Insertion::kSymbol;
  if (name == "text") return Insertion::kText;
  fail(ErrorKind::kConfig, "unknown insertion '" + std::string(name) + "' (none, symbol, text)");
}

std::string rank_mark(int rank) {
  require(rank >= 1, ErrorKind::kContract, "ranks are 1-based");
  return rank <= 9 ? "#" + std::to_string(rank) : "#9+";
}

namespace {

// Token ranges of a unit, part1 first.
std::vector<std::pair<int, int>> regions_of(const ExplanationUnit& u) {
  switch (u.kind()) {
    case ExplanationKind::kToken:
      return {{u[0], u[0]}};
    case ExplanationKind::kTokenPair:
      return {{u[0], u[0]}, {u[1], u[1]}};
    case ExplanationKind::kSpanPair:
      return {{u[0], u[1]}, {u[2], u[3]}};
  }
  return {};
}

}  // namespace

TokenSeq insert_symbol(const Instance& x, std::span<const ExplanationUnit> units) {
  const int total = x.size();
  std::vector<char> covered(static_cast<std::size_t>(total), 0);
  std::vector<int> open_rank(static_cast<std::size_t>(total), 0);
  std::vector<int> close_rank(static_cast<std::size_t>(total), 0);
  for (std::size_t r = 0; r < units.size(); ++r) {
    units[r].validate(x.m(), x.n());
    const int rank = static_cast<int>(r) + 1;
    for (const auto& [a, b] : regions_of(units[r])) {
      int i = a;
      while (i <= b) {
        if (covered[static_cast<std::size_t>(i)]) {
          ++i;
          continue;
        }
        int j = i;
        while (j + 1 <= b && !covered[static_cast<std::size_t>(j + 1)]) ++j;
        for (int t = i; t <= j; ++t) covered[static_cast<std::size_t>(t)] = 1;
        open_rank[static_cast<std::size_t>(i)] = rank;
        close_rank[static_cast<std::size_t>(j)] = rank;
        i = j + 1;
      }
    }
  }
  TokenSeq out;
  out.reserve(static_cast<std::size_t>(total) + 4 * units.size() * 2);
  for (int i = 0; i < total; ++i) {
    if (open_rank[static_cast<std::size_t>(i)]) out.emplace_back("<");
    out.push_back(x.token(i));
    if (close_rank[static_cast<std::size_t>(i)]) {
      out.emplace_back(">");
      out.push_back(rank_mark(close_rank[static_cast<std::size_t>(i)]));
    }
  }
  return out;
}

TokenSeq insert_text(const Instance& x, std::span<const ExplanationUnit> units) {
  TokenSeq out = x.tokens();
  if (units.empty()) return out;
  out.emplace_back("||");
  for (std::size_t r = 0; r < units.size(); ++r) {
    units[r].validate(x.m(), x.n());
    if (r > 0) out.emplace_back(";");
    const auto regions = regions_of(units[r]);
    for (std::size_t g = 0; g < regions.size(); ++g) {
      if (g > 0) out.emplace_back(",");
      for (int i = regions[g].first; i <= regions[g].second; ++i) out.push_back(x.token(i));
    }
  }
  return out;
}

TokenSeq insert_explanation(Insertion mode, const Instance& x,
                            std::span<const ExplanationUnit> units) {
  switch (mode) {
    case Insertion::kNone:
      return x.tokens();
    case Insertion::kSymbol:
      return insert_symbol(x, units);
    case Insertion::kText:
      return insert_text(x, units);
  }
  return x.tokens();
}

int SimulationDataset::count(Split s) const {
  return static_cast<int>(std::count(split.begin(), split.end(), s));
}

SimulationDataset build_simulation_splits(const Model& model, const std::vector<Instance>& data,
                                          const SplitRatios& ratios, std::uint64_t seed) {
  require(ratios.train > 0 && ratios.dev > 0 && ratios.test > 0 &&
              std::abs(ratios.train + ratios.dev + ratios.test - 1.0) < 1e-9,
          ErrorKind::kConfig, "split ratios must be positive and sum to 1");
  const auto n = static_cast<int>(data.size());
  const int n_train = static_cast<int>(std::floor(ratios.train * n + 1e-9));
  const int n_dev = static_cast<int>(std::floor(ratios.dev * n + 1e-9));
  const int n_test = n - n_train - n_dev;
  require(n_train > 0 && n_dev > 0 && n_test > 0, ErrorKind::kValidation,
          "dataset of " + std::to_string(n) + " instances is too small for non-empty splits");

  SimulationDataset sim;
  sim.instances = data;
  sim.num_classes = model.num_classes();
  std::vector<TokenSeq> inputs;
  inputs.reserve(data.size());
  for (const auto& x : data) inputs.push_back(x.tokens());
  for (const auto& p : model.predict_batch(inputs)) sim.simulated.push_back(p.label);

  Rng rng = make_rng(seed, 0x5e1);
  const auto order = random_permutation(n, rng);
  sim.split.assign(data.size(), Split::kTest);
  for (int r = 0; r < n; ++r) {
    const auto idx = static_cast<std::size_t>(order[static_cast<std::size_t>(r)]);
    sim.split[idx] = r < n_train ? Split::kTrain : (r < n_train + n_dev ? Split::kDev : Split::kTest);
  }
  return sim;
}

Agent::Agent(std::vector<std::string> features, int classes)
    : features_(std::move(features)), classes_(classes) {
  for (std::size_t i = 0; i < features_.size(); ++i) index_.emplace(features_[i], static_cast<int>(i));
  w_.assign(features_.size() * static_cast<std::size_t>(classes), 0.0);
  b_.assign(static_cast<std::size_t>(classes), 0.0);
}

namespace {

void collect_features(const TokenSeq& seq, std::vector<std::string>& out) {
  for (std::size_t i = 0; i < seq.size(); ++i) {
    out.push_back("u:" + seq[i]);
    if (i + 1 < seq.size()) out.push_back("b:" + seq[i] + " " + seq[i + 1]);
  }
}

}  // namespace

std::vector<std::pair<int, double>> Agent::featurize(const TokenSeq& seq) const {
  std::vector<std::string> names;
  collect_features(seq, names);
  std::map<int, double> counts;
  for (const auto& f : names) {
    auto it = index_.find(f);
    if (it != index_.end()) counts[it->second] += 1.0;
  }
  return {counts.begin(), counts.end()};
}

std::vector<double> Agent::logits(const TokenSeq& seq) const {
  std::vector<double> z = b_;
  for (const auto& [f, c] : featurize(seq)) {
    for (int k = 0; k < classes_; ++k) {
      z[static_cast<std::size_t>(k)] += c * w_[static_cast<std::size_t>(f) * classes_ + k];
    }
  }
  return z;
}

int Agent::predict(const TokenSeq& seq) const {
  const auto z = logits(seq);
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

nlohmann::json Agent::to_json() const {
  nlohmann::json j;
  j["classes"] = classes_;
  j["bias"] = b_;
  nlohmann::json rows = nlohmann::json::object();
  for (std::size_t f = 0; f < features_.size(); ++f) {
    std::vector<double> row(w_.begin() + static_cast<std::ptrdiff_t>(f * classes_),
                            w_.begin() + static_cast<std::ptrdiff_t>((f + 1) * classes_));
    rows[features_[f]] = row;
  }
  j["weights"] = rows;
  return j;
}

double macro_f1(std::span<const int> predicted, std::span<const int> gold, int classes) {
  require(predicted.size() == gold.size(), ErrorKind::kContract, "prediction/gold size mismatch");
  std::vector<int> tp(static_cast<std::size_t>(classes), 0);
  std::vector<int> fp(static_cast<std::size_t>(classes), 0);
  std::vector<int> fn(static_cast<std::size_t>(classes), 0);
  std::vector<char> present(static_cast<std::size_t>(classes), 0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto p = static_cast<std::size_t>(predicted[i]);
    const auto g = static_cast<std::size_t>(gold[i]);
    present[p] = present[g] = 1;
    if (p == g) {
      ++tp[p];
    } else {
      ++fp[p];
      ++fn[g];
    }
  }
  double sum = 0.0;
  int labels = 0;
  for (int c = 0; c < classes; ++c) {
    const auto uc = static_cast<std::size_t>(c);
    if (!present[uc]) continue;
    ++labels;
    const int denom = 2 * tp[uc] + fp[uc] + fn[uc];
    sum += denom == 0 ? 0.0 : 2.0 * tp[uc] / denom;
  }
  return labels == 0 ? 0.0 : sum / labels;
}

namespace {

struct Example {
  std::vector<std::pair<int, double>> x;
  int y = 0;
};

double evaluate(const Agent& agent, const std::vector<TokenSeq>& inputs, const std::vector<int>& ys) {
  std::vector<int> pred;
  pred.reserve(inputs.size());
  for (const auto& s : inputs) pred.push_back(agent.predict(s));
  return macro_f1(pred, ys, agent.classes());
}

}  // namespace

TrainedAgent train_agent(const SimulationDataset& sim, Insertion mode,
                         const ExplanationLists* explanations, const AgentParams& params) {
  require(params.epochs >= 1 && params.learning_rate > 0 && params.l2 >= 0,
          ErrorKind::kConfig, "invalid agent hyperparameters");
  std::vector<TokenSeq> inputs[3];
  std::vector<int> ys[3];
  for (std::size_t i = 0; i < sim.size(); ++i) {
    const auto& x = sim.instances[i];
    std::span<const ExplanationUnit> units;
    if (mode != Insertion::kNone && explanations) {
      auto it = explanations->find(x.id);
      if (it != explanations->end()) units = it->second;
    }
    const auto s = static_cast<int>(sim.split[i]);
    inputs[s].push_back(insert_explanation(mode, x, units));
    ys[s].push_back(sim.simulated[i]);
  }

  std::set<std::string> vocab;
  for (const auto& seq : inputs[0]) {
    std::vector<std::string> names;
    collect_features(seq, names);
    vocab.insert(names.begin(), names.end());
  }
  Agent agent(std::vector<std::string>(vocab.begin(), vocab.end()), sim.num_classes);
  std::vector<Example> train;
  for (std::size_t i = 0; i < inputs[0].size(); ++i) {
    train.push_back({agent.featurize(inputs[0][i]), ys[0][i]});
  }

  const int c = sim.num_classes;
  auto& w = agent.weights();
  auto& b = agent.bias();
  Rng rng = make_rng(params.seed, 0xa6e7);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainedAgent best;
  best.agent = agent;
  best.dev_f1 = -1.0;
  int since_best = 0;
  std::vector<double> z(static_cast<std::size_t>(c));
  for (int epoch = 1; epoch <= params.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t idx : order) {
      const auto& ex = train[idx];
      for (int k = 0; k < c; ++k) z[static_cast<std::size_t>(k)] = b[static_cast<std::size_t>(k)];
      for (const auto& [f, v] : ex.x) {
        for (int k = 0; k < c; ++k) {
          z[static_cast<std::size_t>(k)] += v * w[static_cast<std::size_t>(f) * c + k];
        }
      }
      const auto p = softmax(z);
      for (int k = 0; k < c; ++k) {
        const double g = p[static_cast<std::size_t>(k)] - (k == ex.y ? 1.0 : 0.0);
        b[static_cast<std::size_t>(k)] -= params.learning_rate * g;
        for (const auto& [f, v] : ex.x) {
          double& wk = w[static_cast<std::size_t>(f) * c + k];
          wk -= params.learning_rate * (g * v + params.l2 * wk);
        }
      }
    }
    for (double v : w) {
      if (!std::isfinite(v)) {
        fail(ErrorKind::kNumeric,
             "agent training diverged (learning_rate=" + std::to_string(params.learning_rate) +
                 ", l2=" + std::to_string(params.l2) + ", epochs=" + std::to_string(params.epochs) +
                 ")");
      }
    }
    const double dev = evaluate(agent, inputs[1], ys[1]);
    if (dev > best.dev_f1) {
      best.agent = agent;
      best.dev_f1 = dev;
      best.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= params.patience) {
      break;
    }
  }
  best.test_f1 = evaluate(best.agent, inputs[2], ys[2]);
  return best;
}

ExplanationLists select_for_simulation(const std::vector<Instance>& data, const MethodSets& method,
                                       const MethodSets& span_source, int k) {
  require(k >= 1, ErrorKind::kConfig, "simulatability k must be at least 1");
  ExplanationLists out;
  for (const auto& x : data) {
    if (!span_source.has(x.id) || span_source.at(x.id).entries.empty()) {
      out[x.id] = {};
      continue;
    }
    const int theta = budget_from_spans(span_source.at(x.id), k);
    out[x.id] = match_budget(method.at(x.id), theta, k).units;
  }
  return out;
}

SimulatabilityResult simulate_with_lists(const SimulationDataset& sim,
                                         const std::vector<std::string>& names,
                                         const std::vector<ExplanationKind>& kinds,
                                         const std::vector<ExplanationLists>& lists,
                                         const SimulatabilityOptions& options) {
  require(names.size() == lists.size() && kinds.size() == lists.size(), ErrorKind::kContract,
          "one name and kind per explanation list");
  SimulatabilityResult r;
  r.insertion = options.insertion;
  r.k = options.k;
  r.seed = options.seed;
  r.train = sim.count(Split::kTrain);
  r.dev = sim.count(Split::kDev);
  r.test = sim.count(Split::kTest);
  AgentParams params = options.agent;
  params.seed = split_seed(options.seed, 1);

  r.baseline = train_agent(sim, Insertion::kNone, nullptr, params);
  r.sf_o = r.baseline.test_f1;
  r.methods.resize(lists.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(lists.size()); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    try {
      auto& s = r.methods[ui];
      s.method = names[ui];
      s.kind = kinds[ui];
      s.trained = train_agent(sim, options.insertion, &lists[ui], params);
      s.sf = s.trained.test_f1;
    } catch (...) {
#pragma omp critical(unieval_sim_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  for (auto& s : r.methods) s.rsf = s.sf - r.sf_o;
  return r;
}

SimulatabilityResult unified_simulatability(const Model& model, const std::vector<Instance>& data,
                                            const std::vector<MethodSets>& methods,
                                            const MethodSets& span_source,
                                            const SimulatabilityOptions& options) {
  const auto sim = build_simulation_splits(model, data, options.ratios, split_seed(options.seed, 0));
  std::vector<std::string> names;
  std::vector<ExplanationKind> kinds;
  std::vector<ExplanationLists> lists;
  for (const auto& ms : methods) {
    names.push_back(ms.method);
    kinds.push_back(ms.kind);
    lists.push_back(select_for_simulation(data, ms, span_source, options.k));
  }
  return simulate_with_lists(sim, names, kinds, lists, options);
}

}  // namespace unieval
