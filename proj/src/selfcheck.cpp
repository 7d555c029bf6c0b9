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

#include "unieval/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>

#include "unieval/adapter.hpp"
#include "unieval/agreement.hpp"
#include "unieval/attribution.hpp"
#include "unieval/complexity.hpp"
#include "unieval/error.hpp"
#include "unieval/faithfulness.hpp"
#include "unieval/game.hpp"
#include "unieval/louvain.hpp"
#include "unieval/rng.hpp"
#include "unieval/shapley.hpp"
#include "unieval/simulatability.hpp"
#include "unieval/synth.hpp"
#include "unieval/toy_models.hpp"

namespace unieval {

bool SelfcheckResult::passed() const {
  return std::all_of(items.begin(), items.end(), [](const SelfcheckItem& i) { return i.passed; });
}

std::string SelfcheckResult::summary() const {
  std::string out;
  int ok = 0;
  for (const auto& i : items) {
    out += (i.passed ? "PASS " : "FAIL ") + i.name + ": " + i.detail + "\n";
    ok += i.passed ? 1 : 0;
  }
  out += std::to_string(ok) + "/" + std::to_string(items.size()) + " checks passed\n";
  return out;
}

namespace {

std::string g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

TableGame random_table_game(int n, Rng& rng) {
  std::vector<double> t(std::size_t{1} << n);
  for (double& v : t) v = uniform01(rng);
  return TableGame(n, std::move(t));
}

// Orders in which j precedes i, enumerated one permutation at a time.
double directed_by_permutations(const TableGame& g, int i, int j) {
  const int n = g.num_players();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  double sum = 0.0;
  long count = 0;
  do {
    const auto pi = std::find(order.begin(), order.end(), i) - order.begin();
    const auto pj = std::find(order.begin(), order.end(), j) - order.begin();
    if (pj > pi) continue;
    std::uint64_t before = 0;
    for (std::ptrdiff_t k = 0; k < pi; ++k) before |= std::uint64_t{1} << order[static_cast<std::size_t>(k)];
    sum += g.table()[before | (std::uint64_t{1} << i)] - g.table()[before];
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  return sum / static_cast<double>(count);
}

// Best modularity over every partition (restricted growth strings).
double best_modularity(const WeightedGraph& g, std::vector<int>& best) {
  const int n = g.size();
  std::vector<int> a(static_cast<std::size_t>(n), 0);
  double top = -1e300;
  std::function<void(int, int)> rec = [&](int pos, int maxlabel) {
    if (pos == n) {
      const double q = modularity(g, a);
      if (q > top + 1e-12) {
        top = q;
        best = a;
      }
      return;
    }
    for (int c = 0; c <= maxlabel + 1; ++c) {
      a[static_cast<std::size_t>(pos)] = c;
      rec(pos + 1, std::max(maxlabel, c));
    }
  };
  a[0] = 0;
  rec(1, 0);
  return top;
}

struct Checker {
  SelfcheckResult result;
  void run(const std::string& name, const std::function<std::string()>& body) {
    SelfcheckItem item;
    item.name = name;
    try {
      item.detail = body();
      item.passed = item.detail.rfind("FAIL ", 0) != 0;
      if (!item.passed) item.detail = item.detail.substr(5);
    } catch (const std::exception& e) {
      item.passed = false;
      item.detail = std::string("exception: ") + e.what();
    }
    result.items.push_back(std::move(item));
  }
};

std::string failed(const std::string& why) { return "FAIL " + why; }

}  // namespace

SelfcheckResult run_selfcheck(const SelfcheckOptions& options) {
  Checker c;
  const std::uint64_t seed = options.seed;

  c.run("shapley-efficiency", [&] {
    Rng rng = make_rng(seed, 1);
    double worst = 0.0;
    for (int g = 0; g < 100; ++g) {
      const int n = 2 + static_cast<int>(uniform_index(rng, 9));
      const auto game = random_table_game(n, rng);
      const auto phi = exact_shapley(game);
      const double sum = std::accumulate(phi.begin(), phi.end(), 0.0);
      worst = std::max(worst, std::fabs(sum - (game.full_value() - game.empty_value())));
    }
    if (worst > 1e-9) return failed("efficiency gap " + g6(worst));
    return "100 games, max gap " + std::string(worst < 1e-12 ? "< 1e-12" : g6(worst));
  });

  c.run("kernel-efficiency", [&] {
    Rng rng = make_rng(seed, 2);
    KernelShapOptions ko;
    if (options.corrupt_kernel_weights) ko.corrupt_weights = 1.5;
    double worst = 0.0;
    for (int g = 0; g < 10; ++g) {
      const auto game = random_table_game(8, rng);
      const auto r = kernel_shap(game, 1024, split_seed(seed, 100 + g), ko);
      const double sum = std::accumulate(r.phi.begin(), r.phi.end(), 0.0);
      worst = std::max(worst, std::fabs(sum - (game.full_value() - game.empty_value())));
    }
    if (worst > 1e-9) return failed("sum of kernel SHAP values misses v(F) - v(empty) by " + g6(worst));
    return std::string("10 games, efficiency holds");
  });

  c.run("kernel-vs-exact", [&] {
    Rng rng = make_rng(seed, 3);
    double worst = 0.0;
    for (int g = 0; g < 5; ++g) {
      const auto game = random_table_game(8, rng);
      const auto exact = exact_shapley(game);
      const auto r = kernel_shap(game, 4096, split_seed(seed, 200 + g));
      for (std::size_t i = 0; i < exact.size(); ++i) {
        worst = std::max(worst, std::fabs(exact[i] - r.phi[i]));
      }
    }
    if (worst > 0.05) return failed("max error " + g6(worst));
    return "max error " + g6(worst);
  });

  c.run("kernel-additive", [&] {
    Rng rng = make_rng(seed, 4);
    const int n = 8;
    std::vector<double> w(n);
    for (double& x : w) x = uniform01(rng) - 0.5;
    FunctionGame game(n, [&](const Coalition& s) {
      double v = 0.25;
      for (int i = 0; i < n; ++i) v += s[static_cast<std::size_t>(i)] ? w[static_cast<std::size_t>(i)] : 0.0;
      return v;
    });
    const auto r = kernel_shap(game, 512, split_seed(seed, 300));
    double worst = 0.0;
    for (int i = 0; i < n; ++i) worst = std::max(worst, std::fabs(r.phi[static_cast<std::size_t>(i)] - w[static_cast<std::size_t>(i)]));
    if (worst > 1e-6) return failed("additive weights missed by " + g6(worst));
    return std::string("additive game recovered");
  });

  c.run("bivariate-brute-force", [&] {
    Rng rng = make_rng(seed, 5);
    double worst = 0.0;
    for (int n : {3, 4}) {
      for (int g = 0; g < 5; ++g) {
        const auto game = random_table_game(n, rng);
        const auto table = directed_bivariate_from_table(game.table(), n);
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            worst = std::max(worst, std::fabs(table[static_cast<std::size_t>(i * n + j)] -
                                              directed_by_permutations(game, i, j)));
          }
        }
      }
    }
    if (worst > 1e-12) return failed("directed scores differ by " + g6(worst));
    return std::string("3- and 4-player games agree");
  });

  c.run("parallel-equals-serial", [&] {
    Rng rng = make_rng(seed, 6);
    const auto game = random_table_game(10, rng);
    const auto t_par = coalition_table(game);
    const auto t_ser = kernels::serial::coalition_table(game);
    const bool same = t_par == t_ser &&
                      shapley_from_table(t_par, 10) == kernels::serial::shapley_from_table(t_ser, 10) &&
                      directed_bivariate_from_table(t_par, 10) ==
                          kernels::serial::directed_bivariate_from_table(t_ser, 10);
    if (!same) return failed("OpenMP kernels differ from the serial reference");
    return std::string("bit-identical");
  });

  const std::vector<std::string> vocab{"a", "b", "c", "d", "e", "f"};
  auto random_instance = [&](Rng& rng, int m, int n) {
    Instance x;
    x.id = "probe";
    for (int i = 0; i < m; ++i) x.part1.push_back(vocab[uniform_index(rng, vocab.size())]);
    for (int i = 0; i < n; ++i) x.part2.push_back(vocab[uniform_index(rng, vocab.size())]);
    return x;
  };

  c.run("ig-linear-closed-form", [&] {
    Rng rng = make_rng(seed, 7);
    LinearBowParams p;
    p.vocab = vocab;
    for (std::size_t v = 0; v < vocab.size(); ++v) p.weights.push_back({uniform01(rng) - 0.5, uniform01(rng) - 0.5});
    p.bias = {0.1, -0.1};
    const auto model = make_linear_bow_model(p);
    double worst = 0.0;
    for (int t = 0; t < 5; ++t) {
      const auto x = random_instance(rng, 3, 3);
      for (int steps : {1, 7}) {
        const auto ig = integrated_gradients(*model, x, steps, 1);
        const auto toks = x.tokens();
        for (std::size_t i = 0; i < toks.size(); ++i) {
          const auto row = model->row(toks[i]);
          // Centered logit of class 1 for two classes is (l1 - l0) / 2.
          const double expect = (row[1] - row[0]) / 2.0;
          worst = std::max(worst, std::fabs(ig.scores[i] - expect));
        }
      }
    }
    if (worst > 1e-12) return failed("IG differs from closed form by " + g6(worst));
    return std::string("exact for 1 and 7 steps");
  });

  c.run("ig-completeness", [&] {
    Rng rng = make_rng(seed, 8);
    const auto model = make_toy_attention_model(vocab, "[MASK]", seed);
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
      const auto x = random_instance(rng, 3, 3);
      const int target = model->predict(x.tokens()).label;
      worst = std::max(worst, integrated_gradients(*model, x, 200, target).completeness_gap);
    }
    if (worst > 1e-2) return failed("completeness gap " + g6(worst));
    return "max gap " + g6(worst);
  });

  c.run("louvain-brute-force", [&] {
    WeightedGraph g(8);
    for (int b = 0; b < 2; ++b) {
      for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) g.set(4 * b + i, 4 * b + j, 1.0);
      }
    }
    g.set(3, 4, 0.2);
    std::vector<int> best;
    const double q = best_modularity(g, best);
    const auto found = louvain(g, 1.0, seed);
    if (found != best) return failed("Louvain partition differs from the modularity optimum");
    return "optimum Q " + g6(q);
  });

  c.run("complexity-fixtures", [&] {
    const std::vector<double> uniform(5, 0.2), point{1.0, 0.0, 0.0}, hand{0.75, 0.25};
    const double u = shannon_entropy(uniform), pm = shannon_entropy(point), h = shannon_entropy(hand);
    if (std::fabs(u - std::log(5.0)) > 1e-12) return failed("uniform entropy " + g6(u));
    if (pm != 0.0) return failed("point mass entropy " + g6(pm));
    if (std::fabs(h - 0.5623) > 1e-4) return failed("(0.75, 0.25) entropy " + g6(h));
    return std::string("uniform, point mass and hand value");
  });

  c.run("map-hand-cases", [&] {
    const auto a = ExplanationUnit::token(0), b = ExplanationUnit::token(1),
               x = ExplanationUnit::token(2);
    const std::vector<ExplanationUnit> gold{a, b};
    const double perfect = average_precision({{a, b}}, gold, Matcher::kExact);
    const double five_sixths = average_precision({{a}, {a, x}, {a, x, b}}, gold, Matcher::kExact);
    if (std::fabs(perfect - 1.0) > 1e-12) return failed("perfect prefix gives " + g6(perfect));
    if (std::fabs(five_sixths - 5.0 / 6.0) > 1e-12) return failed("[a, x, b] gives " + g6(five_sixths));
    return std::string("AP 1 and 5/6");
  });

  // Small planted task shared by the remaining checks.
  SynthSpec spec;
  spec.instances = 40;
  spec.seed = seed;
  const auto synth = generate(spec);
  std::vector<Instance> data;
  for (const auto& r : synth.records) data.push_back(r.instance);

  c.run("faithfulness-constant-model", [&] {
    const ModelPtr model = make_constant_model({0.7, 0.3});
    MethodOptions mo;
    mo.seed = seed;
    std::vector<Instance> few(data.begin(), data.begin() + 10);
    // Scores of a constant model are all zero; spans come from the linear one.
    const auto spans = explain_dataset("shapley", make_linear_bow_model(synth.linear), few, mo);
    const auto sets = explain_dataset("shapley", model, few, mo);
    FaithfulnessOptions fo;
    fo.seed = seed;
    const auto r = unified_faithfulness(*model, few, {sets[0]}, spans[2], fo);
    if (r.methods[0].comp != 0.0 || r.methods[0].suff != 1.0 || r.random_comp != 0.0 ||
        r.random_suff != 1.0) {
      return failed("Comp " + g6(r.methods[0].comp) + ", Suff " + g6(r.methods[0].suff));
    }
    return std::string("Comp 0, Suff 1");
  });

  c.run("simulatability-identity", [&] {
    const ModelPtr model = make_linear_bow_model(synth.linear);
    SimulatabilityOptions so;
    so.seed = seed;
    const auto sim = build_simulation_splits(*model, data, so.ratios, seed);
    ExplanationLists empty;
    for (const auto& x : data) empty[x.id] = {};
    const auto r = simulate_with_lists(sim, {"empty"}, {ExplanationKind::kToken}, {empty}, so);
    if (r.methods[0].rsf != 0.0) return failed("RSF " + g6(r.methods[0].rsf));
    return std::string("empty explanations give RSF 0");
  });

  c.run("adapter-loopback", [&] {
    const ModelPtr linear = make_linear_bow_model(synth.linear);
    const ModelPtr attention = make_toy_attention_model(vocab, "[MASK]", seed);
    std::vector<Instance> probes(data.begin(), data.begin() + 4);
    std::vector<Instance> vprobes;
    Rng rng = make_rng(seed, 9);
    for (int i = 0; i < 3; ++i) vprobes.push_back(random_instance(rng, 3, 3));
    for (auto [model, p] : {std::pair{linear, &probes}, std::pair{attention, &vprobes}}) {
      AdapterClient client(make_loopback_transport(model, true));
      const auto report = check_conformance(client, *p, seed);
      if (!report.passed()) return failed(model->id() + ": " + report.to_json().dump());
    }
    // Same predictions bit for bit through the protocol, replies reversed.
    auto remote = std::make_shared<AdapterModel>(
        std::make_shared<AdapterClient>(make_loopback_transport(linear, true)), "loopback");
    std::vector<TokenSeq> batch;
    for (const auto& x : data) batch.push_back(x.tokens());
    const auto a = linear->predict_batch(batch);
    const auto b = remote->predict_batch(batch);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].probs != b[i].probs) return failed("loopback prediction differs on " + data[i].id);
    }
    return std::string("conformance passes, predictions bit-identical");
  });

  c.run("hello-validation", [&] {
    const json bad{{"type", "hello"}, {"version", 1}, {"classes", 2}, {"capabilities", {"predict"}}};
    try {
      parse_hello(bad);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kProtocol && std::string(e.what()).find("mask_token") != std::string::npos) {
        return std::string("malformed hello names the field");
      }
      return failed(std::string("wrong error: ") + e.what());
    }
    return failed("malformed hello accepted");
  });

  c.run("explain-determinism", [&] {
    const ModelPtr model = make_linear_bow_model(synth.linear);
    MethodOptions mo;
    mo.seed = seed;
    std::vector<Instance> few(data.begin(), data.begin() + 8);
    const auto a = explain_dataset("shapley", model, few, mo);
    const auto b = explain_dataset("shapley", model, few, mo);
    for (std::size_t k = 0; k < a.size(); ++k) {
      for (const auto& x : few) {
        const auto& sa = a[k].at(x.id).entries;
        const auto& sb = b[k].at(x.id).entries;
        if (sa.size() != sb.size()) return failed("entry counts differ");
        for (std::size_t e = 0; e < sa.size(); ++e) {
          if (!(sa[e].unit == sb[e].unit) || sa[e].score != sb[e].score) {
            return failed(a[k].label() + " differs on " + x.id);
          }
        }
      }
    }
    return std::string("repeat run identical");
  });

  return c.result;
}

}  // namespace unieval
