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

// Acceptance run: one PASS/FAIL line per primary criterion, exit 1 if any
// fails. Expected values come from oracles written here, not from the engine.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <algorithm>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "unieval/agreement.hpp"
#include "unieval/attribution.hpp"
#include "unieval/complexity.hpp"
#include "unieval/error.hpp"
#include "unieval/faithfulness.hpp"
#include "unieval/io.hpp"
#include "unieval/louvain.hpp"
#include "unieval/pipeline.hpp"
#include "unieval/rng.hpp"
#include "unieval/selfcheck.hpp"
#include "unieval/shapley.hpp"
#include "unieval/simulatability.hpp"
#include "unieval/synth.hpp"

namespace fs = std::filesystem;
using namespace unieval;

namespace {

// Seed of the planted task used by every full-pipeline criterion.
constexpr std::uint64_t kRepoSeed = 20240611;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

struct Outcome {
  bool ok = true;
  std::string detail;
  void need(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

int failures = 0;

void criterion(const std::string& name, double budget_s, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.ok = false;
    o.note(std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0) o.need(secs < budget_s, "runtime " + num(secs) + " s over " + num(budget_s) + " s");
  std::cout << (o.ok ? "PASS " : "FAIL ") << name << ": " << o.detail << " (" << num(secs) << " s)\n";
  std::cout.flush();
  failures += o.ok ? 0 : 1;
}

TableGame random_game(int n, Rng& rng) {
  std::vector<double> t(std::size_t{1} << n);
  for (double& v : t) v = uniform01(rng);
  return TableGame(n, std::move(t));
}

// Shap(i | j) by enumerating the coalitions S with j in S and i not in S;
// each is reached by |S|! (n-|S|-1)! of the n!/2 orders with j before i.
double restricted_subsets(const TableGame& g, int i, int j) {
  const int n = g.num_players();
  auto fact = [](int k) {
    double f = 1.0;
    for (int t = 2; t <= k; ++t) f *= t;
    return f;
  };
  double s = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    if (!((mask >> j) & 1) || ((mask >> i) & 1)) continue;
    const int size = __builtin_popcountll(mask);
    s += fact(size) * fact(n - size - 1) / (fact(n) / 2.0) *
         (g.table()[mask | (std::uint64_t{1} << i)] - g.table()[mask]);
  }
  return s;
}

std::vector<TableGame> hand_games(int n) {
  std::vector<TableGame> out;
  const std::size_t size = std::size_t{1} << n;
  auto make = [&](const std::function<double(std::uint64_t)>& f) {
    std::vector<double> t(size);
    for (std::uint64_t s = 0; s < size; ++s) t[s] = f(s);
    out.emplace_back(n, std::move(t));
  };
  make([](std::uint64_t s) { return (s & 3) == 3 ? 1.0 : 0.0; });                  // AND of 0, 1
  make([](std::uint64_t s) { return s != 0 ? 1.0 : 0.0; });                        // OR
  make([n](std::uint64_t s) { return 2 * __builtin_popcountll(s) > n ? 1.0 : 0.0; });  // majority
  make([](std::uint64_t s) { return static_cast<double>(__builtin_popcountll(s)); });  // additive
  make([](std::uint64_t s) { return (s & 1) ? ((s & 2) ? 3.0 : 1.0) : ((s & 4) ? 2.0 : 0.0); });
  make([](std::uint64_t s) { return static_cast<double>(s % 5); });
  return out;
}

// Modularity from the weight matrix, pair by pair.
double modularity_oracle(const std::vector<std::vector<double>>& w, const std::vector<int>& c) {
  const std::size_t n = w.size();
  std::vector<double> k(n, 0.0);
  double two_m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) k[i] += w[i][j];
    two_m += k[i];
  }
  double q = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (c[i] == c[j]) q += w[i][j] - k[i] * k[j] / two_m;
    }
  }
  return q / two_m;
}

struct Planted {
  SynthOutput out;
  std::vector<Instance> data;
  std::map<std::string, GoldAnnotation> golds;
  ModelPtr model;
  std::vector<MethodSets> shapley;  // TokenEx, TokenIntEx, SpanIntEx
};

Planted& planted() {
  static Planted p = [] {
    Planted q;
    SynthSpec spec;
    spec.instances = 500;
    spec.noise = 0.05;
    spec.seed = kRepoSeed;
    q.out = generate(spec);
    for (const auto& r : q.out.records) {
      q.data.push_back(r.instance);
      if (r.gold) q.golds[r.instance.id] = *r.gold;
    }
    q.model = make_linear_bow_model(q.out.linear);
    MethodOptions mo;
    mo.seed = split_seed(kRepoSeed, seed_stream::kExplain);
    q.shapley = explain_dataset("shapley", q.model, q.data, mo);
    return q;
  }();
  return p;
}

std::vector<ComplexityResult> complexity_runs;

void check_complexity_range(const ComplexityResult& r, Outcome& o, const std::string& run) {
  for (const auto& m : r.methods) {
    for (std::size_t i = 0; i < m.per_instance.size(); ++i) {
      const double upper = std::log(static_cast<double>(r.k_x[i]));
      if (!(m.per_instance[i] >= 0.0 && m.per_instance[i] <= upper + 1e-12)) {
        o.need(false, run + " " + m.method + "/" + std::string(kind_name(m.kind)) + " CL " +
                          num(m.per_instance[i]) + " on " + r.ids[i] + " outside [0, " + num(upper) + "]");
        return;
      }
    }
  }
}

std::string read_tree(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) {
    all += fs::relative(f, root).string() + "\n" + read_file(f) + "\n";
  }
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "unieval-acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  criterion("shapley-efficiency", 30.0, [](Outcome& o) {
    Rng rng(make_rng(kRepoSeed, 1));
    double worst = 0.0;
    for (int g = 0; g < 200; ++g) {
      const int n = 1 + static_cast<int>(uniform_index(rng, 10));
      const auto game = random_game(n, rng);
      const auto phi = exact_shapley(game);
      const double sum = std::accumulate(phi.begin(), phi.end(), 0.0);
      worst = std::max(worst, std::fabs(sum - (game.full_value() - game.empty_value())));
    }
    o.need(worst <= 1e-9, "efficiency gap " + num(worst));
    o.note("200 games, max |sum phi - (v(F) - v(0))| = " + num(worst));
  });

  criterion("kernel-vs-exact", 120.0, [](Outcome& o) {
    Rng rng(make_rng(kRepoSeed, 2));
    double worst = 0.0;
    for (int g = 0; g < 20; ++g) {
      const auto game = random_game(10, rng);
      const auto exact = exact_shapley(game);
      const auto k = kernel_shap(game, 4096, split_seed(kRepoSeed, 1000 + g));
      for (std::size_t i = 0; i < exact.size(); ++i) worst = std::max(worst, std::fabs(k.phi[i] - exact[i]));
    }
    o.need(worst <= 0.05, "max error " + num(worst));
    double add_worst = 0.0;
    for (int g = 0; g < 5; ++g) {
      std::vector<double> w(10);
      for (double& x : w) x = 2.0 * uniform01(rng) - 1.0;
      const double base = uniform01(rng);
      FunctionGame game(10, [&](const Coalition& s) {
        double v = base;
        for (std::size_t i = 0; i < w.size(); ++i) v += s[i] ? w[i] : 0.0;
        return v;
      });
      const auto k = kernel_shap(game, 4096, split_seed(kRepoSeed, 2000 + g));
      for (std::size_t i = 0; i < w.size(); ++i) add_worst = std::max(add_worst, std::fabs(k.phi[i] - w[i]));
    }
    o.need(add_worst <= 1e-6, "additive error " + num(add_worst));
    o.note("20 games max error " + num(worst) + ", additive max error " + num(add_worst));
  });

  criterion("bivariate-brute-force", 0.0, [](Outcome& o) {
    double worst = 0.0;
    int compared = 0;
    for (int n : {3, 4}) {
      for (const auto& g : hand_games(n)) {
        const auto table = directed_bivariate_from_table(g.table(), n);
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double engine = table[static_cast<std::size_t>(i * n + j)];
            const double single = bivariate_shapley_directed(g, i, j);
            const double oracle = restricted_subsets(g, i, j);
            worst = std::max({worst, std::fabs(engine - oracle), std::fabs(single - oracle)});
            ++compared;
          }
        }
      }
    }
    // Both sides sum the same rationals in different orders, so equality is
    // to the last bits of a double.
    o.need(worst <= 1e-12, "max difference " + num(worst));
    o.note(std::to_string(compared) + " ordered pairs over 12 hand games, max difference " + num(worst));
  });

  criterion("integrated-gradients", 0.0, [](Outcome& o) {
    const std::vector<std::string> vocab{"a", "b", "c", "d", "e", "f"};
    Rng rng(make_rng(kRepoSeed, 4));
    LinearBowParams lp;
    lp.vocab = vocab;
    for (std::size_t v = 0; v < vocab.size(); ++v) lp.weights.push_back({2.0 * uniform01(rng) - 1.0, 2.0 * uniform01(rng) - 1.0});
    lp.bias = {0.3, -0.2};
    const auto linear = make_linear_bow_model(lp);
    auto instance = [&](int m, int n) {
      Instance x;
      x.id = "ig";
      for (int i = 0; i < m; ++i) x.part1.push_back(vocab[uniform_index(rng, vocab.size())]);
      for (int i = 0; i < n; ++i) x.part2.push_back(vocab[uniform_index(rng, vocab.size())]);
      return x;
    };
    double closed = 0.0;
    for (int t = 0; t < 20; ++t) {
      const auto x = instance(3, 4);
      for (int steps : {1, 3, 50, 200}) {
        const auto ig = integrated_gradients(*linear, x, steps, 1);
        for (int i = 0; i < x.size(); ++i) {
          // Centered logit of class 1 over two classes is (l1 - l0) / 2.
          const auto& w = lp.weights[static_cast<std::size_t>(
              std::find(vocab.begin(), vocab.end(), x.token(i)) - vocab.begin())];
          closed = std::max(closed, std::fabs(ig.scores[static_cast<std::size_t>(i)] - (w[1] - w[0]) / 2.0));
        }
      }
    }
    o.need(closed <= 1e-12, "linear closed form off by " + num(closed));
    const auto toy = make_toy_attention_model(vocab, "[MASK]", kRepoSeed);
    double gap = 0.0;
    for (int t = 0; t < 50; ++t) {
      const auto x = instance(2 + static_cast<int>(uniform_index(rng, 3)), 2 + static_cast<int>(uniform_index(rng, 3)));
      const auto px = toy->predict(x.tokens());
      const int target = px.label;
      const double diff =
          centered_logit(px, target) - centered_logit(toy->predict(all_mask(x, "[MASK]")), target);
      const auto ig = integrated_gradients(*toy, x, 200, target);
      gap = std::max(gap, std::fabs(std::accumulate(ig.scores.begin(), ig.scores.end(), 0.0) - diff));
    }
    o.need(gap <= 1e-2, "completeness gap " + num(gap));
    o.note("linear max error " + num(closed) + ", toy attention max gap " + num(gap) + " over 50 instances");
  });

  criterion("louvain-spans", 0.0, [](Outcome& o) {
    // Part1 tokens 0..3, part2 tokens 4..7; blocks {0,1}x{4,5} and {2,3}x{6,7}.
    std::vector<std::vector<double>> w(8, std::vector<double>(8, 0.0));
    InteractionGraph ig(4, 4);
    std::vector<ScoredUnit> pairs;
    for (int p = 0; p < 4; ++p) {
      for (int q = 4; q < 8; ++q) {
        double s = 0.0;
        if (p < 2 && q < 6) s = 0.8;
        if (p >= 2 && q >= 6) s = 0.4;
        w[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] = w[static_cast<std::size_t>(q)][static_cast<std::size_t>(p)] = s;
        ig.set(p, q, s);
        ig.set(q, p, s);
        pairs.push_back({ExplanationUnit::pair(p, q), s});
      }
    }
    // Brute force over all 4140 partitions.
    std::vector<int> a(8, 0), best;
    double best_q = -1e300;
    std::function<void(int, int)> rec = [&](int pos, int top) {
      if (pos == 8) {
        const double q = modularity_oracle(w, a);
        if (q > best_q + 1e-12) {
          best_q = q;
          best = a;
        }
        return;
      }
      for (int c = 0; c <= top + 1; ++c) {
        a[static_cast<std::size_t>(pos)] = c;
        rec(pos + 1, std::max(top, c));
      }
    };
    rec(1, 0);
    WeightedGraph g(8);
    for (int i = 0; i < 8; ++i) {
      for (int j = i + 1; j < 8; ++j) {
        if (w[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] > 0) g.set(i, j, w[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
      }
    }
    const auto found = louvain(g);
    o.need(found == best, "partition differs from the brute-force optimum");
    Instance x;
    x.id = "blocks";
    x.part1 = {"a", "b", "c", "d"};
    x.part2 = {"e", "f", "g", "h"};
    const auto ps = make_attribution("blocks", ExplanationKind::kTokenPair, "hand", pairs);
    const auto spans = louvain_spans(x, ps, ig, "hand");
    // ((0,1),(4,5)): 4 x 0.8 over 4 tokens = 0.8; ((2,3),(6,7)): 4 x 0.4 / 4 = 0.4.
    const bool shape = spans.entries.size() == 2 &&
                       spans.entries[0].unit == ExplanationUnit::span_pair(0, 1, 4, 5) &&
                       spans.entries[1].unit == ExplanationUnit::span_pair(2, 3, 6, 7);
    o.need(shape, "span pairs differ from ((0,1),(4,5)) and ((2,3),(6,7))");
    if (shape) {
      o.need(std::fabs(spans.entries[0].score - 0.8) <= 1e-12 && std::fabs(spans.entries[1].score - 0.4) <= 1e-12,
             "span scores " + num(spans.entries[0].score) + ", " + num(spans.entries[1].score));
    }
    o.note("Q* = " + num(best_q) + ", spans ((0,1),(4,5)) 0.8 and ((2,3),(6,7)) 0.4");
  });

  criterion("faithfulness-separation", 300.0, [](Outcome& o) {
    auto& p = planted();
    FaithfulnessOptions fo;
    fo.k_max = 3;
    fo.seed = split_seed(kRepoSeed, seed_stream::kFaithfulness);
    const auto r = unified_faithfulness(*p.model, p.data, {p.shapley[0]}, p.shapley[2], fo);
    const double gain = r.methods[0].comp - r.random_comp;
    o.need(gain >= 0.15, "Comp(Shapley) - Comp(random) = " + num(gain));
    o.note("Comp(Shapley TokenEx) " + num(r.methods[0].comp) + " vs random " + num(r.random_comp) + " over " +
           std::to_string(r.n_instances) + " instances");

    const ModelPtr constant = make_constant_model({0.7, 0.3});
    MethodOptions mo;
    mo.seed = 1;
    const auto csets = explain_dataset("shapley", constant, p.data, mo);
    const auto c = unified_faithfulness(*constant, p.data, {csets[0], p.shapley[0]}, p.shapley[2], fo);
    bool exact = c.random_comp == 0.0 && c.random_suff == 1.0;
    for (const auto& m : c.methods) exact = exact && m.comp == 0.0 && m.suff == 1.0;
    o.need(exact, "constant model gave non-trivial Comp/Suff");
    o.note("constant model Comp 0, Suff 1");
  });

  criterion("agreement", 0.0, [](Outcome& o) {
    const auto a = ExplanationUnit::token(0), b = ExplanationUnit::token(1), x = ExplanationUnit::token(5);
    const std::vector<ExplanationUnit> gold{a, b};
    const double perfect = average_precision({{a}, {a, b}}, gold, Matcher::kExact);
    // Thresholds [a], [a, x], [a, x, b]: (R, P) = (1/2, 1), (1/2, 1/2), (1, 2/3).
    const double hand = average_precision({{a}, {a, x}, {a, x, b}}, gold, Matcher::kExact);
    o.need(std::fabs(perfect - 1.0) <= 1e-12, "perfect prefix AP " + num(perfect));
    o.need(std::fabs(hand - (0.5 * 1.0 + 0.0 * 0.5 + 0.5 * (2.0 / 3.0))) <= 1e-12, "[a, x, b] AP " + num(hand));
    auto& p = planted();
    AgreementOptions ao;
    ao.k_max = 3;
    ao.seed = split_seed(kRepoSeed, seed_stream::kAgreement);
    const auto r = map_token_level(p.data, p.golds, {p.shapley[0]}, p.shapley[2], ao);
    o.need(r.methods[0].map > r.random_map, "token MAP " + num(r.methods[0].map) + " <= random " + num(r.random_map));
    o.note("AP 1 and 5/6 exact; token MAP(Shapley) " + num(r.methods[0].map) + " vs random " +
           num(r.random_map) + " on " + std::to_string(r.n_instances) + " gold instances");
  });

  criterion("simulatability", 180.0, [](Outcome& o) {
    auto& p = planted();
    SimulatabilityOptions so;
    so.k = 1;
    so.insertion = Insertion::kSymbol;
    so.seed = split_seed(kRepoSeed, seed_stream::kSimulatability);
    const auto sim = build_simulation_splits(*p.model, p.data, so.ratios, so.seed);
    ExplanationLists empty, gold;
    for (const auto& x : p.data) {
      empty[x.id] = {};
      auto it = p.golds.find(x.id);
      if (it != p.golds.end()) gold[x.id] = token_units(token_gold_of(it->second));
    }
    const auto r = simulate_with_lists(sim, {"empty", "gold"}, {ExplanationKind::kToken, ExplanationKind::kToken},
                                       {empty, gold}, so);
    o.need(r.methods[0].rsf == 0.0, "empty explanations RSF " + num(r.methods[0].rsf));
    o.need(r.methods[0].sf == r.sf_o, "empty-explanation agent differs from the none-agent");
    o.need(r.methods[1].rsf > 0.0, "gold-token RSF " + num(r.methods[1].rsf));
    o.note("SF_O " + num(r.sf_o) + ", empty RSF 0 bit-for-bit, gold-token RSF " + num(r.methods[1].rsf));
  });

  criterion("determinism", 0.0, [&](Outcome& o) {
    const auto s1 = run_selfcheck().summary();
    const auto s2 = run_selfcheck().summary();
    o.need(s1 == s2, "selfcheck output differs between runs");

    std::ostringstream log;
    SynthSpec spec;
    spec.seed = kRepoSeed;
    run_synth(spec, work / "synth", log);
    std::vector<std::string> trees, hashes;
    for (const std::string run : {"run-a", "run-b"}) {
      RunConfig c;
      c.model = "builtin:linear";
      c.models_file = (work / "synth" / "models.json").string();
      c.dataset = (work / "synth" / "data.jsonl").string();
      c.output = (work / run).string();
      c.methods = {"shapley", "kernel-shapley", "ig"};
      c.seed = kRepoSeed;
      c.jobs = run == "run-a" ? 1 : 0;
      run_explain(c, log);
      const auto report = run_eval(c, log);
      if (report.complexity) complexity_runs.push_back(*report.complexity);
      trees.push_back(read_tree(work / run));
      hashes.push_back(config_hash(c));
    }
    o.need(hashes[0] == hashes[1], "config hashes differ");
    o.need(trees[0] == trees[1], "pipeline outputs differ between runs");
    o.note("selfcheck identical; two pipeline runs (config " + hashes[0] + ") byte-identical over " +
           std::to_string(std::count(trees[0].begin(), trees[0].end(), '\n')) + " lines");
  });

  criterion("complexity", 0.0, [](Outcome& o) {
    auto& p = planted();
    ComplexityOptions co;
    co.seed = split_seed(kRepoSeed, seed_stream::kComplexity);
    const auto r = dataset_complexity(p.data, p.shapley, p.shapley[2], co);
    check_complexity_range(r, o, "planted");
    for (const auto& run : complexity_runs) check_complexity_range(run, o, "pipeline");
    std::vector<ScoredUnit> uniform, point;
    for (int i = 0; i < 6; ++i) {
      uniform.push_back({ExplanationUnit::token(i), 0.3});
      point.push_back({ExplanationUnit::token(i), i == 2 ? 1.0 : 0.0});
    }
    const auto cu = entropy_complexity(make_attribution("u", ExplanationKind::kToken, "f", uniform), 6);
    const auto cp = entropy_complexity(make_attribution("p", ExplanationKind::kToken, "f", point), 6);
    const auto ch = entropy_complexity(
        make_attribution("h", ExplanationKind::kToken, "f",
                         {{ExplanationUnit::token(0), 0.75}, {ExplanationUnit::token(1), 0.25}}),
        2);
    const double hand = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
    o.need(std::fabs(cu.cl - std::log(6.0)) <= 1e-12, "uniform CL " + num(cu.cl));
    o.need(cp.cl == 0.0, "point-mass CL " + num(cp.cl));
    o.need(std::fabs(ch.cl - 0.5623) <= 1e-4 && std::fabs(ch.cl - hand) <= 1e-12, "(0.75, 0.25) CL " + num(ch.cl));
    o.note("range holds on " + std::to_string(r.n_instances) + " planted instances x " +
           std::to_string(r.methods.size()) + " kinds and " + std::to_string(complexity_runs.size()) +
           " pipeline runs; fixtures ln 6, 0, " + num(ch.cl));
  });

  std::cout << (failures == 0 ? "all criteria passed\n" : std::to_string(failures) + " criteria failed\n");
  return failures == 0 ? 0 : 1;
}
