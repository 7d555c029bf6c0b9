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

#include "unieval/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include "unieval/error.hpp"
#include "unieval/rng.hpp"

namespace unieval {

void SynthSpec::validate() const {
  auto check = [](bool ok, const std::string& what) {
    require(ok, ErrorKind::kValidation, "synth spec: " + what);
  };
  check(instances >= 1, "instances must be positive");
  check(vocab_size >= 1, "vocab_size must be positive");
  check(pairs >= 1, "need at least one planted pair");
  check(m_min >= 2 && n_min >= 2, "planted runs need parts of at least 2 tokens");
  check(m_min <= m_max && n_min <= n_max, "length ranges are empty");
  check(noise >= 0.0 && noise < 0.5, "noise must lie in [0, 0.5)");
  check(positive_rate >= 0.0 && decoy_rate >= 0.0 && positive_rate + decoy_rate <= 1.0,
        "positive_rate + decoy_rate must lie in [0, 1]");
  check(extra_pair_rate >= 0.0 && extra_pair_rate <= 1.0, "extra_pair_rate must lie in [0, 1]");
  check(head_weight > 0.0, "head_weight must be positive");
}

namespace {

int draw_between(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

std::string filler(int i) { return "w" + std::to_string(i); }
std::string head_p(int h) { return "p" + std::to_string(h); }
std::string head_q(int h) { return "q" + std::to_string(h); }

// Places a run of length 2-3 holding `head` on free positions; returns
// {run start, run end, head position}, or nothing when no room is left.
std::optional<std::array<int, 3>> plant(TokenSeq& part, std::vector<char>& used,
                                        const std::string& head, Rng& rng) {
  const int size = static_cast<int>(part.size());
  const int len = std::min(size, draw_between(rng, 2, 3));
  std::vector<int> starts;
  for (int s = 0; s + len <= size; ++s) {
    bool free = true;
    for (int t = s; t < s + len; ++t) free = free && !used[static_cast<std::size_t>(t)];
    if (free) starts.push_back(s);
  }
  if (starts.empty()) return std::nullopt;
  const int start = starts[static_cast<std::size_t>(uniform_index(rng, starts.size()))];
  const int pos = start + draw_between(rng, 0, len - 1);
  for (int t = start; t < start + len; ++t) used[static_cast<std::size_t>(t)] = 1;
  part[static_cast<std::size_t>(pos)] = head;
  return std::array<int, 3>{start, start + len - 1, pos};
}

ToyAttentionParams planted_attention(const SynthSpec& spec, const std::vector<std::string>& vocab) {
  const int r = spec.pairs;
  ToyAttentionParams p;
  p.id = "synth-attention";
  p.vocab = vocab;
  p.classes = 2;
  p.dim = 2 * r + 1;
  p.heads = std::max(r, 2);
  p.head_dim = 2;
  p.hidden = p.heads;
  p.activation = Activation::kRelu;
  p.mask_token = spec.mask_token;
  const auto d = static_cast<std::size_t>(p.dim);
  const auto hd = static_cast<std::size_t>(p.head_dim);

  p.embedding.assign(vocab.size(), std::vector<double>(d, 0.0));
  for (std::size_t v = 0; v < vocab.size(); ++v) {
    for (int h = 0; h < r; ++h) {
      if (vocab[v] == head_p(h)) p.embedding[v][static_cast<std::size_t>(2 * h)] = 1.0;
      if (vocab[v] == head_q(h)) p.embedding[v][static_cast<std::size_t>(2 * h + 1)] = 1.0;
    }
  }
  p.start_embedding.assign(d, 0.0);
  p.start_embedding[static_cast<std::size_t>(2 * r)] = 1.0;
  p.oov_embedding.assign(d, 0.0);

  // Head h: the start position attends with logit ~10 to itself and to the
  // heads of pair h, so it splits its mass in thirds when both are present
  // and in halves when only one is.
  const double s = std::sqrt(10.0 * std::sqrt(static_cast<double>(p.head_dim)));
  for (int h = 0; h < p.heads; ++h) {
    std::vector<double> wq(d * hd, 0.0), wk(d * hd, 0.0), wv(d * hd, 0.0);
    if (h < r) {
      const auto start = static_cast<std::size_t>(2 * r);
      const auto ph = static_cast<std::size_t>(2 * h);
      const auto qh = static_cast<std::size_t>(2 * h + 1);
      wq[start * hd] = s;
      wk[start * hd] = s;
      wk[ph * hd] = s;
      wk[qh * hd] = s;
      wv[ph * hd] = 1.0;
      wv[qh * hd + 1] = 1.0;
    }
    p.wq.push_back(std::move(wq));
    p.wk.push_back(std::move(wk));
    p.wv.push_back(std::move(wv));
  }
  const auto width = static_cast<std::size_t>(p.heads) * hd;
  p.w1.assign(static_cast<std::size_t>(p.hidden) * width, 0.0);
  p.b1.assign(static_cast<std::size_t>(p.hidden), -1.0);
  for (int h = 0; h < r; ++h) {
    const auto row = static_cast<std::size_t>(h) * width;
    p.w1[row + static_cast<std::size_t>(h) * hd] = 1.0;
    p.w1[row + static_cast<std::size_t>(h) * hd + 1] = 1.0;
    p.b1[static_cast<std::size_t>(h)] = -0.6;
  }
  p.w2.assign(2 * static_cast<std::size_t>(p.hidden), 0.0);
  for (int h = 0; h < r; ++h) p.w2[static_cast<std::size_t>(p.hidden + h)] = 30.0;
  p.b2 = {0.0, -1.0};
  p.validate();
  return p;
}

}  // namespace

SynthOutput generate(const SynthSpec& spec) {
  spec.validate();
  SynthOutput out;
  std::vector<std::string> vocab;
  for (int i = 0; i < spec.vocab_size; ++i) vocab.push_back(filler(i));
  for (int h = 0; h < spec.pairs; ++h) {
    vocab.push_back(head_p(h));
    vocab.push_back(head_q(h));
  }

  const auto width = static_cast<std::size_t>(spec.instances);
  const int digits = static_cast<int>(std::to_string(spec.instances - 1).size());
  for (std::size_t i = 0; i < width; ++i) {
    Rng rng = make_rng(spec.seed, i);
    Record rec;
    auto& x = rec.instance;
    std::string num = std::to_string(i);
    x.id = "synth-" + std::string(static_cast<std::size_t>(digits) - num.size(), '0') + num;
    const int m = draw_between(rng, spec.m_min, spec.m_max);
    const int n = draw_between(rng, spec.n_min, spec.n_max);
    for (int t = 0; t < m; ++t) x.part1.push_back(filler(draw_between(rng, 0, spec.vocab_size - 1)));
    for (int t = 0; t < n; ++t) x.part2.push_back(filler(draw_between(rng, 0, spec.vocab_size - 1)));

    const double u = uniform01(rng);
    int clean = 0;
    if (u < spec.positive_rate) {
      std::vector<int> planted{draw_between(rng, 0, spec.pairs - 1)};
      if (spec.pairs >= 2 && uniform01(rng) < spec.extra_pair_rate) {
        const int other = draw_between(rng, 0, spec.pairs - 2);
        planted.push_back(other >= planted[0] ? other + 1 : other);
      }
      std::vector<char> used1(static_cast<std::size_t>(m), 0);
      std::vector<char> used2(static_cast<std::size_t>(n), 0);
      GoldAnnotation g;
      g.instance_id = x.id;
      TokenSet tokens;
      std::vector<ExplanationUnit> pair_gold;
      std::vector<ExplanationUnit> span_gold;
      for (int h : planted) {
        const auto a = plant(x.part1, used1, head_p(h), rng);
        if (!a) break;
        const auto b = plant(x.part2, used2, head_q(h), rng);
        if (!b) {
          // Undo the lone head so the instance stays consistent with its gold.
          x.part1[static_cast<std::size_t>((*a)[2])] = filler(draw_between(rng, 0, spec.vocab_size - 1));
          break;
        }
        tokens.push_back((*a)[2]);
        tokens.push_back(m + (*b)[2]);
        pair_gold.push_back(ExplanationUnit::pair((*a)[2], m + (*b)[2]));
        span_gold.push_back(ExplanationUnit::span_pair((*a)[0], (*a)[1], m + (*b)[0], m + (*b)[1]));
      }
      std::sort(tokens.begin(), tokens.end());
      g.token_gold = tokens;
      g.pair_gold = pair_gold;
      g.span_gold = span_gold;
      clean = 1;
      rec.gold = std::move(g);
    } else if (u < spec.positive_rate + spec.decoy_rate) {
      const int h = draw_between(rng, 0, spec.pairs - 1);
      if (uniform01(rng) < 0.5) {
        x.part1[static_cast<std::size_t>(draw_between(rng, 0, m - 1))] = head_p(h);
      } else {
        x.part2[static_cast<std::size_t>(draw_between(rng, 0, n - 1))] = head_q(h);
      }
    }
    x.label = uniform01(rng) < spec.noise ? 1 - clean : clean;
    x.validate(2);
    out.clean_labels.push_back(clean);
    out.records.push_back(std::move(rec));
  }

  auto& lin = out.linear;
  lin.id = "synth-linear";
  lin.vocab = vocab;
  lin.mask_token = spec.mask_token;
  for (const auto& v : vocab) {
    const bool head = v[0] == 'p' || v[0] == 'q';
    lin.weights.push_back({0.0, head ? spec.head_weight : 0.0});
  }
  lin.bias = {0.0, -1.5 * spec.head_weight};
  out.attention = planted_attention(spec, vocab);
  return out;
}

nlohmann::json SynthOutput::models_json() const {
  nlohmann::json j;
  j["linear"] = to_json(linear);
  j["attention"] = to_json(attention);
  return j;
}

}  // namespace unieval
