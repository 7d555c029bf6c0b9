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

#include "unieval/toy_models.hpp"

#include <cmath>
#include <numbers>

#include "unieval/error.hpp"
#include "unieval/rng.hpp"

namespace unieval {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Linear bag-of-words
// ---------------------------------------------------------------------------

LinearBowModel::LinearBowModel(LinearBowParams params)
    : Model(ModelInfo{params.id, params.num_classes(), params.mask_token,
                      Capabilities{true, false}, true, 0}),
      params_(std::move(params)) {
  const auto classes = static_cast<std::size_t>(params_.num_classes());
  require(params_.weights.size() == params_.vocab.size(), ErrorKind::kValidation,
          "linear model: one weight row per vocabulary entry required");
  for (std::size_t v = 0; v < params_.vocab.size(); ++v) {
    require(params_.weights[v].size() == classes, ErrorKind::kValidation,
            "linear model: weight row for '" + params_.vocab[v] + "' has wrong width");
    require(index_.emplace(params_.vocab[v], v).second, ErrorKind::kValidation,
            "linear model: duplicate vocabulary entry '" + params_.vocab[v] + "'");
  }
  zero_.assign(classes, 0.0);
  oov_ = params_.oov.empty() ? zero_ : params_.oov;
  require(oov_.size() == classes, ErrorKind::kValidation, "linear model: oov row width");
}

std::span<const double> LinearBowModel::row(const std::string& token) const {
  if (token == params_.mask_token) return zero_;
  auto it = index_.find(token);
  if (it == index_.end()) return oov_;
  return params_.weights[it->second];
}

std::vector<double> LinearBowModel::logits(const TokenSeq& tokens) const {
  std::vector<double> out = params_.bias;
  for (const auto& t : tokens) {
    auto r = row(t);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += r[c];
  }
  return out;
}

Prediction LinearBowModel::do_predict(const TokenSeq& tokens) const {
  return make_prediction(softmax(logits(tokens)));
}

std::vector<double> LinearBowModel::do_grad_dot(const TokenSeq& tokens,
                                                const TokenSeq& baseline, double,
                                                int target) const {
  const auto classes = static_cast<double>(num_classes());
  auto centered = [&](std::span<const double> r) {
    double mean = 0.0;
    for (double w : r) mean += w;
    return r[static_cast<std::size_t>(target)] - mean / classes;
  };
  std::vector<double> out(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out[i] = centered(row(tokens[i])) - centered(row(baseline[i]));
  }
  return out;
}

std::shared_ptr<const LinearBowModel> make_linear_bow_model(LinearBowParams params) {
  return std::make_shared<LinearBowModel>(std::move(params));
}

// ---------------------------------------------------------------------------
// Toy attention model
// ---------------------------------------------------------------------------

void ToyAttentionParams::validate() const {
  auto check = [](bool ok, const std::string& what) {
    require(ok, ErrorKind::kValidation, "attention model: " + what);
  };
  check(classes >= 2 && dim >= 1 && heads >= 1 && head_dim >= 1 && hidden >= 1,
        "dimensions must be positive");
  const auto d = static_cast<std::size_t>(dim);
  const auto hd = static_cast<std::size_t>(head_dim);
  check(embedding.size() == vocab.size(), "one embedding row per vocabulary entry");
  for (const auto& e : embedding) check(e.size() == d, "embedding width");
  check(start_embedding.size() == d, "start embedding width");
  check(oov_embedding.empty() || oov_embedding.size() == d, "oov embedding width");
  for (const auto* w : {&wq, &wk, &wv}) {
    check(w->size() == static_cast<std::size_t>(heads), "one projection per head");
    for (const auto& m : *w) check(m.size() == d * hd, "projection shape");
  }
  const auto hdim = static_cast<std::size_t>(heads) * hd;
  check(w1.size() == static_cast<std::size_t>(hidden) * hdim, "w1 shape");
  check(b1.size() == static_cast<std::size_t>(hidden), "b1 shape");
  check(w2.size() == static_cast<std::size_t>(classes * hidden), "w2 shape");
  check(b2.size() == static_cast<std::size_t>(classes), "b2 shape");
}

namespace {

double gaussian(Rng& rng) {
  // Box-Muller on the portable uniform generator.
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<double> gaussian_vec(Rng& rng, std::size_t n, double scale) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * gaussian(rng);
  return v;
}

}  // namespace

ToyAttentionParams random_attention_params(std::vector<std::string> vocab, int classes,
                                           int dim, int heads, int head_dim, int hidden,
                                           std::uint64_t seed, double scale) {
  Rng rng(split_seed(seed, 0xa77e));
  ToyAttentionParams p;
  p.vocab = std::move(vocab);
  p.classes = classes;
  p.dim = dim;
  p.heads = heads;
  p.head_dim = head_dim;
  p.hidden = hidden;
  p.activation = Activation::kTanh;
  const auto d = static_cast<std::size_t>(dim);
  for (std::size_t v = 0; v < p.vocab.size(); ++v) p.embedding.push_back(gaussian_vec(rng, d, scale));
  p.start_embedding = gaussian_vec(rng, d, scale);
  p.oov_embedding = gaussian_vec(rng, d, scale);
  const double proj = scale / std::sqrt(static_cast<double>(dim));
  for (int h = 0; h < heads; ++h) {
    p.wq.push_back(gaussian_vec(rng, d * static_cast<std::size_t>(head_dim), proj));
    p.wk.push_back(gaussian_vec(rng, d * static_cast<std::size_t>(head_dim), proj));
    p.wv.push_back(gaussian_vec(rng, d * static_cast<std::size_t>(head_dim), proj));
  }
  const auto hdim = static_cast<std::size_t>(heads * head_dim);
  p.w1 = gaussian_vec(rng, static_cast<std::size_t>(hidden) * hdim,
                      scale / std::sqrt(static_cast<double>(hdim)));
  p.b1 = gaussian_vec(rng, static_cast<std::size_t>(hidden), 0.1 * scale);
  p.w2 = gaussian_vec(rng, static_cast<std::size_t>(classes * hidden),
                      scale / std::sqrt(static_cast<double>(hidden)));
  p.b2 = gaussian_vec(rng, static_cast<std::size_t>(classes), 0.1 * scale);
  return p;
}

struct ToyAttentionModel::Forward {
  // Per head: q, k, v per position (head_dim each), attention row 0.
  std::vector<std::vector<std::vector<double>>> q, k, v;
  std::vector<std::vector<double>> row0;
  std::vector<double> o, pre, z, logits;
};

ToyAttentionModel::ToyAttentionModel(ToyAttentionParams params)
    : Model(ModelInfo{params.id, params.classes, params.mask_token,
                      Capabilities{true, true}, true, 0}),
      params_(std::move(params)) {
  params_.validate();
  for (std::size_t v = 0; v < params_.vocab.size(); ++v) {
    require(index_.emplace(params_.vocab[v], v).second, ErrorKind::kValidation,
            "attention model: duplicate vocabulary entry '" + params_.vocab[v] + "'");
  }
  zero_.assign(static_cast<std::size_t>(params_.dim), 0.0);
  if (params_.oov_embedding.empty()) params_.oov_embedding = zero_;
}

std::span<const double> ToyAttentionModel::embed(const std::string& token) const {
  if (token == params_.mask_token) return zero_;
  auto it = index_.find(token);
  if (it == index_.end()) return params_.oov_embedding;
  return params_.embedding[it->second];
}

namespace {

// out[j] = sum_k u[k] * w[k * cols + j]
std::vector<double> project(std::span<const double> u, const std::vector<double>& w,
                            std::size_t cols) {
  std::vector<double> out(cols, 0.0);
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double uk = u[k];
    if (uk == 0.0) continue;
    for (std::size_t j = 0; j < cols; ++j) out[j] += uk * w[k * cols + j];
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> softmax_row(const std::vector<double>& s) { return softmax(s); }

}  // namespace

void ToyAttentionModel::run(const std::vector<std::vector<double>>& u, Forward& f) const {
  const auto& p = params_;
  const auto hd = static_cast<std::size_t>(p.head_dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(p.head_dim));
  const std::size_t positions = u.size();
  const auto heads = static_cast<std::size_t>(p.heads);
  f.q.assign(heads, {});
  f.k.assign(heads, {});
  f.v.assign(heads, {});
  f.row0.assign(heads, {});
  f.o.assign(heads * hd, 0.0);
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t b = 0; b < positions; ++b) {
      f.q[h].push_back(project(u[b], p.wq[h], hd));
      f.k[h].push_back(project(u[b], p.wk[h], hd));
      f.v[h].push_back(project(u[b], p.wv[h], hd));
    }
    std::vector<double> s(positions);
    for (std::size_t b = 0; b < positions; ++b) s[b] = dot(f.q[h][0], f.k[h][b]) * scale;
    f.row0[h] = softmax_row(s);
    for (std::size_t b = 0; b < positions; ++b) {
      for (std::size_t j = 0; j < hd; ++j) f.o[h * hd + j] += f.row0[h][b] * f.v[h][b][j];
    }
  }
  const auto hidden = static_cast<std::size_t>(p.hidden);
  const std::size_t width = heads * hd;
  f.pre.assign(hidden, 0.0);
  f.z.assign(hidden, 0.0);
  for (std::size_t r = 0; r < hidden; ++r) {
    double acc = p.b1[r];
    for (std::size_t c = 0; c < width; ++c) acc += p.w1[r * width + c] * f.o[c];
    f.pre[r] = acc;
    f.z[r] = p.activation == Activation::kRelu ? std::max(0.0, acc) : std::tanh(acc);
  }
  const auto classes = static_cast<std::size_t>(p.classes);
  f.logits.assign(classes, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    double acc = p.b2[c];
    for (std::size_t r = 0; r < hidden; ++r) acc += p.w2[c * hidden + r] * f.z[r];
    f.logits[c] = acc;
  }
}

std::vector<double> ToyAttentionModel::path_logits(const TokenSeq& tokens,
                                                   const TokenSeq& baseline,
                                                   std::span<const double> alphas) const {
  require(tokens.size() == baseline.size() && tokens.size() == alphas.size(),
          ErrorKind::kContract, "path_logits: length mismatch");
  std::vector<std::vector<double>> u;
  u.reserve(tokens.size() + 1);
  u.push_back(params_.start_embedding);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto ex = embed(tokens[i]);
    auto eb = embed(baseline[i]);
    std::vector<double> e(ex.size());
    for (std::size_t k = 0; k < e.size(); ++k) e[k] = eb[k] + alphas[i] * (ex[k] - eb[k]);
    u.push_back(std::move(e));
  }
  Forward f;
  run(u, f);
  return f.logits;
}

std::vector<double> ToyAttentionModel::logits(const TokenSeq& tokens) const {
  std::vector<double> ones(tokens.size(), 1.0);
  return path_logits(tokens, tokens, ones);
}

Prediction ToyAttentionModel::do_predict(const TokenSeq& tokens) const {
  return make_prediction(softmax(logits(tokens)));
}

std::vector<double> ToyAttentionModel::do_grad_dot(const TokenSeq& tokens,
                                                   const TokenSeq& baseline, double alpha,
                                                   int target) const {
  const auto& p = params_;
  const std::size_t len = tokens.size();
  const auto d = static_cast<std::size_t>(p.dim);
  const auto hd = static_cast<std::size_t>(p.head_dim);
  const auto heads = static_cast<std::size_t>(p.heads);
  const auto hidden = static_cast<std::size_t>(p.hidden);
  const auto classes = static_cast<std::size_t>(p.classes);
  const double scale = 1.0 / std::sqrt(static_cast<double>(p.head_dim));

  std::vector<std::vector<double>> u, dir;
  u.push_back(p.start_embedding);
  dir.emplace_back(d, 0.0);
  for (std::size_t i = 0; i < len; ++i) {
    auto ex = embed(tokens[i]);
    auto eb = embed(baseline[i]);
    std::vector<double> e(d), delta(d);
    for (std::size_t k = 0; k < d; ++k) {
      delta[k] = ex[k] - eb[k];
      e[k] = eb[k] + alpha * delta[k];
    }
    u.push_back(std::move(e));
    dir.push_back(std::move(delta));
  }
  Forward f;
  run(u, f);

  // d(centered logit)/d logits
  std::vector<double> g(classes, -1.0 / static_cast<double>(classes));
  g[static_cast<std::size_t>(target)] += 1.0;
  std::vector<double> dpre(hidden, 0.0);
  for (std::size_t r = 0; r < hidden; ++r) {
    double dz = 0.0;
    for (std::size_t c = 0; c < classes; ++c) dz += p.w2[c * hidden + r] * g[c];
    const double deriv = p.activation == Activation::kRelu
                             ? (f.pre[r] > 0.0 ? 1.0 : 0.0)
                             : 1.0 - f.z[r] * f.z[r];
    dpre[r] = dz * deriv;
  }
  const std::size_t width = heads * hd;
  std::vector<double> d_o(width, 0.0);
  for (std::size_t r = 0; r < hidden; ++r) {
    for (std::size_t c = 0; c < width; ++c) d_o[c] += p.w1[r * width + c] * dpre[r];
  }

  const std::size_t positions = len + 1;
  std::vector<std::vector<double>> du(positions, std::vector<double>(d, 0.0));
  for (std::size_t h = 0; h < heads; ++h) {
    std::span<const double> go(d_o.data() + h * hd, hd);
    const auto& a = f.row0[h];
    std::vector<double> cb(positions);
    double mean = 0.0;
    for (std::size_t b = 0; b < positions; ++b) {
      cb[b] = dot(go, f.v[h][b]);
      mean += a[b] * cb[b];
    }
    for (std::size_t b = 1; b < positions; ++b) {
      const double ds = a[b] * (cb[b] - mean);
      for (std::size_t k = 0; k < d; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < hd; ++j) {
          acc += p.wv[h][k * hd + j] * a[b] * go[j];
          acc += p.wk[h][k * hd + j] * ds * f.q[h][0][j] * scale;
        }
        du[b][k] += acc;
      }
    }
  }
  std::vector<double> out(len);
  for (std::size_t i = 0; i < len; ++i) out[i] = dot(du[i + 1], dir[i + 1]);
  return out;
}

AttentionMap ToyAttentionModel::do_attention(const TokenSeq& tokens) const {
  const auto& p = params_;
  const auto hd = static_cast<std::size_t>(p.head_dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(p.head_dim));
  std::vector<std::vector<double>> u;
  u.push_back(p.start_embedding);
  for (const auto& t : tokens) {
    auto e = embed(t);
    u.emplace_back(e.begin(), e.end());
  }
  const int positions = static_cast<int>(u.size());
  AttentionMap map;
  map.alignment.push_back(-1);
  for (int i = 0; i < static_cast<int>(tokens.size()); ++i) map.alignment.push_back(i);
  for (std::size_t h = 0; h < static_cast<std::size_t>(p.heads); ++h) {
    std::vector<std::vector<double>> q, k;
    for (const auto& ub : u) {
      q.push_back(project(ub, p.wq[h], hd));
      k.push_back(project(ub, p.wk[h], hd));
    }
    SquareMatrix a(positions);
    for (int r = 0; r < positions; ++r) {
      std::vector<double> s(static_cast<std::size_t>(positions));
      for (int c = 0; c < positions; ++c) {
        s[static_cast<std::size_t>(c)] =
            dot(q[static_cast<std::size_t>(r)], k[static_cast<std::size_t>(c)]) * scale;
      }
      auto row = softmax_row(s);
      for (int c = 0; c < positions; ++c) a.at(r, c) = row[static_cast<std::size_t>(c)];
    }
    map.heads.push_back(std::move(a));
  }
  return map;
}

std::shared_ptr<const ToyAttentionModel> make_toy_attention_model(ToyAttentionParams params) {
  return std::make_shared<ToyAttentionModel>(std::move(params));
}

std::shared_ptr<const ToyAttentionModel> make_toy_attention_model(
    std::vector<std::string> vocab, std::string mask_token, std::uint64_t seed, int heads,
    int classes) {
  auto p = random_attention_params(std::move(vocab), classes, 6, heads, 3, 6, seed);
  p.mask_token = std::move(mask_token);
  return make_toy_attention_model(std::move(p));
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

json to_json(const LinearBowParams& p) {
  json j;
  j["type"] = "linear_bow";
  j["id"] = p.id;
  j["vocab"] = p.vocab;
  j["weights"] = p.weights;
  j["bias"] = p.bias;
  j["oov"] = p.oov;
  j["mask_token"] = p.mask_token;
  return j;
}

json to_json(const ToyAttentionParams& p) {
  json j;
  j["type"] = "toy_attention";
  j["id"] = p.id;
  j["vocab"] = p.vocab;
  j["classes"] = p.classes;
  j["dim"] = p.dim;
  j["heads"] = p.heads;
  j["head_dim"] = p.head_dim;
  j["hidden"] = p.hidden;
  j["activation"] = p.activation == Activation::kRelu ? "relu" : "tanh";
  j["start_token"] = p.start_token;
  j["mask_token"] = p.mask_token;
  j["embedding"] = p.embedding;
  j["start_embedding"] = p.start_embedding;
  j["oov_embedding"] = p.oov_embedding;
  j["wq"] = p.wq;
  j["wk"] = p.wk;
  j["wv"] = p.wv;
  j["w1"] = p.w1;
  j["b1"] = p.b1;
  j["w2"] = p.w2;
  j["b2"] = p.b2;
  return j;
}

LinearBowParams linear_params_from_json(const json& j) {
  try {
    LinearBowParams p;
    p.id = j.value("id", std::string("linear-bow"));
    p.vocab = j.at("vocab").get<std::vector<std::string>>();
    p.weights = j.at("weights").get<std::vector<std::vector<double>>>();
    p.bias = j.at("bias").get<std::vector<double>>();
    p.oov = j.value("oov", std::vector<double>{});
    p.mask_token = j.value("mask_token", std::string("[MASK]"));
    return p;
  } catch (const json::exception& e) {
    fail(ErrorKind::kValidation, std::string("linear model json: ") + e.what());
  }
}

ToyAttentionParams attention_params_from_json(const json& j) {
  try {
    ToyAttentionParams p;
    p.id = j.value("id", std::string("toy-attention"));
    p.vocab = j.at("vocab").get<std::vector<std::string>>();
    p.classes = j.at("classes").get<int>();
    p.dim = j.at("dim").get<int>();
    p.heads = j.at("heads").get<int>();
    p.head_dim = j.at("head_dim").get<int>();
    p.hidden = j.at("hidden").get<int>();
    p.activation = j.value("activation", std::string("tanh")) == "relu" ? Activation::kRelu
                                                                        : Activation::kTanh;
    p.start_token = j.value("start_token", std::string("[CLS]"));
    p.mask_token = j.value("mask_token", std::string("[MASK]"));
    p.embedding = j.at("embedding").get<std::vector<std::vector<double>>>();
    p.start_embedding = j.at("start_embedding").get<std::vector<double>>();
    p.oov_embedding = j.value("oov_embedding", std::vector<double>{});
    p.wq = j.at("wq").get<std::vector<std::vector<double>>>();
    p.wk = j.at("wk").get<std::vector<std::vector<double>>>();
    p.wv = j.at("wv").get<std::vector<std::vector<double>>>();
    p.w1 = j.at("w1").get<std::vector<double>>();
    p.b1 = j.at("b1").get<std::vector<double>>();
    p.w2 = j.at("w2").get<std::vector<double>>();
    p.b2 = j.at("b2").get<std::vector<double>>();
    p.validate();
    return p;
  } catch (const json::exception& e) {
    fail(ErrorKind::kValidation, std::string("attention model json: ") + e.what());
  }
}

}  // namespace unieval
