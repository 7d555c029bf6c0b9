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

#ifndef UNIEVAL_TOY_MODELS_HPP_
#define UNIEVAL_TOY_MODELS_HPP_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "unieval/model.hpp"

namespace unieval {

// logit(c) = bias[c] + sum_i weights[token_i][c]. The mask token always has a
// zero row; tokens outside the vocabulary use `oov` (zeros when empty).
struct LinearBowParams {
  std::string id = "linear-bow";
  std::vector<std::string> vocab;
  std::vector<std::vector<double>> weights;  // vocab.size() x classes
  std::vector<double> bias;                  // classes
  std::vector<double> oov;                   // classes, optional
  std::string mask_token = "[MASK]";

  int num_classes() const { return static_cast<int>(bias.size()); }
};

class LinearBowModel : public Model {
 public:
  explicit LinearBowModel(LinearBowParams params);

  const LinearBowParams& params() const { return params_; }
  // Weight row used for a token (mask -> zeros, unknown -> oov row).
  std::span<const double> row(const std::string& token) const;
  std::vector<double> logits(const TokenSeq& tokens) const;

 protected:
  Prediction do_predict(const TokenSeq& tokens) const override;
  std::vector<double> do_grad_dot(const TokenSeq& tokens, const TokenSeq& baseline,
                                  double alpha, int target) const override;

 private:
  LinearBowParams params_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> zero_;
  std::vector<double> oov_;
};

std::shared_ptr<const LinearBowModel> make_linear_bow_model(LinearBowParams params);

enum class Activation { kRelu, kTanh };

// A start token is prepended at position 0; it is never masked and never
// appears in explanation indices. One multi-head self-attention block, then
// a one-hidden-layer classifier reading the attention output at position 0.
// The mask token embeds to zeros.
struct ToyAttentionParams {
  std::string id = "toy-attention";
  std::vector<std::string> vocab;
  int classes = 2;
  int dim = 4;
  int heads = 2;
  int head_dim = 2;
  int hidden = 4;
  Activation activation = Activation::kTanh;
  std::string start_token = "[CLS]";
  std::string mask_token = "[MASK]";

  std::vector<std::vector<double>> embedding;  // vocab.size() x dim
  std::vector<double> start_embedding;         // dim
  std::vector<double> oov_embedding;           // dim
  // Per head, row-major dim x head_dim.
  std::vector<std::vector<double>> wq, wk, wv;
  std::vector<double> w1;  // hidden x (heads * head_dim), row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // classes x hidden, row-major
  std::vector<double> b2;  // classes

  // Throws ValidationError on inconsistent shapes.
  void validate() const;
};

// Small random parameters, deterministic in `seed`.
ToyAttentionParams random_attention_params(std::vector<std::string> vocab, int classes,
                                           int dim, int heads, int head_dim, int hidden,
                                           std::uint64_t seed, double scale = 1.0);

class ToyAttentionModel : public Model {
 public:
  explicit ToyAttentionModel(ToyAttentionParams params);

  const ToyAttentionParams& params() const { return params_; }

  // Raw logits with token i embedded at
  // baseline_i + alphas[i] * (tokens_i - baseline_i). Used as the continuous
  // path for IG and as a finite-difference oracle in tests.
  std::vector<double> path_logits(const TokenSeq& tokens, const TokenSeq& baseline,
                                  std::span<const double> alphas) const;
  std::vector<double> logits(const TokenSeq& tokens) const;

 protected:
  Prediction do_predict(const TokenSeq& tokens) const override;
  std::vector<double> do_grad_dot(const TokenSeq& tokens, const TokenSeq& baseline,
                                  double alpha, int target) const override;
  AttentionMap do_attention(const TokenSeq& tokens) const override;

 private:
  struct Forward;
  std::span<const double> embed(const std::string& token) const;
  void run(const std::vector<std::vector<double>>& u, Forward& f) const;

  ToyAttentionParams params_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> zero_;
};

std::shared_ptr<const ToyAttentionModel> make_toy_attention_model(ToyAttentionParams params);

// Convenience: random parameters over `vocab` plus model construction.
std::shared_ptr<const ToyAttentionModel> make_toy_attention_model(
    std::vector<std::string> vocab, std::string mask_token, std::uint64_t seed,
    int heads = 2, int classes = 2);

nlohmann::json to_json(const LinearBowParams& p);
nlohmann::json to_json(const ToyAttentionParams& p);
LinearBowParams linear_params_from_json(const nlohmann::json& j);
ToyAttentionParams attention_params_from_json(const nlohmann::json& j);

}  // namespace unieval

#endif  // UNIEVAL_TOY_MODELS_HPP_
