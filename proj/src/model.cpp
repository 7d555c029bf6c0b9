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

#include "unieval/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "unieval/error.hpp"

namespace unieval {

Prediction make_prediction(std::vector<double> probs) {
  require(probs.size() >= 2, ErrorKind::kProtocol, "prediction needs >= 2 classes");
  double sum = 0.0;
  for (double p : probs) {
    require(std::isfinite(p) && p >= 0.0, ErrorKind::kNumeric,
            "probabilities must be finite and non-negative");
    sum += p;
  }
  require(std::fabs(sum - 1.0) <= 1e-6, ErrorKind::kNumeric,
          "probabilities sum to " + std::to_string(sum));
  Prediction out;
  out.label = static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
  out.probs = std::move(probs);
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double z = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    out[c] = std::exp(logits[c] - mx);
    z += out[c];
  }
  for (double& v : out) v /= z;
  return out;
}

double centered_logit(const Prediction& p, int target) {
  constexpr double kFloor = 1e-300;
  double mean = 0.0;
  for (double q : p.probs) mean += std::log(std::max(q, kFloor));
  mean /= static_cast<double>(p.probs.size());
  return std::log(std::max(p.probs[static_cast<std::size_t>(target)], kFloor)) - mean;
}

int AttentionMap::position_of(int token_index) const {
  auto it = std::find(alignment.begin(), alignment.end(), token_index);
  require(it != alignment.end(), ErrorKind::kValidation,
          "token " + std::to_string(token_index) + " not aligned to any attention position");
  return static_cast<int>(it - alignment.begin());
}

int AttentionMap::anchor_position() const {
  auto it = std::find(alignment.begin(), alignment.end(), -1);
  return it == alignment.end() ? 0 : static_cast<int>(it - alignment.begin());
}

void AttentionMap::validate(double tol) const {
  require(!heads.empty(), ErrorKind::kValidation, "attention map without heads");
  for (std::size_t h = 0; h < heads.size(); ++h) {
    const auto& a = heads[h];
    require(a.n == positions(), ErrorKind::kValidation,
            "attention head size does not match alignment");
    for (int r = 0; r < a.n; ++r) {
      double sum = 0.0;
      for (int c = 0; c < a.n; ++c) {
        require(a.at(r, c) >= 0.0 && std::isfinite(a.at(r, c)), ErrorKind::kValidation,
                "negative or non-finite attention weight");
        sum += a.at(r, c);
      }
      require(std::fabs(sum - 1.0) <= tol, ErrorKind::kValidation,
              "attention row " + std::to_string(r) + " of head " + std::to_string(h) +
                  " sums to " + std::to_string(sum));
    }
  }
}

Model::Model(ModelInfo info) : info_(std::move(info)) {
  require(info_.num_classes >= 2, ErrorKind::kValidation, "model needs >= 2 classes");
  require(!info_.mask_token.empty(), ErrorKind::kValidation, "mask token must be non-empty");
}

void Model::check_input(const TokenSeq& tokens) const {
  require(!tokens.empty(), ErrorKind::kContract, "empty token sequence");
  if (info_.max_length > 0) {
    require(static_cast<int>(tokens.size()) <= info_.max_length, ErrorKind::kCapacity,
            "input of " + std::to_string(tokens.size()) + " tokens exceeds model limit " +
                std::to_string(info_.max_length));
  }
}

Prediction Model::predict(const TokenSeq& tokens) const {
  check_input(tokens);
  predictions_.fetch_add(1);
  return do_predict(tokens);
}

std::vector<Prediction> Model::predict_batch(std::span<const TokenSeq> batch) const {
  for (const auto& t : batch) check_input(t);
  if (batch.empty()) return {};
  predictions_.fetch_add(batch.size());
  auto out = do_predict_batch(batch);
  require(out.size() == batch.size(), ErrorKind::kProtocol,
          "batch reply has " + std::to_string(out.size()) + " predictions for " +
              std::to_string(batch.size()) + " inputs");
  return out;
}

std::vector<double> Model::grad_dot(const TokenSeq& tokens, const TokenSeq& baseline,
                                    double alpha, int target) const {
  require(info_.capabilities.grad_dot, ErrorKind::kCapability,
          "model '" + info_.id + "' does not support grad_dot");
  check_input(tokens);
  require(tokens.size() == baseline.size(), ErrorKind::kContract,
          "grad_dot: tokens and baseline differ in length");
  require(alpha >= 0.0 && alpha <= 1.0, ErrorKind::kContract, "grad_dot: alpha outside [0,1]");
  require(target >= 0 && target < info_.num_classes, ErrorKind::kContract,
          "grad_dot: target class out of range");
  return do_grad_dot(tokens, baseline, alpha, target);
}

AttentionMap Model::attention(const TokenSeq& tokens) const {
  require(info_.capabilities.attention, ErrorKind::kCapability,
          "model '" + info_.id + "' does not support attention");
  check_input(tokens);
  return do_attention(tokens);
}

std::vector<Prediction> Model::do_predict_batch(std::span<const TokenSeq> batch) const {
  std::vector<Prediction> out;
  out.reserve(batch.size());
  for (const auto& t : batch) out.push_back(do_predict(t));
  return out;
}

std::vector<double> Model::do_grad_dot(const TokenSeq&, const TokenSeq&, double, int) const {
  fail(ErrorKind::kCapability, "grad_dot not implemented by " + info_.id);
}

AttentionMap Model::do_attention(const TokenSeq&) const {
  fail(ErrorKind::kCapability, "attention not implemented by " + info_.id);
}

ConstantModel::ConstantModel(std::vector<double> probs, std::string mask_token)
    : Model(ModelInfo{"constant", static_cast<int>(probs.size()), std::move(mask_token),
                      {}, true, 0}),
      prediction_(make_prediction(std::move(probs))) {}

Prediction ConstantModel::do_predict(const TokenSeq&) const { return prediction_; }

ModelPtr make_constant_model(std::vector<double> probs, std::string mask_token) {
  return std::make_shared<ConstantModel>(std::move(probs), std::move(mask_token));
}

namespace {

void check_indices(const Instance& x, const TokenSet& set) {
  for (int i : set) {
    require(i >= 0 && i < x.size(), ErrorKind::kValidation,
            "instance " + x.id + ": mask index " + std::to_string(i) + " out of range");
  }
}

}  // namespace

TokenSeq mask_omit(const Instance& x, const TokenSet& omit, const std::string& mask) {
  check_indices(x, omit);
  TokenSeq out = x.tokens();
  for (int i : omit) out[static_cast<std::size_t>(i)] = mask;
  return out;
}

TokenSeq mask_keep(const Instance& x, const TokenSet& keep, const std::string& mask) {
  check_indices(x, keep);
  TokenSeq out(static_cast<std::size_t>(x.size()), mask);
  for (int i : keep) out[static_cast<std::size_t>(i)] = x.token(i);
  return out;
}

TokenSeq all_mask(const Instance& x, const std::string& mask) {
  return TokenSeq(static_cast<std::size_t>(x.size()), mask);
}

}  // namespace unieval
