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

#ifndef UNIEVAL_MODEL_HPP_
#define UNIEVAL_MODEL_HPP_

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "unieval/core.hpp"

namespace unieval {

struct Capabilities {
  bool grad_dot = false;
  bool attention = false;
};

struct Prediction {
  std::vector<double> probs;
  int label = 0;
};

// Validates probs (non-negative, sum 1 within 1e-6) and sets label = argmax
// with lowest-index tie-break.
Prediction make_prediction(std::vector<double> probs);

// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

// log p_t - mean_c log p_c. Equals the softmax logit of class t minus the mean
// logit, so it is recoverable from probabilities alone.
double centered_logit(const Prediction& p, int target);

// Row-major square matrix.
struct SquareMatrix {
  int n = 0;
  std::vector<double> data;

  SquareMatrix() = default;
  explicit SquareMatrix(int size) : n(size), data(static_cast<std::size_t>(size) * size, 0.0) {}
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * n + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * n + c]; }
};

// Per-head attention over the model's internal positions. alignment[pos] is
// the global token index at that position, or -1 for model-internal positions
// (e.g. a start token).
struct AttentionMap {
  std::vector<SquareMatrix> heads;
  std::vector<int> alignment;

  int positions() const { return static_cast<int>(alignment.size()); }
  // Position holding global token i; throws if absent.
  int position_of(int token_index) const;
  // Position of the first model-internal position, falling back to 0.
  int anchor_position() const;
  // Throws ValidationError unless every row is non-negative and sums to 1
  // within tol.
  void validate(double tol = 1e-5) const;
};

struct ModelInfo {
  std::string id;
  int num_classes = 2;
  std::string mask_token = "[MASK]";
  Capabilities capabilities;
  bool thread_safe = true;
  int max_length = 0;  // 0 = unlimited
};

// The black-box classifier contract. predict is always available; grad_dot
// and attention throw a capability error unless declared.
class Model {
 public:
  explicit Model(ModelInfo info);
  virtual ~Model() = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelInfo& info() const { return info_; }
  const std::string& id() const { return info_.id; }
  int num_classes() const { return info_.num_classes; }
  const std::string& mask_token() const { return info_.mask_token; }
  Capabilities capabilities() const { return info_.capabilities; }
  bool thread_safe() const { return info_.thread_safe; }

  Prediction predict(const TokenSeq& tokens) const;
  std::vector<Prediction> predict_batch(std::span<const TokenSeq> batch) const;

  // Per-token gradient of the centered target logit at
  // baseline + alpha * (tokens - baseline), dotted with (tokens - baseline).
  std::vector<double> grad_dot(const TokenSeq& tokens, const TokenSeq& baseline,
                               double alpha, int target) const;

  AttentionMap attention(const TokenSeq& tokens) const;

  // Number of sequences scored through predict/predict_batch so far.
  std::uint64_t prediction_count() const { return predictions_.load(); }

 protected:
  virtual Prediction do_predict(const TokenSeq& tokens) const = 0;
  virtual std::vector<Prediction> do_predict_batch(std::span<const TokenSeq> batch) const;
  virtual std::vector<double> do_grad_dot(const TokenSeq& tokens, const TokenSeq& baseline,
                                          double alpha, int target) const;
  virtual AttentionMap do_attention(const TokenSeq& tokens) const;

 private:
  void check_input(const TokenSeq& tokens) const;
  ModelInfo info_;
  mutable std::atomic<std::uint64_t> predictions_{0};
};

using ModelPtr = std::shared_ptr<const Model>;

// Fixed output regardless of input.
class ConstantModel : public Model {
 public:
  ConstantModel(std::vector<double> probs, std::string mask_token = "[MASK]");

 protected:
  Prediction do_predict(const TokenSeq& tokens) const override;

 private:
  Prediction prediction_;
};

ModelPtr make_constant_model(std::vector<double> probs, std::string mask_token = "[MASK]");

// Instance with tokens outside `omit` unchanged and tokens in it replaced by
// the mask token. Length and part boundary are preserved.
TokenSeq mask_omit(const Instance& x, const TokenSet& omit, const std::string& mask);
// Complement of mask_omit: only `keep` survives.
TokenSeq mask_keep(const Instance& x, const TokenSet& keep, const std::string& mask);
// All positions masked.
TokenSeq all_mask(const Instance& x, const std::string& mask);

}  // namespace unieval

#endif  // UNIEVAL_MODEL_HPP_
