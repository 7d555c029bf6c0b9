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

#ifndef UNIEVAL_CORE_HPP_
#define UNIEVAL_CORE_HPP_

#include <array>
#include <compare>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace unieval {

using TokenSeq = std::vector<std::string>;

// Sorted, duplicate-free list of global token indices.
using TokenSet = std::vector<int>;

// A two-part input. Global index i addresses part1 for i < m and part2 for
// m <= i < m + n.
struct Instance {
  std::string id;
  TokenSeq part1;
  TokenSeq part2;
  int label = 0;

  int m() const { return static_cast<int>(part1.size()); }
  int n() const { return static_cast<int>(part2.size()); }
  int size() const { return m() + n(); }
  const std::string& token(int i) const;
  TokenSeq tokens() const;

  // Throws ValidationError naming the id when an invariant is broken.
  // num_classes <= 0 skips the label range check.
  void validate(int num_classes = 0) const;
};

enum class ExplanationKind { kToken, kTokenPair, kSpanPair };

// "TokenEx", "TokenIntEx", "SpanIntEx".
std::string_view kind_name(ExplanationKind kind);
ExplanationKind parse_kind(std::string_view name);

// A token, a cross-part token pair, or a cross-part span pair. Span endpoints
// are inclusive. indices() matches the JSON unit encoding: [i], [p, q] or
// [s, s+l1, t, t+l2].
class ExplanationUnit {
 public:
  static ExplanationUnit token(int i);
  static ExplanationUnit pair(int p, int q);
  static ExplanationUnit span_pair(int s, int s_end, int t, int t_end);
  // Builds from an encoded index list; the kind follows from its length.
  static ExplanationUnit from_indices(std::span<const int> idx);

  ExplanationKind kind() const { return kind_; }
  std::span<const int> indices() const {
    return {idx_.data(), static_cast<std::size_t>(arity())};
  }
  int arity() const;
  int operator[](int k) const { return idx_[static_cast<std::size_t>(k)]; }

  // Appends every covered token index (spans expanded).
  void append_tokens(std::vector<int>& out) const;

  // Throws ValidationError if the unit does not fit an m/n instance.
  void validate(int m, int n) const;
  bool valid_for(int m, int n) const;

  friend auto operator<=>(const ExplanationUnit&,
                          const ExplanationUnit&) = default;
  friend bool operator==(const ExplanationUnit&,
                         const ExplanationUnit&) = default;

 private:
  ExplanationUnit(ExplanationKind kind, std::array<int, 4> idx)
      : kind_(kind), idx_(idx) {}
  ExplanationKind kind_;
  std::array<int, 4> idx_;
};

struct ScoredUnit {
  ExplanationUnit unit;
  double score = 0.0;
};

enum class RankingRule {
  kSigned,     // signed score, descending
  kMagnitude,  // |score|, descending
};

struct AttributionSet {
  std::string instance_id;
  ExplanationKind kind = ExplanationKind::kToken;
  std::string method;
  std::vector<ScoredUnit> entries;  // ranked
  // Non-fatal notes from the producer (e.g. ridge fallback in kernel SHAP).
  std::vector<std::string> warnings;

  int upper_limit() const { return static_cast<int>(entries.size()); }
  std::vector<ExplanationUnit> units() const;
  std::vector<ExplanationUnit> top(int k) const;
};

// Every attribution set of one (method, kind), keyed by instance id.
struct MethodSets {
  std::string method;
  ExplanationKind kind = ExplanationKind::kToken;
  std::map<std::string, AttributionSet> sets;

  bool has(const std::string& id) const { return sets.count(id) != 0; }
  // Throws ValidationError when the instance has no set.
  const AttributionSet& at(const std::string& id) const;
  // "method/Kind"
  std::string label() const;
};

struct GoldAnnotation {
  std::string instance_id;
  std::optional<TokenSet> token_gold;
  std::optional<std::vector<ExplanationUnit>> pair_gold;
  std::optional<std::vector<ExplanationUnit>> span_gold;

  bool empty() const { return !token_gold && !pair_gold && !span_gold; }
  void validate(const Instance& x) const;
};

// Union of token indices covered by the units.
TokenSet tokens_of(std::span<const ExplanationUnit> units);

// Same, but every unit is checked against the instance first (ContractError
// on a unit that cannot belong to it).
TokenSet tokens_of(const Instance& x, std::span<const ExplanationUnit> units);

// Sorts entries by the ranking rule; ties go to the lexicographically smaller
// index tuple. Throws NumericError on a non-finite score.
std::vector<ScoredUnit> rank_entries(std::vector<ScoredUnit> entries,
                                     RankingRule rule = RankingRule::kSigned);

// Builds a ranked AttributionSet from one score per unit.
AttributionSet make_attribution(std::string instance_id, ExplanationKind kind,
                                std::string method,
                                std::vector<ScoredUnit> entries,
                                RankingRule rule = RankingRule::kSigned);

// Ranked TokenEx set from per-token scores.
AttributionSet token_attribution(const Instance& x, std::string method,
                                 std::span<const double> scores,
                                 RankingRule rule = RankingRule::kSigned);

}  // namespace unieval

#endif  // UNIEVAL_CORE_HPP_
