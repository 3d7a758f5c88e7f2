// Copyright 2026 The prefinfer Authors.
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

#ifndef PREFINFER_BELIEF_HPP_
#define PREFINFER_BELIEF_HPP_

#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prefinfer/error.hpp"

namespace prefinfer {

// One candidate decision. Attribute tokens are lowercase; order is kept as
// listed in the product record since the attribute proposer walks it.
struct Product {
  std::string id;
  std::string title;
  std::string description;
  std::vector<std::string> attributes;
  std::string product_type;

  bool has_attribute(std::string_view token) const {
    for (const auto& a : attributes) {
      if (a == token) return true;
    }
    return false;
  }
};

struct Question {
  std::string text;
  std::size_t id = 0;  // index within its proposal batch
};

enum class Answer { kYes, kNo };

inline std::string_view to_string(Answer a) { return a == Answer::kYes ? "yes" : "no"; }

inline Answer opposite(Answer a) { return a == Answer::kYes ? Answer::kNo : Answer::kYes; }

struct Turn {
  Question question;
  Answer answer = Answer::kNo;
};

struct Conversation {
  std::vector<Turn> turns;

  bool empty() const { return turns.empty(); }
  std::size_t size() const { return turns.size(); }
};

// p(Yes | x, q) for every product x of a task, in task order.
struct ConsistencyVector {
  Question question;
  std::vector<double> yes_prob;

  std::size_t size() const { return yes_prob.size(); }

  double likelihood(std::size_t x, Answer a) const {
    return a == Answer::kYes ? yes_prob[x] : 1.0 - yes_prob[x];
  }
};

// Maps binary scores {0,1} onto {eps, 1-eps}. Intermediate values are mixed
// the same way, so eps = 0 is the identity.
inline ConsistencyVector smooth(ConsistencyVector cv, double eps) {
  if (eps < 0.0 || eps >= 0.5) {
    throw Error(ErrorCode::kConfig, "smoothing epsilon must lie in [0, 0.5)");
  }
  if (eps == 0.0) return cv;
  for (double& p : cv.yes_prob) p = eps + (1.0 - 2.0 * eps) * p;
  return cv;
}

// Normalized posterior over a task's products. Construction validates the
// invariants, so a BeliefState in hand is always a proper distribution.
class BeliefState {
 public:
  static constexpr double kSumTolerance = 1e-9;

  explicit BeliefState(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw Error(ErrorCode::kInvalidTask, "belief over zero products");
    double total = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0)) throw Error(ErrorCode::kValidation, "negative or NaN probability");
      total += p;
    }
    if (std::abs(total - 1.0) > kSumTolerance) {
      throw Error(ErrorCode::kValidation, "belief does not sum to one");
    }
  }

  std::span<const double> probs() const { return probs_; }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::size_t size() const { return probs_.size(); }

  friend bool operator==(const BeliefState&, const BeliefState&) = default;

 private:
  std::vector<double> probs_;
};

inline BeliefState uniform_prior(std::size_t n_products) {
  if (n_products == 0) throw Error(ErrorCode::kInvalidTask, "uniform prior over zero products");
  return BeliefState(std::vector<double>(n_products, 1.0 / static_cast<double>(n_products)));
}

namespace detail {
inline void check_lengths(const BeliefState& belief, const ConsistencyVector& cv) {
  if (belief.size() != cv.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "consistency vector has " + std::to_string(cv.size()) + " entries, belief has " +
                    std::to_string(belief.size()));
  }
}
}  // namespace detail

// Bayes update p(x | c, q, a) ∝ p(x | c) p(a | x, q). Returns nullopt when
// the answer is inconsistent with every product still carrying mass; the
// caller decides how to recover.
inline std::optional<BeliefState> posterior_update(const BeliefState& belief,
                                                   const ConsistencyVector& cv, Answer answer) {
  detail::check_lengths(belief, cv);
  std::vector<double> next(belief.size());
  double total = 0.0;
  for (std::size_t x = 0; x < belief.size(); ++x) {
    next[x] = belief[x] * cv.likelihood(x, answer);
    total += next[x];
  }
  if (total <= 0.0) return std::nullopt;
  for (double& p : next) p /= total;
  return BeliefState(std::move(next));
}

struct AnswerPredictive {
  double p_yes = 0.0;
  double p_no = 0.0;
};

inline AnswerPredictive answer_predictive(const BeliefState& belief, const ConsistencyVector& cv) {
  detail::check_lengths(belief, cv);
  double p_yes = 0.0;
  for (std::size_t x = 0; x < belief.size(); ++x) p_yes += belief[x] * cv.yes_prob[x];
  // Summation error can push a pure-yes question a hair above 1.
  if (p_yes > 1.0) p_yes = 1.0;
  if (p_yes < 0.0) p_yes = 0.0;
  return {p_yes, 1.0 - p_yes};
}

// Shannon entropy in nats.
inline double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

inline double entropy(const BeliefState& belief) { return entropy(belief.probs()); }

inline std::vector<std::size_t> support(const BeliefState& belief) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < belief.size(); ++i) {
    if (belief[i] > 0.0) out.push_back(i);
  }
  return out;
}

}  // namespace prefinfer

#endif  // PREFINFER_BELIEF_HPP_
