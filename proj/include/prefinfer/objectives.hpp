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

#ifndef PREFINFER_OBJECTIVES_HPP_
#define PREFINFER_OBJECTIVES_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "prefinfer/belief.hpp"
#include "prefinfer/error.hpp"

namespace prefinfer {

enum class Objective { kEntropy, kKl };

struct QuestionScore {
  std::size_t question_index = 0;
  double expected_entropy = 0.0;  // nats
  double expected_kl = 0.0;       // nats
  double p_yes = 0.0;
};

// Scores closer than this are treated as tied, so that the two objectives
// resolve ties identically even when their last bits disagree.
inline constexpr double kTieTolerance = 1e-12;

namespace detail {

// Unnormalized branch mass for one answer, plus its total.
struct Branch {
  std::vector<double> weights;
  double mass = 0.0;
};

inline Branch branch(const BeliefState& belief, const ConsistencyVector& cv, Answer a) {
  Branch b;
  b.weights.resize(belief.size());
  for (std::size_t x = 0; x < belief.size(); ++x) {
    b.weights[x] = belief[x] * cv.likelihood(x, a);
    b.mass += b.weights[x];
  }
  return b;
}

inline double branch_entropy(const Branch& b) {
  double h = 0.0;
  for (double w : b.weights) {
    if (w > 0.0) {
      const double p = w / b.mass;
      h -= p * std::log(p);
    }
  }
  return h;
}

inline double branch_kl(const Branch& b, const BeliefState& prior) {
  double kl = 0.0;
  for (std::size_t x = 0; x < b.weights.size(); ++x) {
    const double w = b.weights[x];
    if (w <= 0.0) continue;
    if (prior[x] <= 0.0) {
      throw Error(ErrorCode::kInternal, "posterior mass outside prior support");
    }
    const double p = w / b.mass;
    kl += p * std::log(p / prior[x]);
  }
  return kl;
}

}  // namespace detail

// E_{p(a|c,q)} H(p(x|c,q,a)); branches of zero probability contribute 0.
inline double expected_entropy(const BeliefState& belief, const ConsistencyVector& cv) {
  detail::check_lengths(belief, cv);
  double total = 0.0;
  for (Answer a : {Answer::kYes, Answer::kNo}) {
    const auto b = detail::branch(belief, cv, a);
    if (b.mass > 0.0) total += b.mass * detail::branch_entropy(b);
  }
  return total;
}

// E_{p(a|c,q)} KL(p(x|c,q,a) || p(x|c)).
inline double expected_kl(const BeliefState& belief, const ConsistencyVector& cv) {
  detail::check_lengths(belief, cv);
  double total = 0.0;
  for (Answer a : {Answer::kYes, Answer::kNo}) {
    const auto b = detail::branch(belief, cv, a);
    if (b.mass > 0.0) total += b.mass * detail::branch_kl(b, belief);
  }
  // KL is nonnegative; clamp rounding residue from log(p/prior) ~ 0 terms.
  return total < 0.0 ? 0.0 : total;
}

inline std::vector<QuestionScore> score_questions(const BeliefState& belief,
                                                  std::span<const ConsistencyVector> cvs) {
  if (cvs.empty()) throw Error(ErrorCode::kNoCandidates, "no candidate questions to score");
  std::vector<QuestionScore> scores;
  scores.reserve(cvs.size());
  for (std::size_t i = 0; i < cvs.size(); ++i) {
    scores.push_back({i, expected_entropy(belief, cvs[i]), expected_kl(belief, cvs[i]),
                      answer_predictive(belief, cvs[i]).p_yes});
  }
  return scores;
}

// All indices attaining the optimum of the objective (within kTieTolerance),
// ascending.
inline std::vector<std::size_t> optimal_indices(std::span<const QuestionScore> scores,
                                                Objective objective) {
  if (scores.empty()) throw Error(ErrorCode::kNoCandidates, "no scores to select from");
  auto value = [objective](const QuestionScore& s) {
    return objective == Objective::kEntropy ? s.expected_entropy : -s.expected_kl;
  };
  double best = value(scores.front());
  for (const auto& s : scores) best = std::min(best, value(s));
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (value(scores[i]) <= best + kTieTolerance) out.push_back(scores[i].question_index);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// argmin expected entropy or argmax expected KL; ties go to the lowest
// proposal index.
inline std::size_t select_question(std::span<const QuestionScore> scores, Objective objective) {
  return optimal_indices(scores, objective).front();
}

inline double realized_info_gain(const BeliefState& before, const BeliefState& after) {
  return entropy(before) - entropy(after);
}

inline std::string_view to_string(Objective o) { return o == Objective::kEntropy ? "entropy" : "kl"; }

}  // namespace prefinfer

#endif  // PREFINFER_OBJECTIVES_HPP_
