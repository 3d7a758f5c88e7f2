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

#ifndef PREFINFER_USER_SIM_HPP_
#define PREFINFER_USER_SIM_HPP_

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "prefinfer/belief.hpp"
#include "prefinfer/error.hpp"
#include "prefinfer/llm.hpp"
#include "prefinfer/oracle.hpp"
#include "prefinfer/prompts.hpp"

namespace prefinfer {

enum class UserKind { kAttribute, kLlm };

// Simulated customer p_human(a|q) who wants `target`.
//
// The attribute kind resolves questions against the whole task's attribute
// vocabulary, exactly as AttributeOracle does, so its answers always agree
// with the oracle's consistency scores for the same target.
class SimulatedUser {
 public:
  static SimulatedUser attribute(std::span<const Product> products, std::size_t target_index) {
    if (target_index >= products.size()) throw Error(ErrorCode::kInvalidTask, "target index out of range");
    SimulatedUser u(UserKind::kAttribute, products[target_index]);
    u.vocabulary_ = attribute_vocabulary(products);
    return u;
  }

  static SimulatedUser llm(Product target, std::shared_ptr<LlmClient> client, PromptCatalog catalog = {}) {
    if (!client) throw Error(ErrorCode::kConfig, "llm user needs a client");
    SimulatedUser u(UserKind::kLlm, std::move(target));
    u.client_ = std::move(client);
    u.catalog_ = std::move(catalog);
    return u;
  }

  UserKind kind() const { return kind_; }
  const Product& target() const { return target_; }

  Answer simulate_answer(const Question& question) const {
    if (kind_ == UserKind::kAttribute) {
      return target_.has_attribute(resolve_attribute(question.text, vocabulary_)) ? Answer::kYes : Answer::kNo;
    }
    try {
      return ask_simulated_human(*client_, catalog_, target_, question.text);
    } catch (const Error& e) {
      throw Error(ErrorCode::kUserUnavailable, std::string("simulated user gave no yes/no answer: ") + e.what());
    }
  }

 private:
  SimulatedUser(UserKind kind, Product target) : kind_(kind), target_(std::move(target)) {}

  UserKind kind_;
  Product target_;
  std::vector<std::string> vocabulary_;
  std::shared_ptr<LlmClient> client_;
  PromptCatalog catalog_;
};

}  // namespace prefinfer

#endif  // PREFINFER_USER_SIM_HPP_
