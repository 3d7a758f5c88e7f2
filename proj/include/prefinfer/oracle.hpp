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

#ifndef PREFINFER_ORACLE_HPP_
#define PREFINFER_ORACLE_HPP_

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prefinfer/belief.hpp"
#include "prefinfer/error.hpp"
#include "prefinfer/llm.hpp"
#include "prefinfer/prompts.hpp"
#include "prefinfer/text.hpp"

namespace prefinfer {

enum class OracleKind { kAttribute, kLlm };

struct OracleConfig {
  OracleKind kind = OracleKind::kAttribute;
  std::size_t proposal_count = 8;
  double smoothing_epsilon = 0.0;
  std::string llm_endpoint;
  std::string llm_model_name;
  double temperature = 0.0;
  int max_retries = 2;
  int max_in_flight = 4;
  std::string api_key_env = "OPENAI_API_KEY";
  std::string cache_path;

  void validate() const {
    if (proposal_count < 1) throw Error(ErrorCode::kConfig, "proposal_count must be at least 1");
    if (smoothing_epsilon < 0.0 || smoothing_epsilon >= 0.5) {
      throw Error(ErrorCode::kConfig, "smoothing_epsilon must lie in [0, 0.5)");
    }
    if (kind == OracleKind::kLlm && (llm_endpoint.empty() || llm_model_name.empty())) {
      throw Error(ErrorCode::kConfig, "llm oracle requires an endpoint and a model name");
    }
    if (max_retries < 0) throw Error(ErrorCode::kConfig, "max_retries must be nonnegative");
  }
};

// Builds the cached HTTP client an llm-kind config describes. The API key is
// read from the environment variable named by api_key_env.
inline std::shared_ptr<LlmClient> make_llm_client(const OracleConfig& config) {
  config.validate();
  const char* key = std::getenv(config.api_key_env.c_str());
  auto transport = std::make_shared<HttpChatTransport>(config.llm_endpoint, key ? key : "");
  auto cache = config.cache_path.empty() ? std::make_shared<ResponseCache>()
                                         : std::make_shared<ResponseCache>(config.cache_path);
  return std::make_shared<LlmClient>(
      transport, LlmClientOptions{config.llm_model_name, config.temperature, config.max_retries,
                                  config.max_in_flight},
      cache);
}

// ---- attribute questions ------------------------------------------------

inline constexpr std::string_view kAttributeQuestionPrefix = "Is the product you want ";

inline std::string attribute_question(std::string_view attribute) {
  return std::string(kAttributeQuestionPrefix) + std::string(attribute) + "?";
}

// Distinct attribute tokens of a product list, in first-appearance order.
inline std::vector<std::string> attribute_vocabulary(std::span<const Product> products) {
  std::vector<std::string> vocab;
  std::set<std::string> seen;
  for (const auto& p : products) {
    for (const auto& a : p.attributes) {
      if (seen.insert(a).second) vocab.push_back(a);
    }
  }
  return vocab;
}

namespace detail {
inline bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
}
}  // namespace detail

// The single attribute a question asks about: the longest vocabulary token
// occurring in the question as a whole word (earliest in vocabulary order on
// ties). Without a match, the phrase following the attribute-question prefix
// is returned; it names nothing any product has.
inline std::string resolve_attribute(std::string_view question, std::span<const std::string> vocabulary) {
  const auto text = to_lower(question);
  const std::string* best = nullptr;
  for (const auto& token : vocabulary) {
    if (token.empty() || (best && token.size() <= best->size())) continue;
    for (auto pos = text.find(token); pos != std::string::npos; pos = text.find(token, pos + 1)) {
      const bool left = pos == 0 || !detail::is_word_char(text[pos - 1]);
      const auto end = pos + token.size();
      const bool right = end == text.size() || !detail::is_word_char(text[end]);
      if (left && right) {
        best = &token;
        break;
      }
    }
  }
  if (best) return *best;
  auto phrase = normalize_question(text);
  const auto prefix = to_lower(kAttributeQuestionPrefix);
  if (phrase.starts_with(prefix)) phrase = phrase.substr(prefix.size());
  return phrase;
}

// ---- oracle interface ---------------------------------------------------

// Supplies the proposal batch r(q|c) and the consistency scores p(a|x,q).
class Oracle {
 public:
  explicit Oracle(OracleConfig config) : config_(std::move(config)) { config_.validate(); }
  virtual ~Oracle() = default;

  const OracleConfig& config() const { return config_; }

  // At most `max_count` distinct questions indexed 0..k-1. An empty batch
  // means nothing is left to ask.
  virtual std::vector<Question> propose_questions(std::span<const Product> products,
                                                  const Conversation& conversation,
                                                  const BeliefState& belief,
                                                  std::size_t max_count) = 0;

  std::vector<Question> propose_questions(std::span<const Product> products,
                                          const Conversation& conversation,
                                          const BeliefState& belief) {
    return propose_questions(products, conversation, belief, config_.proposal_count);
  }

  // Smoothing is applied last.
  ConsistencyVector consistency_vector(std::span<const Product> products, const Question& question) {
    return smooth(raw_consistency(products, question), config_.smoothing_epsilon);
  }

 protected:
  virtual ConsistencyVector raw_consistency(std::span<const Product> products, const Question& question) = 0;

  static std::vector<Question> index_unique(const std::vector<std::string>& texts, std::size_t max_count) {
    std::vector<Question> out;
    std::set<std::string> seen;
    for (const auto& t : texts) {
      if (out.size() >= max_count) break;
      const auto key = normalize_question(t);
      if (key.empty() || !seen.insert(key).second) continue;
      out.push_back({t, out.size()});
    }
    return out;
  }

  OracleConfig config_;
};

// Deterministic stand-in for the LLM: questions name one attribute token,
// and a product is consistent with "yes" iff it carries that token.
//
// The proposal batch mimics a finite sample from r(q|c): the first
// `max_count` attributes that still split the belief support, in the order
// they appear in the product descriptions, not yet asked about. The batch is
// then ordered most balanced split first.
class AttributeOracle : public Oracle {
 public:
  explicit AttributeOracle(OracleConfig config = {}) : Oracle(std::move(config)) {}

  using Oracle::propose_questions;

  std::vector<Question> propose_questions(std::span<const Product> products,
                                          const Conversation& conversation,
                                          const BeliefState& belief,
                                          std::size_t max_count) override {
    if (products.empty()) throw Error(ErrorCode::kInvalidTask, "no products to ask about");
    if (belief.size() != products.size()) {
      throw Error(ErrorCode::kLengthMismatch, "belief and product list differ in length");
    }
    const auto vocab = attribute_vocabulary(products);
    std::set<std::string> asked;
    for (const auto& t : conversation.turns) asked.insert(resolve_attribute(t.question.text, vocab));

    const auto live = support(belief);
    struct Candidate {
      std::string token;
      std::size_t count;
    };
    std::vector<Candidate> pool;
    for (const auto& token : vocab) {
      if (pool.size() >= max_count) break;
      if (asked.contains(token)) continue;
      std::size_t count = 0;
      for (auto i : live) count += products[i].has_attribute(token) ? 1 : 0;
      if (count == 0 || count == live.size()) continue;
      pool.push_back({token, count});
    }
    const auto n = live.size();
    auto imbalance = [n](const Candidate& c) { return c.count * 2 > n ? c.count * 2 - n : n - c.count * 2; };
    std::stable_sort(pool.begin(), pool.end(),
                     [&](const Candidate& a, const Candidate& b) { return imbalance(a) < imbalance(b); });

    std::vector<std::string> texts;
    for (const auto& c : pool) texts.push_back(attribute_question(c.token));
    return index_unique(texts, max_count);
  }

 protected:
  ConsistencyVector raw_consistency(std::span<const Product> products, const Question& question) override {
    const auto vocab = attribute_vocabulary(products);
    const auto token = resolve_attribute(question.text, vocab);
    ConsistencyVector cv{question, std::vector<double>(products.size(), 0.0)};
    for (std::size_t i = 0; i < products.size(); ++i) {
      if (products[i].has_attribute(token)) cv.yes_prob[i] = 1.0;
    }
    return cv;
  }
};

// The human-simulation prompt with `product` as the wanted item, asked
// `question`. Shared by the llm oracle and the llm simulated user so that
// both hit the same cache entries.
inline ChatRequest human_request(const LlmClient& client, const PromptCatalog& catalog,
                                 const Product& product, std::string_view question) {
  return client.make_request({{"system", catalog.human.render({{"product_txt", product_text(product)}})},
                              {"user", std::string(question)}});
}

inline Answer ask_simulated_human(LlmClient& client, const PromptCatalog& catalog, const Product& product,
                                  std::string_view question) {
  const auto reply = client.complete(catalog.human.name(), human_request(client, catalog, product, question),
                                     [](const std::string& r) { return parse_yes_no(r).has_value(); });
  return *parse_yes_no(reply);
}

class LlmOracle : public Oracle {
 public:
  LlmOracle(OracleConfig config, std::shared_ptr<LlmClient> client, PromptCatalog catalog = {})
      : Oracle(std::move(config)), client_(std::move(client)), catalog_(std::move(catalog)) {
    if (!client_) throw Error(ErrorCode::kConfig, "llm oracle needs a client");
  }

  using Oracle::propose_questions;

  // Requests max(10, max_count) questions and keeps the first max_count
  // distinct ones.
  std::vector<Question> propose_questions(std::span<const Product> products,
                                          const Conversation& conversation,
                                          const BeliefState& /*belief*/,
                                          std::size_t max_count) override {
    if (products.empty()) throw Error(ErrorCode::kInvalidTask, "no products to ask about");
    const auto prompt = catalog_.proposal.render({{"products", format_products(products)},
                                                  {"conversation", format_conversation(conversation)},
                                                  {"num_questions", std::to_string(std::max<std::size_t>(10, max_count))}});
    const auto reply = client_->complete(catalog_.proposal.name(), client_->make_request({{"user", prompt}}),
                                         [](const std::string& r) { return !parse_numbered_list(r).empty(); });
    return index_unique(parse_numbered_list(reply), max_count);
  }

  // Single question from the vanilla seller prompt.
  Question vanilla_question(std::span<const Product> products, const Conversation& conversation) {
    const auto prompt = catalog_.vanilla.render(
        {{"products", format_products(products)}, {"conversation", format_conversation(conversation)}});
    auto first_line = [](const std::string& r) -> std::string {
      for (const auto& line : split_lines(r)) {
        auto t = trim(line);
        const auto items = parse_numbered_list(t);
        if (!items.empty()) t = items.front();
        if (!t.empty()) return t;
      }
      return {};
    };
    const auto reply = client_->complete(catalog_.vanilla.name(), client_->make_request({{"user", prompt}}),
                                         [&](const std::string& r) { return !first_line(r).empty(); });
    return {first_line(reply), 0};
  }

  LlmClient& client() { return *client_; }
  const PromptCatalog& catalog() const { return catalog_; }

 protected:
  ConsistencyVector raw_consistency(std::span<const Product> products, const Question& question) override {
    ConsistencyVector cv{question, std::vector<double>(products.size(), 0.0)};
    for (std::size_t i = 0; i < products.size(); ++i) {
      try {
        cv.yes_prob[i] = ask_simulated_human(*client_, catalog_, products[i], question.text) == Answer::kYes ? 1.0 : 0.0;
      } catch (const Error& e) {
        throw Error(ErrorCode::kScoreUnavailable,
                    "no yes/no score for product '" + products[i].id + "' on \"" + question.text + "\": " + e.what());
      }
    }
    return cv;
  }

 private:
  std::shared_ptr<LlmClient> client_;
  PromptCatalog catalog_;
};

inline std::unique_ptr<Oracle> make_oracle(const OracleConfig& config, std::shared_ptr<LlmClient> client = nullptr) {
  if (config.kind == OracleKind::kAttribute) return std::make_unique<AttributeOracle>(config);
  if (!client) client = make_llm_client(config);
  return std::make_unique<LlmOracle>(config, std::move(client));
}

}  // namespace prefinfer

#endif  // PREFINFER_ORACLE_HPP_
