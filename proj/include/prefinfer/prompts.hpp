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

#ifndef PREFINFER_PROMPTS_HPP_
#define PREFINFER_PROMPTS_HPP_

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prefinfer/error.hpp"

namespace prefinfer {

// Text with {name} placeholders. The declared placeholder set must match the
// set used in the body exactly.
class PromptTemplate {
 public:
  PromptTemplate(std::string name, std::string body, std::vector<std::string> placeholders)
      : name_(std::move(name)), body_(std::move(body)),
        declared_(placeholders.begin(), placeholders.end()) {
    const auto used = scan(body_);
    if (used != declared_) {
      throw Error(ErrorCode::kConfig, "template '" + name_ + "' placeholders do not match declaration");
    }
  }

  const std::string& name() const { return name_; }
  const std::string& body() const { return body_; }
  const std::set<std::string>& placeholders() const { return declared_; }

  // Substitution is single-pass: values containing braces are copied as-is.
  std::string render(const std::map<std::string, std::string>& values) const {
    for (const auto& p : declared_) {
      if (!values.contains(p)) {
        throw Error(ErrorCode::kConfig, "template '" + name_ + "' missing value for {" + p + "}");
      }
    }
    std::string out;
    out.reserve(body_.size());
    std::size_t i = 0;
    while (i < body_.size()) {
      if (body_[i] == '{') {
        const auto close = body_.find('}', i);
        if (close != std::string::npos) {
          const auto key = body_.substr(i + 1, close - i - 1);
          if (declared_.contains(key)) {
            out += values.at(key);
            i = close + 1;
            continue;
          }
        }
      }
      out += body_[i++];
    }
    return out;
  }

  // Placeholder names appearing in a body as {identifier}.
  static std::set<std::string> scan(std::string_view body) {
    std::set<std::string> found;
    std::size_t i = 0;
    while ((i = body.find('{', i)) != std::string_view::npos) {
      const auto close = body.find('}', i);
      if (close == std::string_view::npos) break;
      const auto key = body.substr(i + 1, close - i - 1);
      bool ident = !key.empty();
      for (char c : key) {
        if (!(c == '_' || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'))) ident = false;
      }
      if (ident) found.emplace(key);
      i = close + 1;
    }
    return found;
  }

 private:
  std::string name_;
  std::string body_;
  std::set<std::string> declared_;
};

namespace prompts {
inline constexpr std::string_view kProposalPrompt = R"PROMPT(Suppose you are a seller, and you need to determine which of the following products the customer wants to buy:
{products}
The conversation you've had with the customer so far is as follows: 
{conversation}
. Generate a list of {num_questions} yes/no questions you would ask the customer to further figure out which of the products the customer want.
Keep in mind that:
1. The question must ask for a yes or no answer only. 
2. The question must ask about one specific thing, do not use 'and' or 'or' to put many features/properties/attributes together.
3. Do not explain.)PROMPT";

inline constexpr std::string_view kHumanPrompt = R"PROMPT(Suppose you want to buy the following product:

{product_txt}

You will interact with a salesperson. They will ask you a question about the product you want. Please answer only either yes or no based on the product information.
If you are asked about features not mentioned in the product description, then say No.)PROMPT";

inline constexpr std::string_view kVanillaPrompt = R"PROMPT(Suppose you are a seller, and you need to determine which of the following products the customer wants to buy:
{products}
The conversation you've had with the customer so far is as follows: 
{conversation}
. What's the next yes/no question you would ask the customer to further figure out which of the products the customer want?
Keep in mind that:
1. The question must ask for a yes or no answer only. 
2. The question must ask about one specific thing, do not use 'and' or 'or' to put many features/properties/attributes together.
3. Do not explain.)PROMPT";

inline constexpr std::string_view kReactPrompt = R"PROMPT(Please choose the appropriate action (think, ask_question, get_products, choose_products) based on the observation and given example runs.

Important: the question must be a yes/no question

Example 1:

Instruction: i want to buy a phone case

Action: show_products[]
Observation: 
1. ID: B09G9D18YS | Product Name: BURGA Phone Case Compatible with iPhone 13 - Hybrid 2-Layer Hard Shell + Silicone Protective Case - Black Polka Dots Pattern Nude Almond Latte Fashion - Scratch-Resistant Shockproof Cover
- Price: $19.95
- Attributes: phone case, wireless charging, heavy duty
- Options: color (almond latte, black & gold onyx, dazzling glow, emerald pool, fatal contradiction, gentle wind, gold dust, hidden beauty, iconic ruby, mystic river)

... # Full list of products in the actual prompt not included here for brevity

Action: think[I'll ask a few yes/no questions to determine which one of these products the customer wants. Some of these phone cases are holster phone cases. I'll ask a yes/no question about if they want a holster]
Observation: OK.

Action: ask_question[Are you looking for a holster phone case? (Yes/No)]
Observation: Answer: No.

Action: think[Ok, we're looking for non-holster phone case. Among these, there are some clear phone cases. Let's ask a yes/no question if they want the phone case to be clear]
Observation: OK.

Action: ask_question[Are you looking for a clear phone case? (Yes/No)]
Observation: Answer: No.

... # Full question asking in the actual prompt not included for brevity

IMPORTANT: No more question can be asked.

Action: choose_product[]
Observation: OK.

Example 2:

Instruction: {instruction})PROMPT";

inline constexpr std::string_view kProductTypePrompt = R"PROMPT(Given a product, please tell me what's the type of the product.

For example, 
Product: Bright Citrus Deodorant by Earth Mama | Natural and Safe for Sensitive Skin, Pregnancy and Breastfeeding, Contains Organic Calendula 3-Ounce
Product type: Deodorant

Here's the product,
Product: {product}

Please put your answer in the format 'Product type: '. Do not say anything else.)PROMPT";

inline constexpr std::string_view kSoftRewardPrompt = R"PROMPT(Given {product_type} with the following description:

{target_product_txt}

Please rate each of the following {product_type} on a scale of 1-10 based on how similar it is to the given target {product_type}

{products_txt}

The {product_type} least similar to the given target {product_type} should receive a score of 1. Please give you answer in the format '1. Explanation: one sentence, Rating: x/10' and so on. Always explain and give rating to all answers. At the very end, please put all output ratings in the form 'All ratings: score_1, score_2, ...)PROMPT";

}  // namespace prompts

// The six templates used by the oracles, simulated users and baselines.
// Bodies match the files under prompts/; from_directory() loads overrides.
class PromptCatalog {
 public:
  PromptCatalog()
      : proposal("proposal", std::string(prompts::kProposalPrompt), {"products", "conversation", "num_questions"}),
        human("human", std::string(prompts::kHumanPrompt), {"product_txt"}),
        vanilla("vanilla", std::string(prompts::kVanillaPrompt), {"products", "conversation"}),
        react("react", std::string(prompts::kReactPrompt), {"instruction"}),
        product_type("product_type", std::string(prompts::kProductTypePrompt), {"product"}),
        soft_reward("soft_reward", std::string(prompts::kSoftRewardPrompt),
                    {"product_type", "target_product_txt", "products_txt"}) {}

  static PromptCatalog from_directory(const std::filesystem::path& dir) {
    PromptCatalog c;
    auto load = [&dir](PromptTemplate& t) {
      const auto path = dir / (t.name() + ".txt");
      std::ifstream in(path, std::ios::binary);
      if (!in) return;
      std::ostringstream ss;
      ss << in.rdbuf();
      std::vector<std::string> ph(t.placeholders().begin(), t.placeholders().end());
      t = PromptTemplate(t.name(), ss.str(), std::move(ph));
    };
    load(c.proposal);
    load(c.human);
    load(c.vanilla);
    load(c.react);
    load(c.product_type);
    load(c.soft_reward);
    return c;
  }

  PromptTemplate proposal;
  PromptTemplate human;
  PromptTemplate vanilla;
  PromptTemplate react;
  PromptTemplate product_type;
  PromptTemplate soft_reward;
};

}  // namespace prefinfer

#endif  // PREFINFER_PROMPTS_HPP_
