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

#ifndef PREFINFER_TEXT_HPP_
#define PREFINFER_TEXT_HPP_

#include <cctype>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "prefinfer/belief.hpp"

namespace prefinfer {

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> lines;
  std::string line;
  std::istringstream in{std::string(s)};
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

// Lowercase, whitespace collapsed, trailing punctuation dropped. Used as the
// dedup key for proposed questions.
inline std::string normalize_question(std::string_view text) {
  std::string out;
  bool space = false;
  for (char c : trim(text)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out += ' ';
    space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  while (!out.empty() && (out.back() == '?' || out.back() == '.' || out.back() == '!' || out.back() == ' ')) {
    out.pop_back();
  }
  return out;
}

// Items of a numbered list ("1. text" or "1) text"), in reply order. Other
// lines are ignored.
inline std::vector<std::string> parse_numbered_list(std::string_view reply) {
  std::vector<std::string> items;
  for (const auto& raw : split_lines(reply)) {
    const auto line = trim(raw);
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == 0 || i >= line.size() || (line[i] != '.' && line[i] != ')')) continue;
    auto text = trim(std::string_view(line).substr(i + 1));
    if (!text.empty()) items.push_back(std::move(text));
  }
  return items;
}

// Case-insensitive match on the first alphabetic token; for one-line
// replies, a lone "yes" or "no" word anywhere is accepted as fallback.
// Replies containing both words are rejected.
inline std::optional<Answer> parse_yes_no(std::string_view reply) {
  const auto lowered = to_lower(reply);
  std::string first;
  bool saw_yes = false;
  bool saw_no = false;
  std::string word;
  auto flush = [&] {
    if (first.empty()) first = word;
    if (word == "yes") saw_yes = true;
    if (word == "no") saw_no = true;
    word.clear();
  };
  for (char c : lowered) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      word += c;
    } else if (!word.empty()) {
      flush();
    }
  }
  if (!word.empty()) flush();
  if (saw_yes == saw_no) return std::nullopt;
  if (first == "yes" || first == "no") return first == "yes" ? Answer::kYes : Answer::kNo;
  if (trim(lowered).find('\n') != std::string::npos) return std::nullopt;
  return saw_yes ? Answer::kYes : Answer::kNo;
}

// What a simulated customer is told about the product they want.
inline std::string product_text(const Product& p) {
  std::string out = p.title;
  if (!p.description.empty()) out += "\n" + p.description;
  if (!p.attributes.empty()) {
    out += "\nAttributes: ";
    for (std::size_t i = 0; i < p.attributes.size(); ++i) {
      if (i) out += ", ";
      out += p.attributes[i];
    }
  }
  return out;
}

inline std::string format_products(std::span<const Product> products) {
  std::string out;
  for (std::size_t i = 0; i < products.size(); ++i) {
    if (i) out += '\n';
    out += std::to_string(i + 1) + ". " + products[i].title;
    if (!products[i].description.empty()) out += " - " + products[i].description;
  }
  return out;
}

inline std::string format_conversation(const Conversation& conversation) {
  if (conversation.empty()) return "(no questions asked yet)";
  std::string out;
  for (std::size_t i = 0; i < conversation.size(); ++i) {
    if (i) out += '\n';
    const auto& t = conversation.turns[i];
    out += "Seller: " + t.question.text + "\nCustomer: " + (t.answer == Answer::kYes ? "Yes" : "No");
  }
  return out;
}

}  // namespace prefinfer

#endif  // PREFINFER_TEXT_HPP_
