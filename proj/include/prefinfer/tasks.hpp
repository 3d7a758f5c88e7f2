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

#ifndef PREFINFER_TASKS_HPP_
#define PREFINFER_TASKS_HPP_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "prefinfer/belief.hpp"
#include "prefinfer/error.hpp"
#include "prefinfer/llm.hpp"
#include "prefinfer/prompts.hpp"
#include "prefinfer/text.hpp"

namespace prefinfer {

struct Task {
  std::string task_id;
  std::string product_type;
  std::vector<Product> products;
  std::size_t target_index = 0;

  const Product& target() const { return products.at(target_index); }
};

enum class RewardKind { kBinary, kSoft };

struct RewardSpec {
  RewardKind kind = RewardKind::kBinary;
};

inline std::string_view to_string(RewardKind k) { return k == RewardKind::kBinary ? "binary" : "soft"; }

// Throws kLoad naming the task and field at fault.
inline void validate_task(const Task& task) {
  auto fail = [&task](const std::string& what) {
    throw Error(ErrorCode::kLoad, "task '" + task.task_id + "': " + what);
  };
  if (task.task_id.empty()) fail("task_id is empty");
  if (task.products.size() < 2) fail("products: need at least 2, got " + std::to_string(task.products.size()));
  std::set<std::string> ids;
  for (std::size_t i = 0; i < task.products.size(); ++i) {
    const auto& p = task.products[i];
    const auto where = "products[" + std::to_string(i) + "]";
    if (p.id.empty()) fail(where + ".id is empty");
    if (!ids.insert(p.id).second) fail(where + ".id duplicates '" + p.id + "'");
    if (p.product_type.empty()) fail(where + ".product_type is empty");
    if (p.attributes.empty()) fail(where + ".attributes is empty");
  }
  if (task.target_index >= task.products.size()) fail("target_id does not name a product");
}

inline nlohmann::json to_json(const Product& p) {
  return {{"id", p.id}, {"title", p.title}, {"description", p.description},
          {"attributes", p.attributes}, {"product_type", p.product_type}};
}

inline nlohmann::json to_json(const Task& t) {
  nlohmann::json products = nlohmann::json::array();
  for (const auto& p : t.products) products.push_back(to_json(p));
  return {{"task_id", t.task_id}, {"product_type", t.product_type},
          {"target_id", t.products.at(t.target_index).id}, {"products", products}};
}

inline std::vector<Task> parse_tasks(const nlohmann::json& doc) {
  if (!doc.is_array()) throw Error(ErrorCode::kLoad, "task file: top level must be a list");
  std::vector<Task> tasks;
  for (std::size_t ti = 0; ti < doc.size(); ++ti) {
    const auto& jt = doc[ti];
    Task t;
    std::string field = "task_id";
    try {
      t.task_id = jt.at("task_id").get<std::string>();
      field = "product_type";
      t.product_type = jt.at("product_type").get<std::string>();
      field = "products";
      for (const auto& jp : jt.at("products")) {
        Product p;
        field = "products.id";
        p.id = jp.at("id").get<std::string>();
        field = "products.title";
        p.title = jp.value("title", std::string{});
        field = "products.description";
        p.description = jp.value("description", std::string{});
        field = "products.attributes";
        for (const auto& a : jp.at("attributes")) p.attributes.push_back(to_lower(a.get<std::string>()));
        field = "products.product_type";
        p.product_type = jp.value("product_type", t.product_type);
        t.products.push_back(std::move(p));
      }
      field = "target_id";
      const auto target = jt.at("target_id").get<std::string>();
      t.target_index = t.products.size();
      for (std::size_t i = 0; i < t.products.size(); ++i) {
        if (t.products[i].id == target) t.target_index = i;
      }
    } catch (const nlohmann::json::exception& e) {
      const auto name = t.task_id.empty() ? "#" + std::to_string(ti) : t.task_id;
      throw Error(ErrorCode::kLoad, "task '" + name + "': field " + field + ": " + e.what());
    }
    validate_task(t);
    tasks.push_back(std::move(t));
  }
  return tasks;
}

// An empty (or whitespace-only) file holds no tasks.
inline std::vector<Task> load_tasks(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kLoad, "cannot open task file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const auto text = ss.str();
  if (trim(text).empty()) return {};
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kLoad, "task file " + path.string() + ": " + e.what());
  }
  return parse_tasks(doc);
}

inline void save_tasks(std::span<const Task> tasks, const std::filesystem::path& path) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& t : tasks) doc.push_back(to_json(t));
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kExport, "cannot write task file " + path.string());
}

// Unbiased draw from [0, n) that depends only on the mt19937_64 sequence,
// unlike std::uniform_int_distribution whose algorithm varies by library.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t bound = n;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return static_cast<std::size_t>(r % bound);
}

inline std::string synthetic_attribute(std::size_t bit, bool present) {
  return (present ? "attr" : "not-attr") + std::to_string(bit);
}

// Each product realizes one attribute bit pattern as n_attributes tokens,
// "attrI" when bit I is set and "not-attrI" otherwise. Patterns are distinct
// within a task while 2^n_attributes >= n_products.
inline std::vector<Task> generate_synthetic_tasks(std::size_t n_tasks, std::size_t n_products,
                                                  std::size_t n_attributes, std::uint64_t seed) {
  if (n_products == 0 || n_attributes == 0 || n_attributes > 62) {
    throw Error(ErrorCode::kConfig, "synthetic tasks need n_products >= 1 and 1 <= n_attributes <= 62");
  }
  static constexpr const char* kTypes[] = {"phone case", "hdmi cable", "hair growth serum", "deodorant",
                                           "desk lamp", "water bottle", "running shoe", "backpack"};
  std::mt19937_64 rng(seed);
  const std::uint64_t n_patterns = std::uint64_t{1} << n_attributes;
  std::vector<Task> tasks;
  tasks.reserve(n_tasks);
  for (std::size_t ti = 0; ti < n_tasks; ++ti) {
    Task t;
    t.task_id = "task-" + std::to_string(ti);
    t.product_type = kTypes[ti % std::size(kTypes)];
    std::vector<std::uint64_t> patterns;
    std::set<std::uint64_t> used;
    while (patterns.size() < n_products) {
      const std::uint64_t pat = rng() & (n_patterns - 1);
      if (used.size() < n_patterns && !used.insert(pat).second) continue;
      patterns.push_back(pat);
    }
    for (std::size_t j = 0; j < n_products; ++j) {
      Product p;
      p.id = t.task_id + "-p" + std::to_string(j);
      p.title = t.product_type + " #" + std::to_string(j + 1);
      p.product_type = t.product_type;
      p.description = t.product_type + " with";
      for (std::size_t b = 0; b < n_attributes; ++b) {
        p.attributes.push_back(synthetic_attribute(b, (patterns[j] >> b) & 1));
        p.description += (b ? ", " : " ") + p.attributes.back();
      }
      t.products.push_back(std::move(p));
    }
    t.target_index = uniform_index(rng, n_products);
    tasks.push_back(std::move(t));
  }
  return tasks;
}

// Six phone cases from a worked conversation; the wanted one is purple.
inline Task phone_case_task() {
  Task t;
  t.task_id = "phone-case-demo";
  t.product_type = "phone case";
  const std::vector<std::vector<std::string>> attrs = {
      {"blue", "plastic", "heavy", "dust-proof", "iphone"},   {"green", "plastic", "heavy", "dust-proof", "iphone"},
      {"purple", "plastic", "heavy", "dust-proof", "iphone"}, {"green", "leather", "light", "water-proof", "iphone"},
      {"red", "plastic", "heavy", "dust-proof", "iphone"},    {"red", "plastic", "heavy", "dust-proof", "android"}};
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    Product p;
    p.id = "p" + std::to_string(i + 1);
    p.title = "Product " + std::to_string(i + 1);
    p.attributes = attrs[i];
    for (std::size_t a = 0; a < attrs[i].size(); ++a) {
      if (a) p.description += ", ";
      p.description += attrs[i][a] == "iphone" ? std::string("iPhone") : attrs[i][a];
    }
    p.description += " phone case";
    p.product_type = "phone case";
    t.products.push_back(std::move(p));
  }
  t.target_index = 2;
  return t;
}

// ---- rewards ------------------------------------------------------------

inline double binary_reward(const Task& task, std::size_t chosen) {
  if (chosen >= task.products.size()) throw Error(ErrorCode::kValidation, "chosen index out of range");
  return chosen == task.target_index ? 1.0 : 0.0;
}

// 1 for the target itself; otherwise the fraction of the target's attributes
// the chosen product shares, halved when the product types differ.
inline double soft_reward(const Task& task, std::size_t chosen) {
  if (chosen >= task.products.size()) throw Error(ErrorCode::kValidation, "chosen index out of range");
  if (chosen == task.target_index) return 1.0;
  const auto& target = task.target();
  const auto& other = task.products[chosen];
  if (target.attributes.empty()) throw Error(ErrorCode::kConfig, "target product has no attributes");
  std::set<std::string> target_attrs(target.attributes.begin(), target.attributes.end());
  std::size_t shared = 0;
  for (const auto& a : std::set<std::string>(other.attributes.begin(), other.attributes.end())) {
    shared += target_attrs.contains(a) ? 1 : 0;
  }
  const double overlap = static_cast<double>(shared) / static_cast<double>(target_attrs.size());
  const double type_match = to_lower(target.product_type) == to_lower(other.product_type) ? 1.0 : 0.5;
  return type_match * overlap;
}

inline double reward(const Task& task, std::size_t chosen, RewardSpec spec) {
  return spec.kind == RewardKind::kBinary ? binary_reward(task, chosen) : soft_reward(task, chosen);
}

// Mean reward of a product drawn from the belief.
inline double expected_reward(const Task& task, const BeliefState& belief, RewardSpec spec) {
  if (belief.size() != task.products.size()) {
    throw Error(ErrorCode::kLengthMismatch, "belief does not match task products");
  }
  double total = 0.0;
  for (auto i : support(belief)) total += belief[i] * reward(task, i, spec);
  return total;
}

// ---- llm-assisted task tooling -----------------------------------------

// Reads X from a "Product type: X" line.
inline std::string parse_product_type(std::string_view reply) {
  static constexpr std::string_view kMarker = "product type:";
  for (const auto& line : split_lines(reply)) {
    const auto lowered = to_lower(line);
    const auto pos = lowered.find(kMarker);
    if (pos == std::string::npos) continue;
    auto value = trim(std::string_view(line).substr(pos + kMarker.size()));
    if (!value.empty()) return value;
  }
  throw Error(ErrorCode::kParse, "reply has no 'Product type:' line");
}

inline std::string extract_product_type(const Product& product, LlmClient& client, const PromptCatalog& catalog = {}) {
  const auto prompt = catalog.product_type.render({{"product", product.title}});
  return parse_product_type(client.complete(catalog.product_type.name(), client.make_request({{"user", prompt}})));
}

// Scores from the "All ratings: s1, s2, ..." line, each 1..10.
inline std::vector<double> parse_all_ratings(std::string_view reply) {
  static constexpr std::string_view kMarker = "all ratings:";
  const auto lowered = to_lower(reply);
  const auto pos = lowered.rfind(kMarker);
  if (pos == std::string::npos) throw Error(ErrorCode::kParse, "reply has no 'All ratings:' line");
  auto rest = std::string(reply.substr(pos + kMarker.size()));
  rest = rest.substr(0, rest.find('\n'));
  std::vector<double> scores;
  std::string item;
  std::istringstream in(rest);
  while (std::getline(in, item, ',')) {
    auto t = trim(item);
    if (const auto slash = t.find('/'); slash != std::string::npos) t = t.substr(0, slash);
    while (!t.empty() && !std::isdigit(static_cast<unsigned char>(t.back()))) t.pop_back();
    if (t.empty()) continue;
    try {
      scores.push_back(std::stod(t));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParse, "unreadable rating '" + trim(item) + "'");
    }
  }
  return scores;
}

// Similarity ratings mapped onto [0,1] by (s - 1) / 9; the target scores 1.
inline std::vector<double> llm_soft_rewards(const Task& task, LlmClient& client, const PromptCatalog& catalog = {}) {
  const auto prompt = catalog.soft_reward.render({{"product_type", task.product_type},
                                                  {"target_product_txt", product_text(task.target())},
                                                  {"products_txt", format_products(task.products)}});
  const auto n = task.products.size();
  const auto reply = client.complete(catalog.soft_reward.name(), client.make_request({{"user", prompt}}),
                                     [n](const std::string& r) {
                                       try {
                                         return parse_all_ratings(r).size() == n;
                                       } catch (const Error&) {
                                         return false;
                                       }
                                     });
  auto scores = parse_all_ratings(reply);
  for (double& s : scores) s = std::clamp((s - 1.0) / 9.0, 0.0, 1.0);
  scores[task.target_index] = 1.0;
  return scores;
}

}  // namespace prefinfer

#endif  // PREFINFER_TASKS_HPP_
