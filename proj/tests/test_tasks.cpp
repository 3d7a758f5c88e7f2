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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "fake_llm.hpp"
#include "prefinfer/tasks.hpp"

namespace prefinfer {
namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
  auto p = std::filesystem::temp_directory_path() / ("prefinfer_" + name + "_" + std::to_string(::getpid()));
  std::ofstream(p, std::ios::binary) << body;
  return p;
}

Task soft_task() {
  Task t;
  t.task_id = "soft";
  t.product_type = "lamp";
  t.products = {{"a", "A", "", {"a", "b", "c", "d"}, "lamp"},
                {"b", "B", "", {"a", "b", "x"}, "lamp"},
                {"c", "C", "", {"x", "y"}, "lamp"},
                {"d", "D", "", {"a", "b"}, "Desk Lamp"},
                {"e", "E", "", {"a", "b"}, "LAMP"}};
  t.target_index = 0;
  return t;
}

TEST(LoadTasks, RoundTripsGeneratedFile) {
  const auto tasks = generate_synthetic_tasks(150, 10, 5, 3);
  const auto path = write_temp("tasks.json", "");
  save_tasks(tasks, path);
  const auto loaded = load_tasks(path);
  ASSERT_EQ(loaded.size(), 150u);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    EXPECT_EQ(loaded[i].task_id, tasks[i].task_id);
    EXPECT_EQ(loaded[i].products.size(), 10u);
    EXPECT_EQ(loaded[i].target_index, tasks[i].target_index);
    EXPECT_EQ(loaded[i].products[3].attributes, tasks[i].products[3].attributes);
  }
  std::filesystem::remove(path);
}

TEST(LoadTasks, BundledPhoneCaseMatchesBuiltin) {
  const auto loaded = load_tasks(PREFINFER_SOURCE_DIR "/data/phone_case_task.json");
  ASSERT_EQ(loaded.size(), 1u);
  const auto builtin = phone_case_task();
  EXPECT_EQ(to_json(loaded[0]), to_json(builtin));
  EXPECT_EQ(loaded[0].target().attributes.front(), "purple");
}

TEST(LoadTasks, EmptyFileIsEmptyList) {
  const auto path = write_temp("empty.json", "");
  EXPECT_TRUE(load_tasks(path).empty());
  std::filesystem::remove(path);
}

TEST(LoadTasks, DuplicateIdsRejected) {
  const auto path = write_temp("dup.json", R"([{"task_id":"t1","product_type":"case","target_id":"x",
    "products":[{"id":"x","title":"X","description":"","attributes":["red"],"product_type":"case"},
                {"id":"x","title":"Y","description":"","attributes":["blue"],"product_type":"case"}]}])");
  try {
    load_tasks(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLoad);
    EXPECT_NE(std::string(e.what()).find("t1"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("products[1].id"), std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST(LoadTasks, SchemaErrorsNameTheField) {
  const auto path = write_temp("bad.json", R"([{"task_id":"t9","product_type":"case","products":[
    {"id":"x","attributes":["red"]},{"id":"y","attributes":["blue"]}]}])");
  try {
    load_tasks(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("t9"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("target_id"), std::string::npos);
  }
  const auto unknown = write_temp("unknown.json", R"([{"task_id":"t","product_type":"case","target_id":"z",
    "extra":1,"products":[{"id":"x","attributes":["Red"]},{"id":"y","attributes":["blue"]}]}])");
  EXPECT_THROW(load_tasks(unknown), Error);  // target_id names no product
  std::filesystem::remove(path);
  std::filesystem::remove(unknown);
}

TEST(LoadTasks, UnknownFieldsIgnoredAndAttributesLowercased) {
  const auto path = write_temp("ok.json", R"([{"task_id":"t","product_type":"case","target_id":"y","extra":1,
    "products":[{"id":"x","attributes":["Red"],"price":3},{"id":"y","attributes":["blue"]}]}])");
  const auto tasks = load_tasks(path);
  ASSERT_EQ(tasks.size(), 1u);
  EXPECT_EQ(tasks[0].target_index, 1u);
  EXPECT_EQ(tasks[0].products[0].attributes, std::vector<std::string>{"red"});
  EXPECT_EQ(tasks[0].products[0].product_type, "case");
  std::filesystem::remove(path);
}

TEST(SyntheticTasks, FullGridOverFourAttributes) {
  const auto tasks = generate_synthetic_tasks(1, 16, 4, 11);
  ASSERT_EQ(tasks.size(), 1u);
  std::set<std::vector<std::string>> patterns;
  for (const auto& p : tasks[0].products) {
    EXPECT_EQ(p.attributes.size(), 4u);
    patterns.insert(p.attributes);
  }
  EXPECT_EQ(patterns.size(), 16u);
}

TEST(SyntheticTasks, DeterministicInSeed) {
  const auto a = generate_synthetic_tasks(150, 10, 5, 42);
  const auto b = generate_synthetic_tasks(150, 10, 5, 42);
  const auto c = generate_synthetic_tasks(150, 10, 5, 43);
  EXPECT_EQ(to_json(a[17]).dump(), to_json(b[17]).dump());
  nlohmann::json ja, jb, jc;
  for (const auto& t : a) ja.push_back(to_json(t));
  for (const auto& t : b) jb.push_back(to_json(t));
  for (const auto& t : c) jc.push_back(to_json(t));
  EXPECT_EQ(ja.dump(), jb.dump());
  EXPECT_NE(ja.dump(), jc.dump());
  EXPECT_EQ(a.size(), 150u);
  for (const auto& t : a) {
    EXPECT_EQ(t.products.size(), 10u);
    EXPECT_NO_THROW(validate_task(t));
  }
}

TEST(SyntheticTasks, TargetsSpreadAcrossPositions) {
  std::set<std::size_t> seen;
  for (const auto& t : generate_synthetic_tasks(150, 10, 5, 1)) seen.insert(t.target_index);
  EXPECT_EQ(seen.size(), 10u);
}

TEST(BinaryReward, Examples) {
  const auto t = phone_case_task();
  EXPECT_EQ(binary_reward(t, 2), 1.0);
  EXPECT_EQ(binary_reward(t, 0), 0.0);
  Task single = t;
  single.products.resize(1);
  single.target_index = 0;
  EXPECT_EQ(binary_reward(single, 0), 1.0);
}

TEST(SoftReward, Examples) {
  const auto t = soft_task();
  EXPECT_EQ(soft_reward(t, 0), 1.0);
  EXPECT_DOUBLE_EQ(soft_reward(t, 1), 0.5);   // shares {a,b} of {a,b,c,d}
  EXPECT_DOUBLE_EQ(soft_reward(t, 2), 0.0);   // disjoint
  EXPECT_DOUBLE_EQ(soft_reward(t, 3), 0.25);  // other type halves the overlap
  EXPECT_DOUBLE_EQ(soft_reward(t, 4), 0.5);   // type match is case-insensitive
}

TEST(SoftReward, RangeAndAsymmetry) {
  for (const auto& task : generate_synthetic_tasks(30, 10, 5, 8)) {
    for (std::size_t i = 0; i < task.products.size(); ++i) {
      const double r = soft_reward(task, i);
      EXPECT_GE(r, 0.0);
      EXPECT_LE(r, 1.0);
    }
  }
  // Rewards depend on which product is the target.
  auto t = soft_task();
  const double forward = soft_reward(t, 1);
  t.target_index = 1;
  EXPECT_NE(soft_reward(t, 0), forward);
}

TEST(ExpectedReward, Examples) {
  const auto t = phone_case_task();
  std::vector<double> two(6, 0.0);
  two[2] = two[4] = 0.5;
  EXPECT_DOUBLE_EQ(expected_reward(t, BeliefState(two), {RewardKind::kBinary}), 0.5);
  std::vector<double> point(6, 0.0);
  point[2] = 1.0;
  EXPECT_DOUBLE_EQ(expected_reward(t, BeliefState(point), {RewardKind::kBinary}), 1.0);
  const auto ten = generate_synthetic_tasks(1, 10, 5, 0)[0];
  EXPECT_NEAR(expected_reward(ten, uniform_prior(10), {RewardKind::kBinary}), 0.1, 1e-15);
}

TEST(ExpectedReward, PointMassEqualsPlainReward) {
  const auto t = soft_task();
  for (std::size_t i = 0; i < t.products.size(); ++i) {
    std::vector<double> p(t.products.size(), 0.0);
    p[i] = 1.0;
    EXPECT_DOUBLE_EQ(expected_reward(t, BeliefState(p), {RewardKind::kSoft}), soft_reward(t, i));
  }
}

TEST(ProductType, ParsesMarker) {
  EXPECT_EQ(parse_product_type("Product type: Deodorant"), "Deodorant");
  EXPECT_EQ(parse_product_type("Sure!\nproduct type:   HDMI cable \n"), "HDMI cable");
  try {
    parse_product_type("It is a deodorant.");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
  }
}

TEST(ProductType, ExtractUsesCache) {
  auto t = std::make_shared<testing::FakeTransport>([](const ChatRequest& r) {
    EXPECT_NE(r.messages[0].content.find("Product: Bright Citrus"), std::string::npos);
    return std::string("Product type: Deodorant");
  });
  LlmClient client(t, {"fake", 0.0, 1, 2});
  Product p{"d", "Bright Citrus Deodorant by Earth Mama", "", {"citrus"}, "?"};
  EXPECT_EQ(extract_product_type(p, client), "Deodorant");
  EXPECT_EQ(extract_product_type(p, client), "Deodorant");
  EXPECT_EQ(t->calls(), 1u);
}

TEST(LlmSoftReward, RatingsMapOntoUnitInterval) {
  EXPECT_EQ(parse_all_ratings("1. Explanation: x, Rating: 3/10\nAll ratings: 10, 1, 5.5/10 , 7"),
            (std::vector<double>{10, 1, 5.5, 7}));
  EXPECT_THROW(parse_all_ratings("no ratings"), Error);
  auto t = std::make_shared<testing::FakeTransport>(
      [](const ChatRequest&) { return std::string("...\nAll ratings: 10, 1, 4, 10, 7"); });
  LlmClient client(t, {"fake", 0.0, 1, 2});
  auto task = soft_task();
  task.target_index = 3;
  const auto r = llm_soft_rewards(task, client);
  ASSERT_EQ(r.size(), 5u);
  EXPECT_DOUBLE_EQ(r[0], 1.0);
  EXPECT_DOUBLE_EQ(r[1], 0.0);
  EXPECT_DOUBLE_EQ(r[2], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(r[3], 1.0);
}

}  // namespace
}  // namespace prefinfer
