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

#include <fstream>
#include <sstream>

#include "prefinfer/prompts.hpp"
#include "prefinfer/text.hpp"

namespace prefinfer {
namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(PromptCatalog, EmbeddedBodiesMatchShippedFiles) {
  const PromptCatalog c;
  const std::string dir = PREFINFER_SOURCE_DIR "/prompts/";
  for (const auto* t : {&c.proposal, &c.human, &c.vanilla, &c.react, &c.product_type, &c.soft_reward}) {
    EXPECT_EQ(t->body(), slurp(dir + t->name() + ".txt")) << t->name();
  }
}

TEST(PromptCatalog, FromDirectoryLoadsOverrides) {
  const auto c = PromptCatalog::from_directory(PREFINFER_SOURCE_DIR "/prompts");
  EXPECT_EQ(c.human.body(), PromptCatalog{}.human.body());
}

TEST(PromptTemplate, RenderFillsEveryPlaceholder) {
  const PromptCatalog c;
  const auto text = c.proposal.render({{"products", "1. A"}, {"conversation", "none"}, {"num_questions", "10"}});
  EXPECT_TRUE(PromptTemplate::scan(text).empty());
  EXPECT_NE(text.find("Generate a list of 10 yes/no questions"), std::string::npos);
  EXPECT_NE(text.find("1. A"), std::string::npos);
}

TEST(PromptTemplate, HumanPromptCarriesTheNoRule) {
  const auto text = PromptCatalog{}.human.render({{"product_txt", "red case"}});
  EXPECT_NE(text.find("If you are asked about features not mentioned in the product description, then say No."),
            std::string::npos);
  EXPECT_NE(text.find("answer only either yes or no"), std::string::npos);
}

TEST(PromptTemplate, ValuesWithBracesAreNotReexpanded) {
  const PromptTemplate t("t", "a {x} b", {"x"});
  EXPECT_EQ(t.render({{"x", "{x}"}}), "a {x} b");
}

TEST(PromptTemplate, MissingValueAndUndeclaredPlaceholder) {
  const PromptTemplate t("t", "a {x} {y}", {"x", "y"});
  EXPECT_THROW(t.render({{"x", "1"}}), Error);
  EXPECT_THROW(PromptTemplate("bad", "a {x} {z}", {"x"}), Error);
}

TEST(ParseNumberedList, ToleratesNoise) {
  const auto items = parse_numbered_list("Here you go:\n1. Is it red?\n2) Is it for iPhone?\n\n3.   \n10. Is it heavy?\n");
  EXPECT_EQ(items, (std::vector<std::string>{"Is it red?", "Is it for iPhone?", "Is it heavy?"}));
  EXPECT_TRUE(parse_numbered_list("no list here").empty());
}

TEST(ParseYesNo, FirstTokenAndFallback) {
  EXPECT_EQ(parse_yes_no("Yes."), Answer::kYes);
  EXPECT_EQ(parse_yes_no("  no, it is not"), Answer::kNo);
  EXPECT_EQ(parse_yes_no("YES"), Answer::kYes);
  EXPECT_EQ(parse_yes_no("I would say yes"), Answer::kYes);
  EXPECT_EQ(parse_yes_no("Answer: No."), Answer::kNo);
  EXPECT_FALSE(parse_yes_no("not sure").has_value());
  EXPECT_FALSE(parse_yes_no("maybe").has_value());
  EXPECT_FALSE(parse_yes_no("yes or no?").has_value());
  EXPECT_FALSE(parse_yes_no("Well,\nthe answer is yes").has_value());
}

TEST(NormalizeQuestion, CollapsesCaseSpaceAndPunctuation) {
  EXPECT_EQ(normalize_question("  Is it  RED? "), "is it red");
  EXPECT_EQ(normalize_question("is it red"), normalize_question("Is it red?!"));
}

}  // namespace
}  // namespace prefinfer
