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
#include <thread>
#include <vector>

#include <httplib.h>

#include "fake_llm.hpp"
#include "prefinfer/llm.hpp"

namespace prefinfer {
namespace {

using testing::FakeTransport;

std::shared_ptr<FakeTransport> echo() {
  return std::make_shared<FakeTransport>([](const ChatRequest& r) { return "echo: " + r.messages.back().content; });
}

std::filesystem::path temp_file(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("prefinfer_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove(p);
  return p;
}

TEST(RequestKey, CoversTemplateModelTemperatureAndPrompt) {
  const ChatRequest base{"m", {{"user", "hi"}}, 0.0};
  auto other = base;
  EXPECT_EQ(request_key("t", base), request_key("t", other));
  EXPECT_NE(request_key("t", base), request_key("u", base));
  other.temperature = 0.7;
  EXPECT_NE(request_key("t", base), request_key("t", other));
  other = base;
  other.model = "n";
  EXPECT_NE(request_key("t", base), request_key("t", other));
  other = base;
  other.messages[0].content = "hi ";
  EXPECT_NE(request_key("t", base), request_key("t", other));
  EXPECT_EQ(request_key("t", base).size(), 64u);
}

TEST(LlmClient, IdenticalRequestsCallOnce) {
  auto t = echo();
  LlmClient client(t, {"m", 0.0, 2, 4});
  const auto req = client.make_request({{"user", "is it red?"}});
  EXPECT_EQ(client.complete("human", req), "echo: is it red?");
  EXPECT_EQ(client.complete("human", req), "echo: is it red?");
  EXPECT_EQ(t->calls(), 1u);
}

TEST(LlmClient, DifferentTemperatureCallsTwice) {
  auto t = echo();
  auto cache = std::make_shared<ResponseCache>();
  LlmClient c0(t, {"m", 0.0, 2, 4}, cache);
  LlmClient c1(t, {"m", 1.0, 2, 4}, cache);
  c0.complete("human", c0.make_request({{"user", "q"}}));
  c1.complete("human", c1.make_request({{"user", "q"}}));
  EXPECT_EQ(t->calls(), 2u);
}

TEST(LlmClient, RemoteDownIsOracleUnavailableAfterRetries) {
  auto t = std::make_shared<FakeTransport>([](const ChatRequest&) -> std::string { throw TransportError("refused"); });
  LlmClient client(t, {"m", 0.0, 3, 4});
  try {
    client.complete("human", client.make_request({{"user", "q"}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOracleUnavailable);
    EXPECT_NE(std::string(e.what()).find("refused"), std::string::npos);
  }
  EXPECT_EQ(t->calls(), 4u);
}

TEST(LlmClient, RejectedRepliesAreRetriedAndNotCached) {
  int n = 0;
  auto t = std::make_shared<FakeTransport>([&n](const ChatRequest&) { return ++n < 3 ? "hmm" : "Yes"; });
  LlmClient client(t, {"m", 0.0, 2, 4});
  auto accept = [](const std::string& r) { return r == "Yes"; };
  EXPECT_EQ(client.complete("human", client.make_request({{"user", "q"}}), accept), "Yes");
  EXPECT_EQ(t->calls(), 3u);
  EXPECT_EQ(client.cache().size(), 1u);
}

TEST(LlmClient, ConcurrentIdenticalRequestsShareOneCall) {
  auto t = echo();
  t->set_delay(std::chrono::milliseconds(50));
  LlmClient client(t, {"m", 0.0, 0, 2});
  std::vector<std::string> replies(8);
  {
    std::vector<std::jthread> threads;
    for (int i = 0; i < 8; ++i) {
      threads.emplace_back([&, i] { replies[i] = client.complete("human", client.make_request({{"user", "x"}})); });
    }
  }
  EXPECT_EQ(t->calls(), 1u);
  for (const auto& r : replies) EXPECT_EQ(r, "echo: x");
}

TEST(ResponseCache, PersistsByteExactReplies) {
  const auto path = temp_file("cache");
  const std::string tricky = "line1\nline2\t\"quoted\" \\ caf\xc3\xa9 \xe2\x9c\x93\r\n";
  {
    ResponseCache cache(path);
    cache.put("k1", tricky);
    cache.put("k2", "");
  }
  ResponseCache reloaded(path);
  EXPECT_EQ(reloaded.get("k1"), tricky);
  EXPECT_EQ(reloaded.get("k2"), std::string{});
  std::filesystem::remove(path);
}

TEST(ResponseCache, CorruptLinesAreMisses) {
  const auto path = temp_file("corrupt");
  {
    std::ofstream out(path);
    out << "{\"key\":\"good\",\"reply\":\"ok\"}\n{not json\n{\"key\":\"x\"}\n";
  }
  ResponseCache cache(path);
  EXPECT_EQ(cache.get("good"), "ok");
  EXPECT_FALSE(cache.get("x").has_value());
  EXPECT_EQ(cache.size(), 1u);
  std::filesystem::remove(path);
}

TEST(ResponseCache, WarmCacheAvoidsRemoteCalls) {
  const auto path = temp_file("warm");
  const ChatRequest req{"m", {{"user", "q"}}, 0.0};
  {
    LlmClient client(echo(), {"m", 0.0, 2, 4}, std::make_shared<ResponseCache>(path));
    client.complete("human", req);
  }
  auto t = echo();
  LlmClient client(t, {"m", 0.0, 2, 4}, std::make_shared<ResponseCache>(path));
  EXPECT_EQ(client.complete("human", req), "echo: q");
  EXPECT_EQ(t->calls(), 0u);
  std::filesystem::remove(path);
}

// A local stand-in for an OpenAI-compatible endpoint.
class FakeEndpoint : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      last_auth_ = req.get_header_value("Authorization");
      last_body_ = nlohmann::json::parse(req.body);
      if (last_body_["messages"][0]["content"] == "fail") {
        res.status = 500;
        return;
      }
      const nlohmann::json reply = {
          {"id", "x"},
          {"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", "Yes, it is."}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::string last_auth_;
  nlohmann::json last_body_;
};

TEST_F(FakeEndpoint, WireFormat) {
  HttpChatTransport t(url(), "sk-test");
  const auto reply = t.complete({"gpt-x", {{"system", "s"}, {"user", "u"}}, 0.0});
  EXPECT_EQ(reply, "Yes, it is.");
  EXPECT_EQ(last_auth_, "Bearer sk-test");
  EXPECT_EQ(last_body_["model"], "gpt-x");
  EXPECT_EQ(last_body_["temperature"], 0.0);
  ASSERT_EQ(last_body_["messages"].size(), 2u);
  EXPECT_EQ(last_body_["messages"][1]["role"], "user");
  EXPECT_EQ(last_body_["messages"][1]["content"], "u");
}

TEST_F(FakeEndpoint, ServerErrorIsTransportError) {
  HttpChatTransport t(url(), "");
  EXPECT_THROW(t.complete({"m", {{"user", "fail"}}, 0.0}), TransportError);
}

TEST(HttpChatTransport, UnreachableEndpoint) {
  HttpChatTransport t("http://127.0.0.1:1/v1/chat/completions", "", 1);
  EXPECT_THROW(t.complete({"m", {{"user", "q"}}, 0.0}), TransportError);
  EXPECT_THROW(HttpChatTransport("not a url", ""), Error);
}

}  // namespace
}  // namespace prefinfer
