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

// Test doubles for the chat wire protocol.

#ifndef PREFINFER_TESTS_FAKE_LLM_HPP_
#define PREFINFER_TESTS_FAKE_LLM_HPP_

#include <atomic>
#include <chrono>
#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <thread>

#include "prefinfer/llm.hpp"

namespace prefinfer::testing {

// Answers through a callback and counts calls.
class FakeTransport : public ChatTransport {
 public:
  using Handler = std::function<std::string(const ChatRequest&)>;

  explicit FakeTransport(Handler handler) : handler_(std::move(handler)) {}

  std::string complete(const ChatRequest& request) override {
    ++calls_;
    if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
    return handler_(request);
  }

  std::size_t calls() const { return calls_.load(); }
  void set_delay(std::chrono::milliseconds d) { delay_ = d; }

 private:
  Handler handler_;
  std::atomic<std::size_t> calls_{0};
  std::chrono::milliseconds delay_{0};
};

// Replays a fixed list of replies in order, then repeats the last one.
class ScriptedTransport : public ChatTransport {
 public:
  explicit ScriptedTransport(std::deque<std::string> replies) : replies_(std::move(replies)) {}

  std::string complete(const ChatRequest& request) override {
    std::lock_guard lock(mutex_);
    requests_.push_back(request);
    if (replies_.size() > 1) {
      auto r = replies_.front();
      replies_.pop_front();
      return r;
    }
    return replies_.front();
  }

  std::vector<ChatRequest> requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }

 private:
  mutable std::mutex mutex_;
  std::deque<std::string> replies_;
  std::vector<ChatRequest> requests_;
};

// The wanted product text sits in the system prompt; answer from it
// the way the attribute user would, by looking for the question's last word.
inline std::string human_from_system_prompt(const ChatRequest& r) {
  const auto& system = r.messages.at(0).content;
  auto q = r.messages.at(1).content;
  while (!q.empty() && (q.back() == '?' || q.back() == ' ')) q.pop_back();
  const auto word = q.substr(q.rfind(' ') + 1);
  const auto attrs = system.find("Attributes:");
  const auto line = system.substr(attrs, system.find('\n', attrs) - attrs);
  return line.find(word) != std::string::npos ? "Yes." : "No.";
}

}  // namespace prefinfer::testing

#endif  // PREFINFER_TESTS_FAKE_LLM_HPP_
