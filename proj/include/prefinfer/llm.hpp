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

#ifndef PREFINFER_LLM_HPP_
#define PREFINFER_LLM_HPP_

#include <openssl/evp.h>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "prefinfer/error.hpp"

namespace prefinfer {

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
};

// Thrown by transports for network or protocol failures; the client retries
// these.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  // Text of the first choice's message.
  virtual std::string complete(const ChatRequest& request) = 0;
};

inline nlohmann::json to_json(const ChatRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", request.model}, {"messages", messages}, {"temperature", request.temperature}};
}

// OpenAI-compatible chat-completions endpoint, e.g.
// https://api.openai.com/v1/chat/completions.
class HttpChatTransport : public ChatTransport {
 public:
  HttpChatTransport(const std::string& endpoint, std::string api_key, int timeout_seconds = 120)
      : api_key_(std::move(api_key)), timeout_seconds_(timeout_seconds) {
    const auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
      throw Error(ErrorCode::kConfig, "llm endpoint must be an absolute URL: " + endpoint);
    }
    const auto path_begin = endpoint.find('/', scheme_end + 3);
    origin_ = endpoint.substr(0, path_begin);
    path_ = path_begin == std::string::npos ? "/v1/chat/completions" : endpoint.substr(path_begin);
  }

  std::string complete(const ChatRequest& request) override {
    httplib::Client client(origin_);
    client.set_connection_timeout(timeout_seconds_);
    client.set_read_timeout(timeout_seconds_);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    const auto res = client.Post(path_, headers, to_json(request).dump(), "application/json");
    if (!res) throw TransportError("request to " + origin_ + path_ + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200) {
      throw TransportError("endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    try {
      const auto body = nlohmann::json::parse(res->body);
      return body.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("malformed chat-completion reply: ") + e.what());
    }
  }

 private:
  std::string origin_;
  std::string path_;
  std::string api_key_;
  int timeout_seconds_;
};

// Hex SHA-256.
inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kInternal, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

// Canonical digest of (template name, rendered prompt, model, temperature).
inline std::string request_key(std::string_view template_name, const ChatRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : request.messages) messages.push_back({m.role, m.content});
  char temp[32];
  std::snprintf(temp, sizeof temp, "%.17g", request.temperature);
  const nlohmann::json canonical = {std::string(template_name), messages, request.model, temp};
  return sha256_hex(canonical.dump());
}

// Key -> reply map, optionally persisted as one JSON object per line.
// Unparseable lines are skipped with a warning.
class ResponseCache {
 public:
  ResponseCache() = default;

  explicit ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(path_, std::ios::binary);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        entries_[j.at("key").get<std::string>()] = j.at("reply").get<std::string>();
      } catch (const nlohmann::json::exception&) {
        std::clog << "warning: ignoring corrupt cache line " << lineno << " in " << path_ << "\n";
      }
    }
  }

  std::optional<std::string> get(const std::string& key) const {
    std::lock_guard lock(mutex_);
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void put(const std::string& key, const std::string& reply) {
    std::lock_guard lock(mutex_);
    if (!entries_.emplace(key, reply).second) return;
    if (path_.empty()) return;
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    out << nlohmann::json{{"key", key}, {"reply", reply}}.dump() << '\n';
    if (!out) std::clog << "warning: failed to persist cache entry to " << path_ << "\n";
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::string> entries_;
};

struct LlmClientOptions {
  std::string model;
  double temperature = 0.0;
  int max_retries = 2;
  int max_in_flight = 4;
};

// Cached, retrying, rate-limited front of a ChatTransport. Concurrent
// requests with equal keys share one remote call.
class LlmClient {
 public:
  using Validator = std::function<bool(const std::string&)>;

  LlmClient(std::shared_ptr<ChatTransport> transport, LlmClientOptions options,
            std::shared_ptr<ResponseCache> cache = nullptr)
      : transport_(std::move(transport)), options_(std::move(options)),
        cache_(cache ? std::move(cache) : std::make_shared<ResponseCache>()),
        slots_(options_.max_in_flight < 1 ? 1 : options_.max_in_flight) {}

  const LlmClientOptions& options() const { return options_; }
  ResponseCache& cache() { return *cache_; }
  std::size_t remote_calls() const { return remote_calls_.load(); }

  ChatRequest make_request(std::vector<ChatMessage> messages) const {
    return {options_.model, std::move(messages), options_.temperature};
  }

  // Returns a reply accepted by `accept`. Rejected replies are not cached and
  // count as a failed attempt. Throws kOracleUnavailable after
  // 1 + max_retries failed attempts.
  std::string complete(std::string_view template_name, const ChatRequest& request,
                       const Validator& accept = nullptr) {
    const auto key = request_key(template_name, request);
    if (auto hit = cache_->get(key)) return *hit;

    std::shared_future<std::string> pending;
    std::promise<std::string> promise;
    bool owner = false;
    {
      std::lock_guard lock(inflight_mutex_);
      if (auto hit = cache_->get(key)) return *hit;
      auto it = inflight_.find(key);
      if (it == inflight_.end()) {
        pending = promise.get_future().share();
        inflight_.emplace(key, pending);
        owner = true;
      } else {
        pending = it->second;
      }
    }
    if (!owner) return pending.get();

    try {
      auto reply = call_with_retries(template_name, request, accept);
      cache_->put(key, reply);
      promise.set_value(reply);
      erase_inflight(key);
      return reply;
    } catch (...) {
      promise.set_exception(std::current_exception());
      erase_inflight(key);
      throw;
    }
  }

 private:
  std::string call_with_retries(std::string_view template_name, const ChatRequest& request,
                                const Validator& accept) {
    std::string last_problem = "no attempt made";
    for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
      try {
        slots_.acquire();
        std::string reply;
        try {
          ++remote_calls_;
          reply = transport_->complete(request);
        } catch (...) {
          slots_.release();
          throw;
        }
        slots_.release();
        if (!accept || accept(reply)) return reply;
        last_problem = "unparseable reply: " + reply.substr(0, 200);
      } catch (const TransportError& e) {
        last_problem = e.what();
      }
    }
    throw Error(ErrorCode::kOracleUnavailable,
                std::string(template_name) + " request failed after " +
                    std::to_string(options_.max_retries + 1) + " attempts: " + last_problem);
  }

  void erase_inflight(const std::string& key) {
    std::lock_guard lock(inflight_mutex_);
    inflight_.erase(key);
  }

  std::shared_ptr<ChatTransport> transport_;
  LlmClientOptions options_;
  std::shared_ptr<ResponseCache> cache_;
  std::counting_semaphore<1024> slots_;
  std::atomic<std::size_t> remote_calls_{0};
  std::mutex inflight_mutex_;
  std::unordered_map<std::string, std::shared_future<std::string>> inflight_;
};

}  // namespace prefinfer

#endif  // PREFINFER_LLM_HPP_
