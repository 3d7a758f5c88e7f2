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

#ifndef PREFINFER_SERVICE_HPP_
#define PREFINFER_SERVICE_HPP_

#include <functional>
#include <iostream>
#include <istream>
#include <ostream>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "prefinfer/error.hpp"
#include "prefinfer/session.hpp"

namespace prefinfer {

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kConflict:
    case ErrorCode::kBudget: return 409;
    case ErrorCode::kValidation: return 422;
    case ErrorCode::kOracleUnavailable:
    case ErrorCode::kScoreUnavailable: return 503;
    default: return 500;
  }
}

inline nlohmann::json to_json(const SessionSnapshot& s, const Task& task) {
  nlohmann::json turns = nlohmann::json::array();
  for (const auto& t : s.turns) {
    turns.push_back({{"question", t.question}, {"answer", std::string(to_string(t.answer))},
                     {"info_gain", t.info_gain}, {"uninformative", t.uninformative}});
  }
  nlohmann::json products = nlohmann::json::array();
  for (const auto& p : task.products) products.push_back({{"id", p.id}, {"title", p.title}});
  nlohmann::json out = {{"session_id", s.session_id},
                        {"task_id", s.task_id},
                        {"oracle", s.oracle},
                        {"status", std::string(to_string(s.status))},
                        {"budget", s.budget},
                        {"remaining", s.remaining()},
                        {"belief", s.belief},
                        {"products", products},
                        {"turns", turns},
                        {"pending_question", nullptr}};
  if (s.pending) {
    out["pending_question"] = {{"question_text", s.pending->question.text},
                               {"expected_entropy", s.pending->score.expected_entropy},
                               {"expected_kl", s.pending->score.expected_kl},
                               {"p_yes", s.pending->score.p_yes}};
  }
  return out;
}

inline nlohmann::json to_json(const std::vector<RankedProduct>& ranking) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : ranking) {
    out.push_back({{"index", r.index}, {"product_id", r.product_id}, {"title", r.title}, {"probability", r.probability}});
  }
  return out;
}

// Registers the /v1 JSON API on `server`. Errors are {code, message}.
inline void install_routes(httplib::Server& server, SessionManager& sessions) {
  using httplib::Request;
  using httplib::Response;

  auto guarded = [](std::function<nlohmann::json(const Request&, Response&)> handler) {
    return [handler = std::move(handler)](const Request& req, Response& res) {
      nlohmann::json body;
      try {
        body = handler(req, res);
        if (res.status == -1) res.status = 200;
      } catch (const Error& e) {
        res.status = http_status(e.code());
        body = {{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
      } catch (const nlohmann::json::exception& e) {
        res.status = 422;
        body = {{"code", "validation_error"}, {"message", e.what()}};
      }
      res.set_header("Access-Control-Allow-Origin", "*");
      res.set_content(body.dump(), "application/json");
    };
  };

  auto parse_body = [](const Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    auto j = nlohmann::json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::kValidation, "request body must be a JSON object");
    return j;
  };

  server.Options(R"(/v1/.*)", [](const Request&, Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  server.Get("/v1/tasks", guarded([&sessions](const Request&, Response&) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& t : sessions.tasks()) {
      nlohmann::json products = nlohmann::json::array();
      for (const auto& p : t.products) {
        products.push_back({{"id", p.id}, {"title", p.title}, {"description", p.description}});
      }
      out.push_back({{"task_id", t.task_id}, {"product_type", t.product_type}, {"products", products}});
    }
    return out;
  }));

  server.Post("/v1/sessions", guarded([&sessions, parse_body](const Request& req, Response& res) {
    const auto body = parse_body(req);
    if (!body.contains("task_id") || !body["task_id"].is_string()) {
      throw Error(ErrorCode::kValidation, "task_id (string) is required");
    }
    const auto budget = body.value("budget", 3);
    if (budget < 0) throw Error(ErrorCode::kValidation, "budget must be nonnegative");
    const auto snap = sessions.create_session(body["task_id"].get<std::string>(), static_cast<std::size_t>(budget),
                                              body.value("oracle", std::string("attribute")));
    res.status = 201;
    return nlohmann::json{{"session_id", snap.session_id}, {"belief", snap.belief}};
  }));

  server.Get(R"(/v1/sessions/([0-9a-f]+))", guarded([&sessions](const Request& req, Response&) {
    const auto snap = sessions.get(req.matches[1]);
    return to_json(snap, *sessions.find_task(snap.task_id));
  }));

  server.Post(R"(/v1/sessions/([0-9a-f]+)/question)", guarded([&sessions](const Request& req, Response&) {
    const auto offer = sessions.next_question(req.matches[1]);
    if (offer.no_question) return nlohmann::json{{"no_question", true}, {"question_text", nullptr}};
    return nlohmann::json{{"no_question", false},
                          {"question_text", offer.question_text},
                          {"expected_entropy", offer.expected_entropy},
                          {"expected_kl", offer.expected_kl},
                          {"p_yes", offer.p_yes}};
  }));

  server.Post(R"(/v1/sessions/([0-9a-f]+)/answer)", guarded([&sessions, parse_body](const Request& req, Response&) {
    const auto body = parse_body(req);
    if (!body.contains("answer") || !body["answer"].is_string()) {
      throw Error(ErrorCode::kValidation, "answer must be \"yes\" or \"no\"");
    }
    const auto r = sessions.submit_answer(req.matches[1], body["answer"].get<std::string>());
    return nlohmann::json{{"belief", r.belief}, {"info_gain", r.info_gain}, {"uninformative_flag", r.uninformative}};
  }));

  server.Post(R"(/v1/sessions/([0-9a-f]+)/finish)", guarded([&sessions](const Request& req, Response&) {
    return nlohmann::json{{"ranking", to_json(sessions.finish_session(req.matches[1]))}};
  }));
}

// Terminal version of the session loop: asks up to `budget` questions,
// reading y/n lines from `in`, then prints the ranking. Returns the ranking.
inline std::vector<RankedProduct> run_interactive(SessionManager& sessions, const std::string& task_id,
                                                  std::size_t budget, std::istream& in, std::ostream& out) {
  const auto snap = sessions.create_session(task_id, budget);
  const auto& task = *sessions.find_task(task_id);
  out << "Think of one of these " << task.products.size() << " products:\n"
      << format_products(task.products) << "\n\n";
  for (std::size_t turn = 0; turn < budget; ++turn) {
    const auto offer = sessions.next_question(snap.session_id);
    if (offer.no_question) break;
    char buf[96];
    std::snprintf(buf, sizeof buf, " [expected entropy %.3f nats]", offer.expected_entropy);
    out << "Q" << (turn + 1) << ": " << offer.question_text << buf << "\n";
    while (true) {
      out << "(y/n) > " << std::flush;
      std::string line;
      if (!std::getline(in, line)) {
        out << "\n";
        return sessions.finish_session(snap.session_id);
      }
      try {
        const auto r = sessions.submit_answer(snap.session_id, line);
        std::snprintf(buf, sizeof buf, "info gain %.3f nats", r.info_gain);
        out << buf << (r.uninformative ? " (answer contradicts every product; ignored)" : "") << "\n";
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kValidation) throw;
        out << "please answer y or n\n";
      }
    }
  }
  const auto ranking = sessions.finish_session(snap.session_id);
  out << "\nRanking:\n";
  for (const auto& r : ranking) {
    if (r.probability <= 0.0) continue;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%6.3f", r.probability);
    out << "  " << buf << "  " << r.title << "\n";
  }
  return ranking;
}

}  // namespace prefinfer

#endif  // PREFINFER_SERVICE_HPP_
