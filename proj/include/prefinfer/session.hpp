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

#ifndef PREFINFER_SESSION_HPP_
#define PREFINFER_SESSION_HPP_

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "prefinfer/belief.hpp"
#include "prefinfer/error.hpp"
#include "prefinfer/objectives.hpp"
#include "prefinfer/oracle.hpp"
#include "prefinfer/tasks.hpp"

namespace prefinfer {

enum class SessionStatus { kActive, kFinished };

inline std::string_view to_string(SessionStatus s) { return s == SessionStatus::kActive ? "active" : "finished"; }

struct AnsweredTurn {
  std::string question;
  Answer answer = Answer::kNo;
  double info_gain = 0.0;
  bool uninformative = false;
};

struct PendingQuestion {
  Question question;
  ConsistencyVector cv;
  QuestionScore score;
};

// Read-only copy of a session taken under its lock.
struct SessionSnapshot {
  std::string session_id;
  std::string task_id;
  std::string oracle;
  std::size_t budget = 0;
  SessionStatus status = SessionStatus::kActive;
  std::vector<double> belief;
  std::vector<AnsweredTurn> turns;
  std::optional<PendingQuestion> pending;
  Conversation conversation;

  std::size_t remaining() const { return budget - turns.size(); }
};

struct QuestionOffer {
  bool no_question = false;  // nothing left to ask; the client should finish
  std::string question_text;
  double expected_entropy = 0.0;
  double expected_kl = 0.0;
  double p_yes = 0.0;
};

struct AnswerResult {
  std::vector<double> belief;
  double info_gain = 0.0;
  bool uninformative = false;
};

struct RankedProduct {
  std::size_t index = 0;
  std::string product_id;
  std::string title;
  double probability = 0.0;
};

inline Answer parse_answer_word(std::string_view word) {
  const auto w = to_lower(trim(word));
  if (w == "yes" || w == "y") return Answer::kYes;
  if (w == "no" || w == "n") return Answer::kNo;
  throw Error(ErrorCode::kValidation, "answer must be yes or no, got '" + std::string(word) + "'");
}

// In-memory elicitation sessions for a live answerer. Mutations on one
// session are serialized; a mutation arriving while another is in flight
// fails with kConflict instead of waiting. Each create/question/answer/finish
// is optionally appended to an event log that replay() can rebuild from.
class SessionManager {
 public:
  SessionManager(std::vector<Task> tasks, OracleConfig attribute_config = {},
                 std::shared_ptr<Oracle> llm_oracle = nullptr, std::filesystem::path event_log = {})
      : tasks_(std::move(tasks)), llm_oracle_(std::move(llm_oracle)), event_log_(std::move(event_log)) {
    attribute_config.kind = OracleKind::kAttribute;
    attribute_oracle_ = std::make_shared<AttributeOracle>(attribute_config);
  }

  const std::vector<Task>& tasks() const { return tasks_; }

  const Task* find_task(std::string_view id) const {
    for (const auto& t : tasks_) {
      if (t.task_id == id) return &t;
    }
    return nullptr;
  }

  SessionSnapshot create_session(const std::string& task_id, std::size_t budget,
                                 const std::string& oracle = "attribute") {
    auto s = std::make_shared<Session>();
    s->task = find_task(task_id);
    if (!s->task) throw Error(ErrorCode::kNotFound, "unknown task '" + task_id + "'");
    s->oracle_name = oracle;
    s->oracle = oracle_for(oracle);
    s->budget = budget;
    s->belief = uniform_prior(s->task->products.size());
    {
      std::unique_lock lock(sessions_mutex_);
      do {
        s->id = random_id();
      } while (sessions_.contains(s->id));
      sessions_.emplace(s->id, s);
    }
    log_event({{"event", "create"}, {"session_id", s->id}, {"task_id", task_id}, {"budget", budget}, {"oracle", oracle}});
    std::lock_guard lock(s->mutex);
    return snapshot(*s);
  }

  SessionSnapshot get(const std::string& id) const {
    auto s = lookup(id);
    std::lock_guard lock(s->mutex);
    return snapshot(*s);
  }

  QuestionOffer next_question(const std::string& id) {
    auto s = lookup(id);
    std::unique_lock lock(s->mutex, std::try_to_lock);
    if (!lock) throw busy(id);
    require_active(*s);
    if (s->pending) throw Error(ErrorCode::kConflict, "a question is already pending");
    if (s->turns.size() >= s->budget) throw Error(ErrorCode::kBudget, "question budget exhausted");
    if (support(s->belief).size() == 1) return {true, {}, 0.0, 0.0, 0.0};

    const auto& products = s->task->products;
    const auto batch = s->oracle->propose_questions(products, s->conversation, s->belief);
    if (batch.empty()) return {true, {}, 0.0, 0.0, 0.0};
    std::vector<ConsistencyVector> cvs;
    for (const auto& q : batch) cvs.push_back(s->oracle->consistency_vector(products, q));
    const auto scores = score_questions(s->belief, cvs);
    const auto pick = select_question(scores, Objective::kEntropy);
    s->pending = PendingQuestion{batch[pick], cvs[pick], scores[pick]};
    log_event({{"event", "question"}, {"session_id", id}, {"question", batch[pick].text}});
    return {false, batch[pick].text, scores[pick].expected_entropy, scores[pick].expected_kl, scores[pick].p_yes};
  }

  AnswerResult submit_answer(const std::string& id, std::string_view answer_word) {
    const auto answer = parse_answer_word(answer_word);
    auto s = lookup(id);
    std::unique_lock lock(s->mutex, std::try_to_lock);
    if (!lock) throw busy(id);
    require_active(*s);
    if (!s->pending) throw Error(ErrorCode::kConflict, "no question is pending");
    const auto result = apply_answer(*s, answer);
    log_event({{"event", "answer"}, {"session_id", id}, {"answer", std::string(to_string(answer))}});
    return result;
  }

  std::vector<RankedProduct> finish_session(const std::string& id) {
    auto s = lookup(id);
    std::unique_lock lock(s->mutex, std::try_to_lock);
    if (!lock) throw busy(id);
    require_active(*s);
    s->status = SessionStatus::kFinished;
    s->pending.reset();
    log_event({{"event", "finish"}, {"session_id", id}});
    return ranking(*s);
  }

  std::vector<RankedProduct> ranking(const std::string& id) const {
    auto s = lookup(id);
    std::lock_guard lock(s->mutex);
    return ranking(*s);
  }

  // Rebuilds sessions from an event log written by a previous manager over
  // the same tasks. Questions are re-scored by the oracle, so the attribute
  // oracle (or a warm llm cache) reproduces every belief exactly.
  void replay(const std::filesystem::path& log) {
    std::ifstream in(log, std::ios::binary);
    if (!in) throw Error(ErrorCode::kLoad, "cannot open event log " + log.string());
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto ev = nlohmann::json::parse(line);
      const auto kind = ev.at("event").get<std::string>();
      const auto id = ev.at("session_id").get<std::string>();
      if (kind == "create") {
        auto s = std::make_shared<Session>();
        s->id = id;
        s->task = find_task(ev.at("task_id").get<std::string>());
        if (!s->task) throw Error(ErrorCode::kNotFound, "event log names unknown task");
        s->oracle_name = ev.at("oracle").get<std::string>();
        s->oracle = oracle_for(s->oracle_name);
        s->budget = ev.at("budget").get<std::size_t>();
        s->belief = uniform_prior(s->task->products.size());
        std::unique_lock lock(sessions_mutex_);
        sessions_[id] = s;
        continue;
      }
      auto s = lookup(id);
      std::lock_guard lock(s->mutex);
      if (kind == "question") {
        Question q{ev.at("question").get<std::string>(), 0};
        auto cv = s->oracle->consistency_vector(s->task->products, q);
        const QuestionScore score{0, expected_entropy(s->belief, cv), expected_kl(s->belief, cv),
                                  answer_predictive(s->belief, cv).p_yes};
        s->pending = PendingQuestion{q, std::move(cv), score};
      } else if (kind == "answer") {
        apply_answer(*s, parse_answer_word(ev.at("answer").get<std::string>()));
      } else if (kind == "finish") {
        s->status = SessionStatus::kFinished;
        s->pending.reset();
      }
    }
  }

 private:
  struct Session {
    std::string id;
    const Task* task = nullptr;
    std::string oracle_name;
    std::shared_ptr<Oracle> oracle;
    std::size_t budget = 0;
    SessionStatus status = SessionStatus::kActive;
    BeliefState belief{std::vector<double>{1.0}};
    Conversation conversation;
    std::vector<AnsweredTurn> turns;
    std::optional<PendingQuestion> pending;
    mutable std::mutex mutex;
  };

  std::shared_ptr<Oracle> oracle_for(const std::string& name) const {
    if (name == "attribute") return attribute_oracle_;
    if (name == "llm") {
      if (!llm_oracle_) throw Error(ErrorCode::kValidation, "llm oracle is not configured on this service");
      return llm_oracle_;
    }
    throw Error(ErrorCode::kValidation, "oracle must be 'attribute' or 'llm'");
  }

  std::shared_ptr<Session> lookup(const std::string& id) const {
    std::shared_lock lock(sessions_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::kNotFound, "unknown session '" + id + "'");
    return it->second;
  }

  static Error busy(const std::string& id) {
    return Error(ErrorCode::kConflict, "session '" + id + "' is handling another request");
  }

  static void require_active(const Session& s) {
    if (s.status == SessionStatus::kFinished) throw Error(ErrorCode::kConflict, "session is finished");
  }

  // All-mass-eliminated answers keep the previous belief and flag the turn.
  static AnswerResult apply_answer(Session& s, Answer answer) {
    const auto& p = *s.pending;
    AnswerResult r;
    const auto before = s.belief;
    if (auto next = posterior_update(s.belief, p.cv, answer)) {
      s.belief = std::move(*next);
    } else {
      r.uninformative = true;
      std::clog << "session " << s.id << ": answer '" << to_string(answer) << "' to \"" << p.question.text
                << "\" contradicts every remaining product; turn marked uninformative\n";
    }
    r.info_gain = realized_info_gain(before, s.belief);
    r.belief.assign(s.belief.probs().begin(), s.belief.probs().end());
    s.conversation.turns.push_back({p.question, answer});
    s.turns.push_back({p.question.text, answer, r.info_gain, r.uninformative});
    s.pending.reset();
    return r;
  }

  static SessionSnapshot snapshot(const Session& s) {
    SessionSnapshot out;
    out.session_id = s.id;
    out.task_id = s.task->task_id;
    out.oracle = s.oracle_name;
    out.budget = s.budget;
    out.status = s.status;
    out.belief.assign(s.belief.probs().begin(), s.belief.probs().end());
    out.turns = s.turns;
    out.pending = s.pending;
    out.conversation = s.conversation;
    return out;
  }

  static std::vector<RankedProduct> ranking(const Session& s) {
    std::vector<RankedProduct> out;
    for (std::size_t i = 0; i < s.task->products.size(); ++i) {
      const auto& p = s.task->products[i];
      out.push_back({i, p.id, p.title, s.belief[i]});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const RankedProduct& a, const RankedProduct& b) { return a.probability > b.probability; });
    return out;
  }

  static std::string random_id() {
    static thread_local std::random_device rd;
    static constexpr char kHex[] = "0123456789abcdef";
    std::string id;
    for (int i = 0; i < 8; ++i) {
      auto word = rd();
      for (int j = 0; j < 4; ++j) {
        id += kHex[word & 0xf];
        word >>= 4;
      }
    }
    return id;
  }

  void log_event(const nlohmann::json& ev) {
    if (event_log_.empty()) return;
    std::lock_guard lock(log_mutex_);
    std::ofstream out(event_log_, std::ios::binary | std::ios::app);
    out << ev.dump() << '\n';
  }

  std::vector<Task> tasks_;
  std::shared_ptr<Oracle> attribute_oracle_;
  std::shared_ptr<Oracle> llm_oracle_;
  std::filesystem::path event_log_;
  std::mutex log_mutex_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace prefinfer

#endif  // PREFINFER_SESSION_HPP_
