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

#ifndef PREFINFER_HARNESS_HPP_
#define PREFINFER_HARNESS_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <regex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "prefinfer/belief.hpp"
#include "prefinfer/error.hpp"
#include "prefinfer/objectives.hpp"
#include "prefinfer/oracle.hpp"
#include "prefinfer/tasks.hpp"
#include "prefinfer/user_sim.hpp"

namespace prefinfer {

enum class PolicyKind { kEntropyGreedy, kKlGreedy, kVanilla, kRandom, kFixedOrder, kReact };

inline std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::kEntropyGreedy: return "entropy_greedy";
    case PolicyKind::kKlGreedy: return "kl_greedy";
    case PolicyKind::kVanilla: return "vanilla";
    case PolicyKind::kRandom: return "random";
    case PolicyKind::kFixedOrder: return "fixed_order";
    case PolicyKind::kReact: return "react";
  }
  return "unknown";
}

inline PolicyKind parse_policy_kind(std::string_view name) {
  if (name == "entropy" || name == "entropy_greedy") return PolicyKind::kEntropyGreedy;
  if (name == "kl" || name == "kl_greedy") return PolicyKind::kKlGreedy;
  if (name == "vanilla") return PolicyKind::kVanilla;
  if (name == "random") return PolicyKind::kRandom;
  if (name == "fixed" || name == "fixed_order") return PolicyKind::kFixedOrder;
  if (name == "react") return PolicyKind::kReact;
  throw Error(ErrorCode::kConfig, "unknown policy '" + std::string(name) + "'");
}

// How each turn's question is picked from the proposal batch.
//
//   entropy_greedy / kl_greedy  best of `proposal_count` proposals
//   vanilla                     the single first proposal (proposal_count 1),
//                               or the vanilla seller prompt when
//                               vanilla_prompt is set and the oracle is llm
//   random                      uniform over the batch, seeded per task
//   fixed_order                 alphabetically first question text
//   react                       llm agent loop, see run_react_episode
struct Policy {
  PolicyKind kind = PolicyKind::kEntropyGreedy;
  std::size_t proposal_count = 8;
  std::uint64_t rng_seed = 0;
  bool vanilla_prompt = false;

  static Policy make(PolicyKind kind, std::size_t proposal_count = 8, std::uint64_t seed = 0) {
    Policy p{kind, proposal_count, seed, false};
    if (kind == PolicyKind::kVanilla) p.proposal_count = 1;
    return p;
  }

  std::string name() const { return std::string(to_string(kind)); }
};

struct TurnRecord {
  std::string question;
  Answer answer = Answer::kNo;
  std::size_t candidates = 0;
  double expected_entropy = 0.0;
  double expected_kl = 0.0;
  double p_yes = 0.0;
  double info_gain = 0.0;
  double entropy_after = 0.0;
  std::size_t support_after = 0;
  bool uninformative = false;
};

struct EpisodeRecord {
  std::string task_id;
  std::string policy;
  std::size_t question_budget = 0;
  std::vector<TurnRecord> turns;
  // Index t holds the state after t questions, for t = 0..question_budget;
  // entries past an early stop repeat the final state.
  std::vector<double> binary_reward_at;
  std::vector<double> soft_reward_at;
  std::vector<double> entropy_at;
  std::vector<std::size_t> support_at;
  std::vector<double> final_belief;
  std::size_t final_support = 0;
  double expected_binary_reward = 0.0;
  double expected_soft_reward = 0.0;
  bool aborted = false;
  std::string diagnostic;

  std::size_t budget_used() const { return turns.size(); }
};

struct EpisodeOptions {
  std::size_t question_budget = 0;
  bool early_stop = true;  // stop once a single product remains
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Tracks the belief and the per-turn-count metrics of one episode.
class EpisodeState {
 public:
  EpisodeState(const Task& task, std::string policy, std::size_t budget)
      : task_(task), belief_(uniform_prior(task.products.size())) {
    rec_.task_id = task.task_id;
    rec_.policy = std::move(policy);
    rec_.question_budget = budget;
    snapshot();
  }

  const BeliefState& belief() const { return belief_; }
  Conversation& conversation() { return conversation_; }
  EpisodeRecord& record() { return rec_; }

  void apply(const Question& q, const ConsistencyVector& cv, Answer answer, TurnRecord turn) {
    turn.question = q.text;
    turn.answer = answer;
    const auto before = belief_;
    if (auto next = posterior_update(belief_, cv, answer)) {
      belief_ = std::move(*next);
    } else {
      turn.uninformative = true;
    }
    turn.info_gain = realized_info_gain(before, belief_);
    turn.entropy_after = entropy(belief_);
    turn.support_after = support(belief_).size();
    conversation_.turns.push_back({q, answer});
    rec_.turns.push_back(std::move(turn));
    snapshot();
  }

  EpisodeRecord finish() {
    while (rec_.entropy_at.size() < rec_.question_budget + 1) snapshot();
    rec_.final_belief.assign(belief_.probs().begin(), belief_.probs().end());
    rec_.final_support = support(belief_).size();
    rec_.expected_binary_reward = rec_.binary_reward_at.back();
    rec_.expected_soft_reward = rec_.soft_reward_at.back();
    return std::move(rec_);
  }

  EpisodeRecord abort(const std::string& why) {
    rec_.aborted = true;
    rec_.diagnostic = why;
    return finish();
  }

 private:
  void snapshot() {
    if (rec_.entropy_at.size() > rec_.question_budget) return;
    rec_.binary_reward_at.push_back(expected_reward(task_, belief_, {RewardKind::kBinary}));
    rec_.soft_reward_at.push_back(expected_reward(task_, belief_, {RewardKind::kSoft}));
    rec_.entropy_at.push_back(entropy(belief_));
    rec_.support_at.push_back(support(belief_).size());
  }

  const Task& task_;
  BeliefState belief_;
  Conversation conversation_;
  EpisodeRecord rec_;
};

inline std::size_t fixed_order_pick(std::span<const Question> qs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < qs.size(); ++i) {
    if (normalize_question(qs[i].text) < normalize_question(qs[best].text)) best = i;
  }
  return best;
}

}  // namespace detail

// One question-asking episode against a simulated user. Oracle and user
// failures end the episode early with `aborted` set.
inline EpisodeRecord run_episode(const Task& task, const Policy& policy, const SimulatedUser& user,
                                 Oracle& oracle, const EpisodeOptions& options) {
  if (policy.kind == PolicyKind::kReact) {
    throw Error(ErrorCode::kConfig, "react episodes run through run_react_episode");
  }
  detail::EpisodeState state(task, policy.name(), options.question_budget);
  std::mt19937_64 rng(policy.rng_seed ^ detail::fnv1a(task.task_id));
  auto* llm = dynamic_cast<LlmOracle*>(&oracle);
  try {
    for (std::size_t t = 0; t < options.question_budget; ++t) {
      if (options.early_stop && support(state.belief()).size() == 1) break;

      std::vector<Question> batch;
      if (policy.kind == PolicyKind::kVanilla && policy.vanilla_prompt && llm) {
        batch.push_back(llm->vanilla_question(task.products, state.conversation()));
      } else {
        batch = oracle.propose_questions(task.products, state.conversation(), state.belief(),
                                         policy.proposal_count);
      }
      if (batch.empty()) break;

      std::vector<ConsistencyVector> cvs;
      cvs.reserve(batch.size());
      for (const auto& q : batch) cvs.push_back(oracle.consistency_vector(task.products, q));
      const auto scores = score_questions(state.belief(), cvs);

      std::size_t pick = 0;
      switch (policy.kind) {
        case PolicyKind::kEntropyGreedy:
        case PolicyKind::kVanilla: pick = select_question(scores, Objective::kEntropy); break;
        case PolicyKind::kKlGreedy: pick = select_question(scores, Objective::kKl); break;
        case PolicyKind::kRandom: pick = uniform_index(rng, batch.size()); break;
        case PolicyKind::kFixedOrder: pick = detail::fixed_order_pick(batch); break;
        case PolicyKind::kReact: break;
      }

      const auto answer = user.simulate_answer(batch[pick]);
      TurnRecord turn;
      turn.candidates = batch.size();
      turn.expected_entropy = scores[pick].expected_entropy;
      turn.expected_kl = scores[pick].expected_kl;
      turn.p_yes = scores[pick].p_yes;
      state.apply(batch[pick], cvs[pick], answer, std::move(turn));
    }
  } catch (const Error& e) {
    return state.abort(std::string(to_string(e.code())) + ": " + e.what());
  }
  return state.finish();
}

// ---- ReAct baseline -----------------------------------------------------

struct ReactAction {
  std::string name;
  std::string argument;
};

// First "name[argument]" action in a model reply, with or without a
// leading "Action:".
inline std::optional<ReactAction> parse_react_action(std::string_view reply) {
  static const std::regex kAction(
      R"((think|ask_question|get_products|show_products|choose_products?)\s*\[([^\n]*)\])");
  std::smatch m;
  const std::string text(reply);
  if (!std::regex_search(text, m, kAction)) return std::nullopt;
  return ReactAction{m[1].str(), trim(m[2].str())};
}

// Drives the ReAct prompt as a transcript. Every ask_question is answered by
// the user and scored by the oracle, so the final belief comes from the same
// posterior machinery as the other policies. Once the budget is spent the
// transcript is told no more questions can be asked; a model that keeps
// asking is forced to choose.
inline EpisodeRecord run_react_episode(const Task& task, const SimulatedUser& user, LlmOracle& oracle,
                                       std::size_t question_budget) {
  detail::EpisodeState state(task, std::string(to_string(PolicyKind::kReact)), question_budget);
  auto& client = oracle.client();
  const auto prompt = oracle.catalog().react.render({{"instruction", "i want to buy a " + task.product_type}});
  std::string transcript;
  static constexpr std::string_view kNoMore = "\n\nIMPORTANT: No more question can be asked.";
  if (question_budget == 0) transcript += kNoMore;

  std::size_t asked = 0;
  int refusals = 0;
  const std::size_t max_steps = 3 * question_budget + 8;
  try {
    for (std::size_t step = 0; step < max_steps; ++step) {
      const auto reply = client.complete(oracle.catalog().react.name(),
                                         client.make_request({{"user", prompt + transcript + "\n\nAction:"}}),
                                         [](const std::string& r) { return parse_react_action(r).has_value(); });
      const auto action = *parse_react_action(reply);
      std::string observation;
      bool done = false;
      if (action.name == "think") {
        observation = "OK.";
      } else if (action.name == "get_products" || action.name == "show_products") {
        observation = "\n" + format_products(task.products);
      } else if (action.name == "ask_question") {
        if (asked >= question_budget) {
          observation = "No more question can be asked.";
          if (++refusals >= 2) done = true;
        } else {
          Question q{action.argument, 0};
          const auto cv = oracle.consistency_vector(task.products, q);
          const auto answer = user.simulate_answer(q);
          TurnRecord turn;
          turn.candidates = 1;
          turn.expected_entropy = expected_entropy(state.belief(), cv);
          turn.expected_kl = expected_kl(state.belief(), cv);
          turn.p_yes = answer_predictive(state.belief(), cv).p_yes;
          state.apply(q, cv, answer, std::move(turn));
          ++asked;
          observation = answer == Answer::kYes ? "Answer: Yes." : "Answer: No.";
        }
      } else {
        observation = "OK.";
        done = true;
      }
      transcript += "\n\nAction: " + action.name + "[" + action.argument + "]\nObservation: " + observation;
      if (done) return state.finish();
      if (action.name == "ask_question" && asked == question_budget && refusals == 0) transcript += kNoMore;
    }
  } catch (const Error& e) {
    return state.abort(std::string(to_string(e.code())) + ": " + e.what());
  }
  state.record().diagnostic = "step limit reached; choice forced";
  return state.finish();
}

// ---- suites -------------------------------------------------------------

struct RewardRow {
  std::string policy;
  std::size_t k = 0;
  RewardKind reward_kind = RewardKind::kBinary;
  double mean = 0.0;
  double ci_halfwidth = 0.0;
  std::size_t n_tasks = 0;
};

struct InfoGainRow {
  std::string policy;
  std::size_t turn = 0;  // 1-based
  double mean = 0.0;
  double ci_halfwidth = 0.0;
  std::size_t n_tasks = 0;
};

struct SuiteResult {
  std::vector<EpisodeRecord> episodes;  // task-major, then policy order
  std::vector<RewardRow> rewards;
  std::vector<InfoGainRow> info_gain;
  std::size_t completed = 0;

  double completeness() const {
    return episodes.empty() ? 1.0 : static_cast<double>(completed) / static_cast<double>(episodes.size());
  }
  std::size_t aborted() const { return episodes.size() - completed; }

  const RewardRow* reward(std::string_view policy, std::size_t k, RewardKind kind) const {
    for (const auto& r : rewards) {
      if (r.policy == policy && r.k == k && r.reward_kind == kind) return &r;
    }
    return nullptr;
  }
  const InfoGainRow* gain(std::string_view policy, std::size_t turn) const {
    for (const auto& r : info_gain) {
      if (r.policy == policy && r.turn == turn) return &r;
    }
    return nullptr;
  }
};

struct SuiteOptions {
  bool early_stop = false;
  std::size_t parallel = 1;
};

using UserFactory = std::function<SimulatedUser(const Task&)>;

inline UserFactory attribute_users() {
  return [](const Task& t) { return SimulatedUser::attribute(t.products, t.target_index); };
}

// Mean and normal-approximation 95% half-width, 1.96 sd / sqrt(n).
struct MeanCi {
  double mean = 0.0;
  double halfwidth = 0.0;
};

inline MeanCi mean_ci(std::span<const double> xs) {
  MeanCi out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  out.halfwidth = 1.96 * sd / std::sqrt(static_cast<double>(xs.size()));
  return out;
}

// Runs every (task, policy) once with budget max(budgets) and reads the
// curves off each episode's per-turn-count metrics. Aggregates cover
// completed episodes only.
inline SuiteResult run_suite(std::span<const Task> tasks, std::span<const Policy> policies,
                             std::span<const std::size_t> budgets, std::span<const RewardKind> reward_kinds,
                             Oracle& oracle, const UserFactory& make_user, const SuiteOptions& options = {}) {
  if (tasks.empty() || policies.empty() || budgets.empty() || reward_kinds.empty()) {
    throw Error(ErrorCode::kConfig, "suite needs tasks, policies, budgets and reward kinds");
  }
  const auto max_budget = *std::max_element(budgets.begin(), budgets.end());
  const std::size_t n_jobs = tasks.size() * policies.size();
  SuiteResult result;
  result.episodes.resize(n_jobs);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job = next++; job < n_jobs; job = next++) {
      const auto& task = tasks[job / policies.size()];
      const auto& policy = policies[job % policies.size()];
      EpisodeRecord rec;
      try {
        const auto user = make_user(task);
        if (policy.kind == PolicyKind::kReact) {
          auto* llm = dynamic_cast<LlmOracle*>(&oracle);
          if (!llm) throw Error(ErrorCode::kConfig, "react policy requires the llm oracle");
          rec = run_react_episode(task, user, *llm, max_budget);
        } else {
          rec = run_episode(task, policy, user, oracle, {max_budget, options.early_stop});
        }
      } catch (const Error& e) {
        rec.task_id = task.task_id;
        rec.policy = policy.name();
        rec.question_budget = max_budget;
        rec.aborted = true;
        rec.diagnostic = std::string(to_string(e.code())) + ": " + e.what();
      }
      result.episodes[job] = std::move(rec);
    }
  };
  const auto n_threads = std::clamp<std::size_t>(options.parallel, 1, n_jobs);
  {
    std::vector<std::jthread> pool;
    for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(worker);
    worker();
  }

  for (const auto& e : result.episodes) result.completed += e.aborted ? 0 : 1;

  for (const auto& policy : policies) {
    const auto name = policy.name();
    std::vector<const EpisodeRecord*> done;
    for (const auto& e : result.episodes) {
      if (e.policy == name && !e.aborted) done.push_back(&e);
    }
    for (auto k : budgets) {
      for (auto kind : reward_kinds) {
        std::vector<double> xs;
        for (const auto* e : done) {
          xs.push_back(kind == RewardKind::kBinary ? e->binary_reward_at.at(k) : e->soft_reward_at.at(k));
        }
        const auto m = mean_ci(xs);
        result.rewards.push_back({name, k, kind, m.mean, m.halfwidth, xs.size()});
      }
    }
    for (std::size_t turn = 1; turn <= max_budget; ++turn) {
      std::vector<double> xs;
      for (const auto* e : done) xs.push_back(turn <= e->turns.size() ? e->turns[turn - 1].info_gain : 0.0);
      const auto m = mean_ci(xs);
      result.info_gain.push_back({name, turn, m.mean, m.halfwidth, xs.size()});
    }
  }
  return result;
}

// ---- export -------------------------------------------------------------

inline nlohmann::json to_json(const EpisodeRecord& e) {
  nlohmann::json turns = nlohmann::json::array();
  for (const auto& t : e.turns) {
    turns.push_back({{"question", t.question},
                     {"answer", std::string(to_string(t.answer))},
                     {"candidates", t.candidates},
                     {"expected_entropy", t.expected_entropy},
                     {"expected_kl", t.expected_kl},
                     {"p_yes", t.p_yes},
                     {"info_gain", t.info_gain},
                     {"entropy_after", t.entropy_after},
                     {"support_after", t.support_after},
                     {"uninformative", t.uninformative}});
  }
  return {{"task_id", e.task_id},
          {"policy", e.policy},
          {"question_budget", e.question_budget},
          {"budget_used", e.budget_used()},
          {"turns", turns},
          {"binary_reward_at", e.binary_reward_at},
          {"soft_reward_at", e.soft_reward_at},
          {"entropy_at", e.entropy_at},
          {"support_at", e.support_at},
          {"final_support", e.final_support},
          {"expected_binary_reward", e.expected_binary_reward},
          {"expected_soft_reward", e.expected_soft_reward},
          {"aborted", e.aborted},
          {"diagnostic", e.diagnostic}};
}

inline std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10f", x);
  return buf;
}

inline std::string aggregate_csv(const SuiteResult& r) {
  std::string out = "policy,k,reward_kind,mean,ci_halfwidth,n_tasks\n";
  for (const auto& row : r.rewards) {
    out += row.policy + "," + std::to_string(row.k) + "," + std::string(to_string(row.reward_kind)) + "," +
           format_number(row.mean) + "," + format_number(row.ci_halfwidth) + "," + std::to_string(row.n_tasks) + "\n";
  }
  return out;
}

inline std::string info_gain_csv(const SuiteResult& r) {
  std::string out = "policy,turn,mean,ci_halfwidth,n_tasks\n";
  for (const auto& row : r.info_gain) {
    out += row.policy + "," + std::to_string(row.turn) + "," + format_number(row.mean) + "," +
           format_number(row.ci_halfwidth) + "," + std::to_string(row.n_tasks) + "\n";
  }
  return out;
}

// Writes episodes.jsonl, aggregate.csv and info_gain.csv into `dir`.
inline void export_results(const SuiteResult& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  auto write = [&dir](const std::string& name, const std::string& body) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    out << body;
    if (!out) throw Error(ErrorCode::kExport, "cannot write " + (dir / name).string());
  };
  std::string lines;
  for (const auto& e : r.episodes) lines += to_json(e).dump() + "\n";
  write("episodes.jsonl", lines);
  write("aggregate.csv", aggregate_csv(r));
  write("info_gain.csv", info_gain_csv(r));
}

}  // namespace prefinfer

#endif  // PREFINFER_HARNESS_HPP_
