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

// Command-line front end: experiment runs, task generation, the session
// service and a terminal session.

#include <csignal>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prefinfer.hpp"

namespace {

using namespace prefinfer;

struct OracleFlags {
  std::string kind = "attribute";
  std::size_t proposals = 8;
  double epsilon = 0.0;
  std::string endpoint;
  std::string model;
  double temperature = 0.0;
  int max_retries = 2;
  int max_in_flight = 4;
  std::string cache;
  std::string api_key_env = "OPENAI_API_KEY";

  void add_to(CLI::App& app) {
    app.add_option("--oracle", kind, "Consistency oracle")->check(CLI::IsMember({"attribute", "llm"}));
    app.add_option("--proposals", proposals, "Questions proposed per turn")->check(CLI::PositiveNumber);
    app.add_option("--epsilon", epsilon, "Consistency smoothing in [0, 0.5)");
    app.add_option("--llm-endpoint", endpoint, "OpenAI-compatible chat-completions URL");
    app.add_option("--llm-model", model, "Model name for the llm oracle");
    app.add_option("--temperature", temperature, "Sampling temperature");
    app.add_option("--max-retries", max_retries, "Retries per llm request");
    app.add_option("--max-in-flight", max_in_flight, "Concurrent llm requests");
    app.add_option("--cache", cache, "Reply cache file");
    app.add_option("--api-key-env", api_key_env, "Environment variable holding the API key");
  }

  OracleConfig config() const {
    OracleConfig c;
    c.kind = kind == "llm" ? OracleKind::kLlm : OracleKind::kAttribute;
    c.proposal_count = proposals;
    c.smoothing_epsilon = epsilon;
    c.llm_endpoint = endpoint;
    c.llm_model_name = model;
    c.temperature = temperature;
    c.max_retries = max_retries;
    c.max_in_flight = max_in_flight;
    c.cache_path = cache;
    c.api_key_env = api_key_env;
    c.validate();
    return c;
  }
};

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!trim(item).empty()) out.push_back(trim(item));
  }
  return out;
}

std::vector<Task> load_or_demo(const std::string& path) {
  if (path.empty()) return {phone_case_task()};
  return load_tasks(path);
}

int cmd_run(const std::string& tasks_path, const std::string& policies_arg, const std::string& budgets_arg,
            const std::string& rewards_arg, std::uint64_t seed, const std::string& out_dir, bool early_stop,
            std::size_t parallel, bool allow_partial, const OracleFlags& flags) {
  const auto tasks = load_tasks(tasks_path);
  if (tasks.empty()) {
    export_results(SuiteResult{}, out_dir);
    std::cout << "no tasks in " << tasks_path << "; wrote empty results to " << out_dir << "\n";
    return 0;
  }
  const auto config = flags.config();
  std::vector<Policy> policies;
  for (const auto& name : split_csv(policies_arg)) {
    auto p = Policy::make(parse_policy_kind(name), config.proposal_count, seed);
    if (p.kind == PolicyKind::kVanilla && config.kind == OracleKind::kLlm) p.vanilla_prompt = true;
    policies.push_back(p);
  }
  std::vector<std::size_t> budgets;
  for (const auto& b : split_csv(budgets_arg)) budgets.push_back(std::stoul(b));
  std::vector<RewardKind> rewards;
  for (const auto& r : split_csv(rewards_arg)) {
    if (r == "binary") rewards.push_back(RewardKind::kBinary);
    else if (r == "soft") rewards.push_back(RewardKind::kSoft);
    else throw Error(ErrorCode::kConfig, "unknown reward kind '" + r + "'");
  }

  std::shared_ptr<LlmClient> client;
  UserFactory users = attribute_users();
  if (config.kind == OracleKind::kLlm) {
    client = make_llm_client(config);
    users = [client](const Task& t) { return SimulatedUser::llm(t.target(), client); };
  }
  auto oracle = make_oracle(config, client);
  const auto result =
      run_suite(tasks, policies, budgets, rewards, *oracle, users, {early_stop, parallel});
  export_results(result, out_dir);

  std::cout << aggregate_csv(result);
  std::cout << "episodes: " << result.episodes.size() << ", aborted: " << result.aborted() << "\n";
  for (const auto& e : result.episodes) {
    if (e.aborted) std::cerr << "aborted " << e.task_id << " / " << e.policy << ": " << e.diagnostic << "\n";
  }
  return result.aborted() > 0 && !allow_partial ? 2 : 0;
}

httplib::Server* g_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active preference inference by expected-entropy question selection"};
  app.require_subcommand(1);

  OracleFlags run_flags;
  std::string tasks_path, policies = "entropy,vanilla,random", budgets = "1,2,3,4", rewards = "binary,soft";
  std::string out_dir = "results";
  std::uint64_t seed = 0;
  bool early_stop = false, allow_partial = false;
  std::size_t parallel = 1;
  auto* run = app.add_subcommand("run", "Run an evaluation suite and export CSV curves");
  run->add_option("--tasks", tasks_path, "Task file (JSON)")->required();
  run->add_option("--policies", policies, "Comma-separated: entropy,kl,vanilla,random,fixed,react");
  run->add_option("--budgets", budgets, "Comma-separated question counts");
  run->add_option("--reward", rewards, "Comma-separated: binary,soft");
  run->add_option("--seed", seed, "Seed for the random policy");
  run->add_option("--out", out_dir, "Output directory");
  run->add_flag("--early-stop", early_stop, "Stop asking once one product remains");
  run->add_option("--parallel", parallel, "Concurrent episodes")->check(CLI::PositiveNumber);
  run->add_flag("--allow-partial", allow_partial, "Exit 0 even if some episodes aborted");
  run_flags.add_to(*run);

  std::size_t n_tasks = 150, n_products = 10, n_attributes = 5;
  std::uint64_t gen_seed = 0;
  std::string gen_out = "tasks.json";
  auto* gen = app.add_subcommand("gen-tasks", "Generate synthetic attribute tasks");
  gen->add_option("--n", n_tasks, "Number of tasks");
  gen->add_option("--products", n_products, "Products per task")->check(CLI::PositiveNumber);
  gen->add_option("--attributes", n_attributes, "Binary attributes per product")->check(CLI::Range(1, 62));
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--out", gen_out, "Output task file");

  OracleFlags serve_flags;
  int port = 8080;
  std::string serve_tasks, host = "127.0.0.1", event_log, static_dir;
  auto* serve = app.add_subcommand("serve", "Serve the session HTTP API");
  serve->add_option("--port", port, "Listen port");
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--tasks", serve_tasks, "Task file (defaults to the built-in phone-case task)");
  serve->add_option("--event-log", event_log, "Append session events to this file");
  serve->add_option("--static", static_dir, "Directory of frontend files to serve at /");
  serve_flags.add_to(*serve);

  OracleFlags inter_flags;
  std::string inter_tasks, task_id = "phone-case-demo";
  std::size_t budget = 3;
  auto* inter = app.add_subcommand("interactive", "Answer questions about a product you have in mind");
  inter->add_option("--task", task_id, "Task id");
  inter->add_option("--budget", budget, "Question budget");
  inter->add_option("--tasks", inter_tasks, "Task file (defaults to the built-in phone-case task)");
  inter_flags.add_to(*inter);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      return cmd_run(tasks_path, policies, budgets, rewards, seed, out_dir, early_stop, parallel, allow_partial,
                     run_flags);
    }
    if (*gen) {
      const auto tasks = generate_synthetic_tasks(n_tasks, n_products, n_attributes, gen_seed);
      save_tasks(tasks, gen_out);
      std::cout << "wrote " << tasks.size() << " tasks to " << gen_out << "\n";
      return 0;
    }
    if (*serve || *inter) {
      const auto& flags = *serve ? serve_flags : inter_flags;
      const auto config = flags.config();
      std::shared_ptr<Oracle> llm;
      if (config.kind == OracleKind::kLlm) llm = make_oracle(config);
      OracleConfig attr = config;
      attr.kind = OracleKind::kAttribute;
      SessionManager sessions(load_or_demo(*serve ? serve_tasks : inter_tasks), attr, llm,
                              *serve ? event_log : std::string{});
      if (*inter) {
        if (config.kind == OracleKind::kLlm) {
          std::cerr << "interactive mode uses the attribute oracle; --oracle llm is served over HTTP\n";
        }
        run_interactive(sessions, task_id, budget, std::cin, std::cout);
        return 0;
      }
      if (!event_log.empty() && std::filesystem::exists(event_log)) sessions.replay(event_log);
      httplib::Server server;
      install_routes(server, sessions);
      if (!static_dir.empty()) server.set_mount_point("/", static_dir);
      g_server = &server;
      std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
      std::cout << "listening on http://" << host << ":" << port << "\n" << std::flush;
      if (!server.listen(host, port)) {
        std::cerr << "cannot listen on " << host << ":" << port << "\n";
        return 1;
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 1;
  }
  return 0;
}
