#include "arbor/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "arbor/hash.hpp"
#include "arbor/log.hpp"

namespace arbor::bench {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trim_copy(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

// ------------------------------------------------------------------ problems

nlohmann::ordered_json problem_to_json(const Problem& problem) {
  nlohmann::ordered_json j;
  j["id"] = problem.id;
  j["description"] = problem.description;
  if (problem.entry_point) j["entry_point"] = *problem.entry_point;
  j["judging_style"] = to_string(problem.judging_style);
  j["solution_language"] = problem.solution_language;
  auto tests = [](const std::vector<TestCase>& ts) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const TestCase& t : ts)
      arr.push_back({{"input", t.input}, {"expected_output", t.expected_output}});
    return arr;
  };
  j["visible_tests"] = tests(problem.visible_tests);
  j["hidden_tests"] = tests(problem.hidden_tests);
  j["source_tag"] = problem.source_tag;
  return j;
}

Problem problem_from_json(const nlohmann::json& j) {
  Problem p;
  p.id = j.at("id").get<std::string>();
  p.description = j.at("description").get<std::string>();
  if (j.contains("entry_point") && !j["entry_point"].is_null())
    p.entry_point = j["entry_point"].get<std::string>();
  p.judging_style = judging_style_from_string(j.at("judging_style").get<std::string>());
  p.solution_language = j.value("solution_language", std::string("python"));
  auto tests = [](const nlohmann::json& arr) {
    std::vector<TestCase> out;
    for (const auto& t : arr)
      out.push_back({t.at("input").get<std::string>(),
                     t.at("expected_output").get<std::string>()});
    return out;
  };
  p.visible_tests = tests(j.at("visible_tests"));
  if (j.contains("hidden_tests")) p.hidden_tests = tests(j["hidden_tests"]);
  p.source_tag = j.value("source_tag", std::string("unknown"));
  return p;
}

std::vector<Problem> load_problems(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open problems file: " + path);
  std::vector<Problem> out;
  std::set<std::string> ids;
  std::string line;
  int record = 0;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_copy(line).empty()) continue;
    ++record;
    Problem p;
    try {
      p = problem_from_json(nlohmann::json::parse(line));
      p.validate();
    } catch (const Error& e) {
      throw Error(ErrorKind::parse, path + ": record " + std::to_string(record) +
                                        " (line " + std::to_string(line_no) +
                                        "): " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse, path + ": record " + std::to_string(record) +
                                        " (line " + std::to_string(line_no) +
                                        "): " + e.what());
    }
    if (!ids.insert(p.id).second)
      throw Error(ErrorKind::parse, path + ": record " + std::to_string(record) +
                                        ": duplicate problem id " + p.id);
    out.push_back(std::move(p));
  }
  if (out.empty()) throw Error(ErrorKind::parse, path + ": no problems");
  return out;
}

void save_problems(const std::vector<Problem>& problems, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write problems file: " + path);
  for (const Problem& p : problems) out << problem_to_json(p).dump() << "\n";
}

// ------------------------------------------------------------------ settings

RunSettings::RunSettings() {
  thinker.role = agents::AgentRole::thinker;
  solver.role = agents::AgentRole::solver;
  debugger.role = agents::AgentRole::debugger;
  critic.role = agents::AgentRole::critic;
}

namespace {

void read_agent(const nlohmann::json& j, agents::AgentConfig* agent,
                bool* solver_temp_explicit = nullptr) {
  if (j.contains("model_id")) agent->model_id = j["model_id"].get<std::string>();
  if (j.contains("temperature")) {
    agent->temperature = j["temperature"].get<double>();
    if (solver_temp_explicit) *solver_temp_explicit = true;
  }
  if (j.contains("max_output_tokens"))
    agent->max_output_tokens = j["max_output_tokens"].get<int>();
  if (j.contains("max_strategies_cap"))
    agent->max_strategies_cap = j["max_strategies_cap"].get<int>();
  if (j.contains("max_reflections_cap"))
    agent->max_reflections_cap = j["max_reflections_cap"].get<int>();
}

nlohmann::ordered_json agent_to_json(const agents::AgentConfig& agent, bool caps) {
  nlohmann::ordered_json j;
  j["model_id"] = agent.model_id;
  j["temperature"] = agent.temperature;
  j["max_output_tokens"] = agent.max_output_tokens;
  if (caps) {
    j["max_strategies_cap"] = agent.max_strategies_cap;
    j["max_reflections_cap"] = agent.max_reflections_cap;
  }
  return j;
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw Error(ErrorKind::config, "key " + key + ": expected a boolean, got '" + value + "'");
}

long long parse_int(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (...) {
    throw Error(ErrorKind::config, "key " + key + ": expected an integer, got '" + value + "'");
  }
}

double parse_double(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (...) {
    throw Error(ErrorKind::config, "key " + key + ": expected a number, got '" + value + "'");
  }
}

}  // namespace

RunSettings RunSettings::from_json(const nlohmann::json& j) {
  RunSettings s;
  bool solver_temp_explicit = false;
  if (j.contains("policy"))
    s.search.policy = search::policy_from_string(j["policy"].get<std::string>());
  if (j.contains("budget")) s.search.budget = j["budget"].get<int>();
  if (j.contains("max_depth")) s.search.max_depth = j["max_depth"].get<int>();
  if (j.contains("max_width")) s.search.max_width = j["max_width"].get<int>();
  if (j.contains("verification_enabled"))
    s.search.verification_enabled = j["verification_enabled"].get<bool>();
  if (j.contains("abort_enabled")) s.search.abort_enabled = j["abort_enabled"].get<bool>();
  if (j.contains("critic_scoring_enabled"))
    s.search.critic_scoring_enabled = j["critic_scoring_enabled"].get<bool>();
  if (j.contains("seed")) s.search.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("backend")) s.backend = j["backend"].get<std::string>();
  if (j.contains("transcript")) s.transcript_path = j["transcript"].get<std::string>();
  if (j.contains("record")) s.record_path = j["record"].get<std::string>();
  if (j.contains("problems")) s.problems_path = j["problems"].get<std::string>();
  if (j.contains("out_dir")) s.out_dir = j["out_dir"].get<std::string>();
  if (j.contains("workers")) s.workers = j["workers"].get<int>();
  if (j.contains("prompts_dir")) s.prompts_dir = j["prompts_dir"].get<std::string>();
  if (j.contains("scratch_root")) s.scratch_root = j["scratch_root"].get<std::string>();
  if (j.contains("exec")) {
    const auto& e = j["exec"];
    if (e.contains("per_test_timeout_ms"))
      s.exec_limits.per_test_timeout_ms = e["per_test_timeout_ms"].get<std::int64_t>();
    if (e.contains("memory_cap_bytes"))
      s.exec_limits.memory_cap_bytes = e["memory_cap_bytes"].get<std::int64_t>();
    if (e.contains("max_output_bytes"))
      s.exec_limits.max_output_bytes = e["max_output_bytes"].get<std::int64_t>();
    if (e.contains("workers")) s.exec_limits.workers = e["workers"].get<int>();
  }
  if (j.contains("agents")) {
    const auto& a = j["agents"];
    if (a.contains("thinker")) read_agent(a["thinker"], &s.thinker);
    if (a.contains("solver")) read_agent(a["solver"], &s.solver, &solver_temp_explicit);
    if (a.contains("debugger")) read_agent(a["debugger"], &s.debugger);
    if (a.contains("critic")) read_agent(a["critic"], &s.critic);
  }
  if (j.contains("live")) {
    const auto& l = j["live"];
    if (l.contains("base_url")) s.live.base_url = l["base_url"].get<std::string>();
    if (l.contains("path")) s.live.path = l["path"].get<std::string>();
    if (l.contains("api_key_env")) s.live.api_key_env = l["api_key_env"].get<std::string>();
    if (l.contains("connect_timeout_ms"))
      s.live.connect_timeout_ms = l["connect_timeout_ms"].get<int>();
    if (l.contains("read_timeout_ms"))
      s.live.read_timeout_ms = l["read_timeout_ms"].get<int>();
    if (l.contains("headers"))
      for (auto it = l["headers"].begin(); it != l["headers"].end(); ++it)
        s.live.extra_headers[it.key()] = it.value().get<std::string>();
  }
  if (s.search.policy == search::Policy::resample && !solver_temp_explicit)
    s.solver.temperature = 1.0;
  return s;
}

RunSettings RunSettings::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, path + ": " + e.what());
  }
  return from_json(j);
}

void RunSettings::apply_override(const std::string& key, const std::string& value) {
  auto agent_for = [&](const std::string& name) -> agents::AgentConfig* {
    if (name == "thinker") return &thinker;
    if (name == "solver") return &solver;
    if (name == "debugger") return &debugger;
    if (name == "critic") return &critic;
    return nullptr;
  };

  if (key == "policy") {
    search::Policy prev = search.policy;
    if (value == "reflexion") {
      search = search::reflexion_preset(search);
    } else {
      search.policy = search::policy_from_string(value);
    }
    if (search.policy == search::Policy::resample && prev != search::Policy::resample)
      solver.temperature = 1.0;  // overridable by a later agents.solver.temperature
    return;
  }
  if (key == "budget") { search.budget = static_cast<int>(parse_int(value, key)); return; }
  if (key == "max_depth" || key == "depth") {
    search.max_depth = static_cast<int>(parse_int(value, key));
    return;
  }
  if (key == "max_width" || key == "width") {
    search.max_width = static_cast<int>(parse_int(value, key));
    return;
  }
  if (key == "verification_enabled") { search.verification_enabled = parse_bool(value, key); return; }
  if (key == "abort_enabled") { search.abort_enabled = parse_bool(value, key); return; }
  if (key == "critic_scoring_enabled") { search.critic_scoring_enabled = parse_bool(value, key); return; }
  if (key == "seed") { search.seed = static_cast<std::uint64_t>(parse_int(value, key)); return; }
  if (key == "backend") { backend = value; return; }
  if (key == "transcript") { transcript_path = value; return; }
  if (key == "record") { record_path = value; return; }
  if (key == "problems") { problems_path = value; return; }
  if (key == "out_dir") { out_dir = value; return; }
  if (key == "workers") { workers = static_cast<int>(parse_int(value, key)); return; }
  if (key == "prompts_dir") { prompts_dir = value; return; }
  if (key == "scratch_root") { scratch_root = value; return; }
  if (key.rfind("exec.", 0) == 0) {
    std::string field = key.substr(5);
    if (field == "per_test_timeout_ms") { exec_limits.per_test_timeout_ms = parse_int(value, key); return; }
    if (field == "memory_cap_bytes") { exec_limits.memory_cap_bytes = parse_int(value, key); return; }
    if (field == "max_output_bytes") { exec_limits.max_output_bytes = parse_int(value, key); return; }
    if (field == "workers") { exec_limits.workers = static_cast<int>(parse_int(value, key)); return; }
  }
  if (key.rfind("agents.", 0) == 0) {
    std::string rest = key.substr(7);
    std::size_t dot = rest.find('.');
    if (dot != std::string::npos) {
      agents::AgentConfig* agent = agent_for(rest.substr(0, dot));
      std::string field = rest.substr(dot + 1);
      if (agent) {
        if (field == "model_id") { agent->model_id = value; return; }
        if (field == "temperature") { agent->temperature = parse_double(value, key); return; }
        if (field == "max_output_tokens") { agent->max_output_tokens = static_cast<int>(parse_int(value, key)); return; }
        if (field == "max_strategies_cap") { agent->max_strategies_cap = static_cast<int>(parse_int(value, key)); return; }
        if (field == "max_reflections_cap") { agent->max_reflections_cap = static_cast<int>(parse_int(value, key)); return; }
      }
    }
  }
  if (key == "model") {  // convenience: same model for every role
    thinker.model_id = solver.model_id = debugger.model_id = critic.model_id = value;
    return;
  }
  if (key.rfind("live.", 0) == 0) {
    std::string field = key.substr(5);
    if (field == "base_url") { live.base_url = value; return; }
    if (field == "path") { live.path = value; return; }
    if (field == "api_key_env") { live.api_key_env = value; return; }
    if (field == "connect_timeout_ms") { live.connect_timeout_ms = static_cast<int>(parse_int(value, key)); return; }
    if (field == "read_timeout_ms") { live.read_timeout_ms = static_cast<int>(parse_int(value, key)); return; }
  }
  throw Error(ErrorKind::config, "unknown config key: " + key);
}

nlohmann::ordered_json RunSettings::to_json(bool include_output_paths) const {
  nlohmann::ordered_json j;
  j["policy"] = search::to_string(search.policy);
  j["budget"] = search.budget;
  j["max_depth"] = search.max_depth;
  j["max_width"] = search.max_width;
  j["verification_enabled"] = search.verification_enabled;
  j["abort_enabled"] = search.abort_enabled;
  j["critic_scoring_enabled"] = search.critic_scoring_enabled;
  j["seed"] = search.seed;
  j["backend"] = backend;
  j["transcript"] = transcript_path;
  j["problems"] = problems_path;
  j["workers"] = workers;
  j["prompts_dir"] = prompts_dir;
  if (include_output_paths) {
    j["record"] = record_path;
    j["out_dir"] = out_dir;
    j["scratch_root"] = scratch_root;
  }
  j["exec"] = {{"per_test_timeout_ms", exec_limits.per_test_timeout_ms},
               {"memory_cap_bytes", exec_limits.memory_cap_bytes},
               {"max_output_bytes", exec_limits.max_output_bytes},
               {"workers", exec_limits.workers}};
  j["agents"] = {{"thinker", agent_to_json(thinker, true)},
                 {"solver", agent_to_json(solver, false)},
                 {"debugger", agent_to_json(debugger, false)},
                 {"critic", agent_to_json(critic, false)}};
  if (backend == "live")
    j["live"] = {{"base_url", live.base_url},
                 {"path", live.path},
                 {"api_key_env", live.api_key_env}};
  return j;
}

void RunSettings::validate() const {
  search.validate();
  exec_limits.validate();
  thinker.validate();
  solver.validate();
  debugger.validate();
  critic.validate();
  if (backend != "live" && backend != "mock" && backend != "replay")
    throw Error(ErrorKind::config, "backend must be live, mock, or replay");
  if (backend == "replay" && transcript_path.empty())
    throw Error(ErrorKind::config, "replay backend requires a transcript path");
  if (backend == "live" && live.base_url.empty())
    throw Error(ErrorKind::config, "live backend requires live.base_url");
  if (workers < 1) throw Error(ErrorKind::config, "workers must be >= 1");
}

std::unique_ptr<llm::Gateway> make_gateway(const RunSettings& settings) {
  settings.validate();
  std::unique_ptr<llm::Gateway> gateway;
  if (settings.backend == "replay") {
    gateway = std::make_unique<llm::Gateway>(llm::Gateway::replay_file(settings.transcript_path));
  } else if (settings.backend == "mock") {
    gateway = std::make_unique<llm::Gateway>(llm::make_canned_demo_backend());
  } else {
    gateway = std::make_unique<llm::Gateway>(std::make_shared<llm::HttpChatBackend>(settings.live));
  }
  if (!settings.record_path.empty() && settings.backend != "replay")
    gateway->record_to(settings.record_path);
  return gateway;
}

// ---------------------------------------------------------------- evaluation

namespace {

// Frozen selection rule applied to a budget prefix: the accepted node once it
// exists, else the first visible-pass candidate, else the candidate with the
// most visible passes (earliest wins ties).
std::optional<NodeId> select_at_prefix(const search::SearchResult& result, int prefix) {
  if (result.accepted_generation &&
      *result.accepted_generation <= static_cast<std::uint32_t>(prefix)) {
    for (const search::EventLogEntry& e : result.event_log)
      if (e.generation_index == *result.accepted_generation) return e.node_id;
  }
  std::optional<search::EventLogEntry> best;
  for (const search::EventLogEntry& e : result.event_log) {
    if (e.generation_index > static_cast<std::uint32_t>(prefix)) break;
    if (e.passed_visible) return e.node_id;
    if (!best || e.visible_passed > best->visible_passed) best = e;
  }
  if (best) return best->node_id;
  return std::nullopt;
}

std::string compute_run_id(const nlohmann::ordered_json& snapshot,
                           const std::vector<Problem>& problems) {
  Fnv1a64 h;
  h.feed("arbor.run.v1");
  h.feed(snapshot.dump());
  for (const Problem& p : problems) h.feed(p.id);
  return hex64(h.state);
}

}  // namespace

BenchmarkRun evaluate_run(const std::vector<Problem>& problems,
                          const RunSettings& settings, llm::Gateway& gateway,
                          exec::CandidateExecutor& executor,
                          const ProgressFn& progress) {
  settings.validate();
  if (problems.empty())
    throw Error(ErrorKind::validation, "evaluate_run: no problems");

  BenchmarkRun run;
  run.policy_name = search::to_string(settings.search.policy);
  run.budget = settings.search.budget;
  run.config_snapshot = settings.to_json(false);
  run.run_id = compute_run_id(run.config_snapshot, problems);
  run.problems.resize(problems.size());

  agents::PromptLibrary prompts = settings.prompts_dir.empty()
                                      ? agents::PromptLibrary::builtin()
                                      : agents::PromptLibrary::from_dir(settings.prompts_dir);

  std::atomic<std::size_t> next{0};
  std::atomic<int> completed{0};
  std::atomic<int> solved{0};
  std::mutex progress_mutex;

  auto work = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= problems.size()) return;
      const Problem& problem = problems[i];
      ProblemReport report;
      report.problem_id = problem.id;
      report.source_tag = problem.source_tag;
      try {
        problem.validate();
        if (problem.hidden_tests.empty())
          throw Error(ErrorKind::validation,
                      "problem used for evaluation has no hidden tests");
        agents::AgentSuite agents(gateway, prompts, settings.thinker, settings.solver,
                                  settings.debugger, settings.critic);
        search::SearchEngine engine(agents, executor);
        search::SearchResult result = engine.search(problem, settings.search);
        report.tokens = agents.tokens_used();

        // Hidden verdicts for the engine's selection and for every node the
        // frozen prefix rule can select; nothing else ever sees hidden tests.
        std::set<NodeId> targets;
        if (result.selected_node) targets.insert(*result.selected_node);
        for (int b = 1; b <= settings.search.budget; ++b)
          if (auto id = select_at_prefix(result, b)) targets.insert(*id);
        for (NodeId id : targets) {
          const std::string& code = result.tree->node(id).code;
          report.hidden_verdicts[id] = executor.run_hidden(code, problem);
        }
        if (result.selected_node)
          report.selected_hidden_pass = report.hidden_verdicts.at(*result.selected_node);
        report.result = std::move(result);
        report.ok = true;
      } catch (const std::exception& e) {
        report.ok = false;
        report.error = e.what();
        log::warn("problem " + problem.id + " failed: " + report.error);
      }
      bool hidden_pass = report.selected_hidden_pass.value_or(false);
      run.problems[i] = std::move(report);
      int done = ++completed;
      if (hidden_pass) ++solved;
      if (progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        progress(problem.id, done, static_cast<int>(problems.size()), solved.load());
      }
    }
  };

  int workers = std::min<int>(settings.workers, static_cast<int>(problems.size()));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  return run;
}

double pass_at_1(const BenchmarkRun& run) {
  if (run.problems.empty()) throw Error(ErrorKind::validation, "empty benchmark run");
  int solved = 0;
  for (const ProblemReport& r : run.problems)
    if (r.ok && r.selected_hidden_pass.value_or(false)) ++solved;
  return static_cast<double>(solved) / static_cast<double>(run.problems.size());
}

std::vector<CurvePoint> cumulative_curve(const BenchmarkRun& run) {
  if (run.problems.empty()) throw Error(ErrorKind::validation, "empty benchmark run");
  std::vector<CurvePoint> curve;
  curve.reserve(run.budget);
  for (int b = 1; b <= run.budget; ++b) {
    int solved = 0;
    for (const ProblemReport& r : run.problems) {
      if (!r.ok) continue;  // failed problems count as unsolved at every prefix
      if (!r.result)
        throw Error(ErrorKind::state,
                    "problem " + r.problem_id + " has no event log for the curve");
      auto id = select_at_prefix(*r.result, b);
      if (!id) continue;
      auto it = r.hidden_verdicts.find(*id);
      if (it == r.hidden_verdicts.end())
        throw Error(ErrorKind::state, "problem " + r.problem_id +
                                          ": no cached hidden verdict for node " +
                                          std::to_string(*id));
      if (it->second) ++solved;
    }
    curve.push_back({b, static_cast<double>(solved) /
                            static_cast<double>(run.problems.size())});
  }
  return curve;
}

// ------------------------------------------------------------------- report

namespace {

nlohmann::ordered_json report_to_json(const ProblemReport& r) {
  nlohmann::ordered_json j;
  j["problem_id"] = r.problem_id;
  j["source_tag"] = r.source_tag;
  j["ok"] = r.ok;
  if (!r.ok) {
    j["error"] = r.error;
    return j;
  }
  const search::SearchResult& res = *r.result;
  j["terminated_by"] = search::to_string(res.terminated_by);
  j["generations_used"] = res.generations_used;
  if (res.selected_node) j["selected_node"] = *res.selected_node;
  else j["selected_node"] = nullptr;
  if (res.accepted_generation) j["accepted_generation"] = *res.accepted_generation;
  else j["accepted_generation"] = nullptr;
  if (r.selected_hidden_pass) j["selected_hidden_pass"] = *r.selected_hidden_pass;
  else j["selected_hidden_pass"] = nullptr;
  if (res.abort_note) j["abort_note"] = *res.abort_note;
  nlohmann::ordered_json log = nlohmann::ordered_json::array();
  for (const search::EventLogEntry& e : res.event_log)
    log.push_back({{"generation_index", e.generation_index},
                   {"node_id", e.node_id},
                   {"visible_passed", e.visible_passed},
                   {"visible_total", e.visible_total},
                   {"passed_visible", e.passed_visible},
                   {"score", e.score}});
  j["event_log"] = std::move(log);
  nlohmann::ordered_json verdicts = nlohmann::ordered_json::object();
  for (const auto& [id, pass] : r.hidden_verdicts)
    verdicts[std::to_string(id)] = pass;
  j["hidden_verdicts"] = std::move(verdicts);
  j["tokens"] = {{"prompt_tokens", r.tokens.prompt_tokens},
                 {"output_tokens", r.tokens.output_tokens}};
  return j;
}

ProblemReport report_from_json(const nlohmann::json& j) {
  ProblemReport r;
  r.problem_id = j.at("problem_id").get<std::string>();
  r.source_tag = j.value("source_tag", std::string("unknown"));
  r.ok = j.at("ok").get<bool>();
  if (!r.ok) {
    r.error = j.value("error", std::string());
    return r;
  }
  search::SearchResult res;
  std::string term = j.at("terminated_by").get<std::string>();
  if (term == "accepted") res.terminated_by = search::Termination::accepted;
  else if (term == "budget_exhausted") res.terminated_by = search::Termination::budget_exhausted;
  else res.terminated_by = search::Termination::strategies_exhausted;
  res.generations_used = j.at("generations_used").get<int>();
  if (!j.at("selected_node").is_null())
    res.selected_node = j["selected_node"].get<NodeId>();
  if (!j.at("accepted_generation").is_null())
    res.accepted_generation = j["accepted_generation"].get<std::uint32_t>();
  if (j.contains("abort_note") && !j["abort_note"].is_null())
    res.abort_note = j["abort_note"].get<std::string>();
  for (const auto& e : j.at("event_log")) {
    search::EventLogEntry entry;
    entry.generation_index = e.at("generation_index").get<std::uint32_t>();
    entry.node_id = e.at("node_id").get<NodeId>();
    entry.visible_passed = e.at("visible_passed").get<int>();
    entry.visible_total = e.at("visible_total").get<int>();
    entry.passed_visible = e.at("passed_visible").get<bool>();
    entry.score = e.at("score").get<double>();
    res.event_log.push_back(entry);
  }
  for (auto it = j.at("hidden_verdicts").begin(); it != j["hidden_verdicts"].end(); ++it)
    r.hidden_verdicts[static_cast<NodeId>(std::stoul(it.key()))] = it.value().get<bool>();
  if (!j.at("selected_hidden_pass").is_null())
    r.selected_hidden_pass = j["selected_hidden_pass"].get<bool>();
  if (j.contains("tokens")) {
    r.tokens.prompt_tokens = j["tokens"].value("prompt_tokens", std::int64_t{0});
    r.tokens.output_tokens = j["tokens"].value("output_tokens", std::int64_t{0});
  }
  r.result = std::move(res);
  return r;
}

struct SummaryRow {
  std::string benchmark;
  int problems = 0;
  int solved = 0;
  long long generations = 0;
  std::int64_t prompt_tokens = 0;
  std::int64_t output_tokens = 0;
};

std::vector<SummaryRow> summarize(const BenchmarkRun& run) {
  std::map<std::string, SummaryRow> rows;  // keyed by benchmark: stable order
  for (const ProblemReport& r : run.problems) {
    SummaryRow& row = rows[r.source_tag];
    row.benchmark = r.source_tag;
    ++row.problems;
    if (r.ok && r.selected_hidden_pass.value_or(false)) ++row.solved;
    if (r.ok && r.result) row.generations += r.result->generations_used;
    row.prompt_tokens += r.tokens.prompt_tokens;
    row.output_tokens += r.tokens.output_tokens;
  }
  std::vector<SummaryRow> out;
  for (auto& [_, row] : rows) out.push_back(row);
  return out;
}

}  // namespace

std::string sanitize_file_component(const std::string& name) {
  std::string out;
  for (char c : name) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
              (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    out += ok ? c : '_';
  }
  return out.empty() ? "_" : out;
}

EmittedPaths emit_report(const BenchmarkRun& run, const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  fs::create_directories(fs::path(out_dir) / "snapshots", ec);
  if (ec) throw Error(ErrorKind::io, "cannot create report directory " + out_dir);

  EmittedPaths paths;
  paths.snapshots_dir = (fs::path(out_dir) / "snapshots").string();

  paths.run_meta_json = (fs::path(out_dir) / "run_meta.json").string();
  {
    nlohmann::ordered_json meta;
    meta["run_id"] = run.run_id;
    meta["policy"] = run.policy_name;
    meta["budget"] = run.budget;
    meta["config"] = run.config_snapshot;
    std::ofstream out(paths.run_meta_json, std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + paths.run_meta_json);
    out << meta.dump(2) << "\n";
  }

  paths.problems_jsonl = (fs::path(out_dir) / "problems.jsonl").string();
  {
    std::ofstream out(paths.problems_jsonl, std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + paths.problems_jsonl);
    for (const ProblemReport& r : run.problems) out << report_to_json(r).dump() << "\n";
  }

  paths.summary_csv = (fs::path(out_dir) / "summary.csv").string();
  {
    std::ofstream out(paths.summary_csv, std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + paths.summary_csv);
    std::string model = "unknown";
    if (run.config_snapshot.contains("agents"))
      model = run.config_snapshot["agents"]["solver"].value("model_id", model);
    out << "policy,model,benchmark,problems,solved,pass_at_1,mean_generations,"
           "prompt_tokens,output_tokens\n";
    for (const SummaryRow& row : summarize(run)) {
      double p1 = row.problems ? static_cast<double>(row.solved) / row.problems : 0.0;
      double mean_gen = row.problems ? static_cast<double>(row.generations) / row.problems : 0.0;
      out << run.policy_name << "," << model << "," << row.benchmark << ","
          << row.problems << "," << row.solved << "," << format_double(p1) << ","
          << format_double(mean_gen) << "," << row.prompt_tokens << ","
          << row.output_tokens << "\n";
    }
  }

  paths.curve_csv = (fs::path(out_dir) / "curve.csv").string();
  {
    std::ofstream out(paths.curve_csv, std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + paths.curve_csv);
    out << "budget_prefix,pass_at_1\n";
    for (const CurvePoint& point : cumulative_curve(run))
      out << point.budget_prefix << "," << format_double(point.pass_at_1) << "\n";
  }

  for (const ProblemReport& r : run.problems) {
    if (!r.ok || !r.result || !r.result->tree) continue;
    fs::path path = fs::path(paths.snapshots_dir) /
                    (sanitize_file_component(r.problem_id) + ".json");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write snapshot " + path.string());
    out << r.result->tree->snapshot();
  }

  return paths;
}

BenchmarkRun load_run_from_report(const std::string& out_dir) {
  BenchmarkRun run;
  {
    std::ifstream in(fs::path(out_dir) / "run_meta.json");
    if (!in) throw Error(ErrorKind::io, "cannot open run_meta.json in " + out_dir);
    nlohmann::json meta;
    try {
      in >> meta;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse, std::string("run_meta.json: ") + e.what());
    }
    run.run_id = meta.value("run_id", "");
    run.policy_name = meta.value("policy", "");
    run.budget = meta.value("budget", 20);
    if (meta.contains("config")) run.config_snapshot = meta["config"];
  }
  std::ifstream in(fs::path(out_dir) / "problems.jsonl");
  if (!in) throw Error(ErrorKind::io, "cannot open problems.jsonl in " + out_dir);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_copy(line).empty()) continue;
    try {
      run.problems.push_back(report_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse, "problems.jsonl:" + std::to_string(line_no) +
                                        ": " + e.what());
    }
  }
  if (run.problems.empty())
    throw Error(ErrorKind::parse, "problems.jsonl in " + out_dir + " is empty");
  return run;
}

// ------------------------------------------------------------------- audit

std::vector<AuditHit> audit_transcript_for_hidden_leaks(
    const llm::Transcript& transcript, const std::vector<Problem>& problems) {
  std::vector<AuditHit> hits;
  for (const Problem& problem : problems) {
    std::vector<std::string> needles;
    for (const TestCase& t : problem.hidden_tests) {
      for (const std::string* raw : {&t.input, &t.expected_output}) {
        std::string needle = trim_copy(*raw);
        if (needle.size() < 2) continue;  // single characters are unattributable
        needles.push_back(std::move(needle));
      }
    }
    for (const llm::TranscriptEntry& entry : transcript.entries()) {
      for (const llm::ChatMessage& message : entry.messages) {
        for (const std::string& needle : needles) {
          if (message.text.find(needle) != std::string::npos)
            hits.push_back({problem.id, entry.key, needle});
        }
      }
    }
  }
  return hits;
}

// ------------------------------------------------------------------- trace

std::string render_tree_trace(const Tree& tree) {
  std::ostringstream out;
  out << "problem " << tree.problem().id << " ("
      << tree.problem().visible_tests.size() << " visible tests, max depth "
      << tree.max_depth() << ")\n";
  for (const SolutionNode& n : tree.nodes()) {
    std::string indent(static_cast<std::size_t>(n.depth - 1) * 2, ' ');
    out << indent << "gen " << n.generation_index << " depth " << n.depth
        << " [strategy " << n.strategy.ordinal;
    if (n.reflection) out << ", reflection " << n.reflection->ordinal;
    out << "]";
    if (n.exec_feedback)
      out << " pass " << n.exec_feedback->pass_count << "/" << n.exec_feedback->total;
    if (n.score) out << " score " << format_double(*n.score);
    out << " status " << to_string(n.status) << "\n";
    if (!n.reflection)
      out << indent << "  strategy: " << n.strategy.text << "\n";
    else
      out << indent << "  reflection: " << n.reflection->text << "\n";
    if (n.critic_feedback)
      out << indent << "  critic: action " << to_string(n.critic_feedback->action)
          << ", adherence " << n.critic_feedback->adherence_score << "/5 - "
          << n.critic_feedback->rationale << "\n";
    if (n.verdict)
      out << indent << "  verdict: " << to_string(n.verdict->decision) << " - "
          << n.verdict->rationale << "\n";
  }
  if (auto best = tree.best_node())
    out << "selected: gen " << tree.node(*best).generation_index << " (status "
        << to_string(tree.node(*best).status) << ")\n";
  else
    out << "selected: none\n";
  return out.str();
}

}  // namespace arbor::bench
