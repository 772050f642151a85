#include "arbor/agents.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "arbor/log.hpp"

namespace arbor::agents {

const char* to_string(AgentRole role) {
  switch (role) {
    case AgentRole::thinker: return "thinker";
    case AgentRole::solver: return "solver";
    case AgentRole::debugger: return "debugger";
    case AgentRole::critic: return "critic";
  }
  return "?";
}

void AgentConfig::validate() const {
  if (model_id.empty()) throw Error(ErrorKind::validation, "agent model_id is empty");
  if (temperature < 0.0) throw Error(ErrorKind::validation, "agent temperature < 0");
  if (max_output_tokens <= 0)
    throw Error(ErrorKind::validation, "agent max_output_tokens must be > 0");
  if (max_strategies_cap < 1 || max_reflections_cap < 1)
    throw Error(ErrorKind::validation, "agent caps must be >= 1");
}

ProblemView ProblemView::of(const Problem& problem) {
  ProblemView v;
  v.id = problem.id;
  v.description = problem.description;
  v.language = problem.solution_language;
  v.entry_point = problem.entry_point;
  v.visible_tests = problem.visible_tests;
  return v;
}

namespace detail {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  lines.push_back(cur);
  return lines;
}

}  // namespace

std::vector<std::string> parse_numbered_list(const std::string& text) {
  std::vector<std::string> items;
  for (const std::string& raw : split_lines(text)) {
    std::string line = trim(raw);
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    bool numbered = i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')');
    if (numbered) {
      std::string body = trim(line.substr(i + 1));
      if (!body.empty()) {
        items.push_back(body);
        continue;
      }
    }
    if (!items.empty() && !line.empty()) items.back() += " " + line;
  }
  return items;
}

std::optional<std::string> extract_single_code_block(const std::string& text) {
  std::vector<std::string> lines = split_lines(text);
  std::vector<std::string> blocks;
  std::string current;
  bool in_block = false;
  for (const std::string& raw : lines) {
    std::string line = trim(raw);
    if (line.rfind("```", 0) == 0) {
      if (!in_block) {
        in_block = true;
        current.clear();
      } else {
        blocks.push_back(current);
        in_block = false;
      }
      continue;
    }
    if (in_block) {
      if (!current.empty()) current += "\n";
      current += raw;
    }
  }
  if (in_block || blocks.size() != 1) return std::nullopt;
  return blocks[0];
}

std::map<std::string, std::string> parse_labeled_fields(
    const std::string& text, const std::vector<std::string>& keys) {
  std::map<std::string, std::string> out;
  std::string last_key;
  for (const std::string& raw : split_lines(text)) {
    std::string line = trim(raw);
    bool matched = false;
    for (const std::string& key : keys) {
      if (line.size() <= key.size()) continue;
      if (lower(line.substr(0, key.size())) != key) continue;
      std::size_t pos = key.size();
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
      if (pos >= line.size() || line[pos] != ':') continue;
      out[key] = trim(line.substr(pos + 1));
      last_key = key;
      matched = true;
      break;
    }
    if (!matched && !line.empty() && !last_key.empty())
      out[last_key] += "\n" + line;
  }
  return out;
}

}  // namespace detail

namespace {

std::string fenced(const std::string& code) { return "```\n" + code + "\n```"; }

std::string render_test_io(const std::string& label, const std::string& text) {
  return "  " + label + ": " + text;
}

constexpr const char* kListReminder =
    "Your previous reply could not be used. Reply again with only a numbered list "
    "(\"1. ...\", \"2. ...\"), one item per line.";
constexpr const char* kCodeReminder =
    "Your previous reply could not be used. Reply again with exactly one fenced code "
    "block (``` ... ```) containing the complete program, and nothing else.";
constexpr const char* kEvaluateReminder =
    "Your previous reply could not be used. Reply again with exactly these labeled "
    "lines:\nscore: <integer 0-5>\naction: <refine or abort>\nrationale: <text>\n"
    "suggestion: <optional text>";
constexpr const char* kVerifyReminder =
    "Your previous reply could not be used. Reply again with exactly these labeled "
    "lines:\ndecision: <accept or reject>\nrationale: <text>\nsuggestion: <required "
    "when rejecting>";

}  // namespace

AgentSuite::AgentSuite(llm::Gateway& gateway, PromptLibrary prompts, AgentConfig thinker,
                       AgentConfig solver, AgentConfig debugger, AgentConfig critic)
    : gateway_(gateway),
      prompts_(std::move(prompts)),
      thinker_(thinker),
      solver_(solver),
      debugger_(debugger),
      critic_(critic) {
  prompts_.validate();
  thinker_.validate();
  solver_.validate();
  debugger_.validate();
  critic_.validate();
}

llm::ChatResponse AgentSuite::call(const AgentConfig& agent, const std::string& system_text,
                                   const std::string& user_text, const std::string& tag) {
  llm::ChatRequest req;
  req.messages.push_back({llm::Role::system, system_text});
  req.messages.push_back({llm::Role::user, user_text});
  req.model_id = agent.model_id;
  req.temperature = agent.temperature;
  req.max_output_tokens = agent.max_output_tokens;
  req.request_tag = tag;
  llm::ChatResponse res = gateway_.complete(req);
  tokens_ += res.token_usage;
  return res;
}

llm::ChatResponse AgentSuite::recall(const AgentConfig& agent, const std::string& system_text,
                                     const std::string& user_text,
                                     const std::string& first_reply,
                                     const std::string& reminder, const std::string& tag) {
  llm::ChatRequest req;
  req.messages.push_back({llm::Role::system, system_text});
  req.messages.push_back({llm::Role::user, user_text});
  req.messages.push_back({llm::Role::assistant, first_reply});
  req.messages.push_back({llm::Role::user, reminder});
  req.model_id = agent.model_id;
  req.temperature = agent.temperature;
  req.max_output_tokens = agent.max_output_tokens;
  req.request_tag = tag;
  llm::ChatResponse res = gateway_.complete(req);
  tokens_ += res.token_usage;
  return res;
}

std::string AgentSuite::format_visible_tests(const ProblemView& problem) {
  std::ostringstream out;
  for (std::size_t i = 0; i < problem.visible_tests.size(); ++i) {
    const TestCase& t = problem.visible_tests[i];
    out << "test " << (i + 1) << ":\n"
        << render_test_io("input", t.input) << "\n"
        << render_test_io("expected", t.expected_output);
    if (i + 1 < problem.visible_tests.size()) out << "\n";
  }
  return out.str();
}

std::string AgentSuite::format_exec_feedback(const ExecutionFeedback& feedback) {
  std::ostringstream out;
  out << "passed " << feedback.pass_count << " of " << feedback.total
      << " visible tests";
  for (std::size_t i = 0; i < feedback.results.size(); ++i) {
    const TestResult& r = feedback.results[i];
    if (r.outcome == TestOutcome::pass) continue;
    out << "\nfailing test " << (i + 1) << " [" << to_string(r.outcome) << "]:\n"
        << render_test_io("input", r.input) << "\n"
        << render_test_io("expected", r.expected) << "\n";
    std::string actual;
    if (r.actual)
      actual = *r.actual;
    else if (r.outcome == TestOutcome::timeout)
      actual = "<timed out>";
    else
      actual = "<not run>";
    out << render_test_io("actual", actual);
    if (!r.diagnostic.empty()) out << "\n" << render_test_io("diagnostic", r.diagnostic);
  }
  return out.str();
}

std::string AgentSuite::format_strategies(const std::vector<Strategy>& strategies) {
  std::ostringstream out;
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    out << strategies[i].ordinal << ". " << strategies[i].text;
    if (i + 1 < strategies.size()) out << "\n";
  }
  return out.str();
}

std::vector<Strategy> AgentSuite::thinker_strategies(const ProblemView& problem, int cap) {
  // The caller owns the cap: critic-guided search passes the configured
  // thinker cap, fixed-shape policies pass their width or the budget.
  int effective_cap = std::max(1, cap);
  const std::string system_text = prompts_.text("thinker.system");
  const std::string user_text = PromptLibrary::render(
      prompts_.text("thinker.strategies.user"),
      {{"description", problem.description},
       {"visible_tests", format_visible_tests(problem)},
       {"max_strategies", std::to_string(effective_cap)}});

  auto parse = [&](const std::string& reply) -> std::vector<Strategy> {
    std::vector<std::string> items = detail::parse_numbered_list(reply);
    std::vector<Strategy> out;
    std::set<std::string> seen;
    for (const std::string& item : items) {
      if (!seen.insert(item).second) continue;  // exact duplicates dropped
      Strategy s;
      s.ordinal = static_cast<int>(out.size()) + 1;
      s.text = item;
      out.push_back(std::move(s));
    }
    if (static_cast<int>(out.size()) > effective_cap) {
      log::warn("thinker produced " + std::to_string(out.size()) +
                " strategies; keeping the first " + std::to_string(effective_cap));
      out.resize(effective_cap);
    }
    return out;
  };

  llm::ChatResponse res = call(thinker_, system_text, user_text, "thinker.strategies");
  std::vector<Strategy> strategies = parse(res.text);
  if (!strategies.empty()) return strategies;
  llm::ChatResponse retry = recall(thinker_, system_text, user_text, res.text,
                                   kListReminder, "thinker.strategies");
  strategies = parse(retry.text);
  if (!strategies.empty()) return strategies;
  throw Error(ErrorKind::agent_parse, "thinker.strategies: no numbered list in reply");
}

std::optional<Strategy> AgentSuite::thinker_more_strategy(
    const ProblemView& problem, const std::vector<Strategy>& prior) {
  const std::string system_text = prompts_.text("thinker.system");
  const std::string user_text = PromptLibrary::render(
      prompts_.text("thinker.more.user"),
      {{"description", problem.description},
       {"prior_strategies", format_strategies(prior)},
       {"next_ordinal", std::to_string(prior.size() + 1)}});

  auto parse = [&](const std::string& reply) -> std::optional<std::optional<Strategy>> {
    std::string body = reply;
    // A bare NONE (any case) means the strategy space is exhausted.
    std::string trimmed;
    for (char c : body)
      if (!std::isspace(static_cast<unsigned char>(c))) trimmed += static_cast<char>(std::toupper(c));
    if (trimmed == "NONE") return std::optional<Strategy>{};
    std::vector<std::string> items = detail::parse_numbered_list(reply);
    if (items.empty()) return std::nullopt;  // unparseable
    for (const Strategy& s : prior)
      if (s.text == items.front()) return std::optional<Strategy>{};  // repeats itself
    Strategy s;
    s.ordinal = static_cast<int>(prior.size()) + 1;
    s.text = items.front();
    return std::optional<Strategy>{s};
  };

  llm::ChatResponse res = call(thinker_, system_text, user_text, "thinker.more");
  auto parsed = parse(res.text);
  if (parsed) return *parsed;
  llm::ChatResponse retry =
      recall(thinker_, system_text, user_text, res.text,
             "Your previous reply could not be used. Reply with exactly one numbered "
             "item or the single word NONE.",
             "thinker.more");
  parsed = parse(retry.text);
  if (parsed) return *parsed;
  throw Error(ErrorKind::agent_parse, "thinker.more: reply was neither an item nor NONE");
}

std::vector<Reflection> AgentSuite::thinker_reflections(
    const ProblemView& problem, const SolutionNode& node,
    const ExecutionFeedback& feedback, int cap, const std::vector<Reflection>& prior) {
  bool failing = feedback.pass_count < feedback.total;
  bool rejected = node.verdict && node.verdict->decision == VerdictDecision::reject;
  if (!failing && !rejected)
    throw Error(ErrorKind::agent_invariant,
                "thinker.reflections requires a failing test or a rejecting verdict");

  int effective_cap = std::max(1, cap);

  std::string suggestion_block;
  std::optional<std::string> suggestion;
  if (rejected && node.verdict->suggested_improvements)
    suggestion = node.verdict->suggested_improvements;
  else if (node.critic_feedback && node.critic_feedback->suggested_improvements)
    suggestion = node.critic_feedback->suggested_improvements;
  if (suggestion && !suggestion->empty())
    suggestion_block = "Reviewer suggestion:\n" + *suggestion + "\n";

  std::string prior_block;
  if (!prior.empty()) {
    std::ostringstream out;
    out << "Fix plans already tried (propose something different):\n";
    for (const Reflection& r : prior) out << r.ordinal << ". " << r.text << "\n";
    prior_block = out.str();
  }

  const std::string system_text = prompts_.text("thinker.system");
  const std::string user_text = PromptLibrary::render(
      prompts_.text("thinker.reflections.user"),
      {{"description", problem.description},
       {"strategy", node.strategy.text},
       {"code", fenced(node.code)},
       {"exec_feedback", format_exec_feedback(feedback)},
       {"suggestion", suggestion_block},
       {"prior_reflections", prior_block},
       {"max_reflections", std::to_string(effective_cap)}});

  auto parse = [&](const std::string& reply) -> std::vector<Reflection> {
    std::vector<std::string> items = detail::parse_numbered_list(reply);
    std::vector<Reflection> out;
    std::set<std::string> seen;
    for (const Reflection& r : prior) seen.insert(r.text);
    for (const std::string& item : items) {
      if (!seen.insert(item).second) continue;
      Reflection r;
      r.ordinal = static_cast<int>(prior.size() + out.size()) + 1;
      r.text = item;
      out.push_back(std::move(r));
      if (static_cast<int>(out.size()) == effective_cap) break;
    }
    return out;
  };

  llm::ChatResponse res = call(thinker_, system_text, user_text, "thinker.reflections");
  std::vector<Reflection> reflections = parse(res.text);
  if (!reflections.empty()) return reflections;
  llm::ChatResponse retry = recall(thinker_, system_text, user_text, res.text,
                                   kListReminder, "thinker.reflections");
  reflections = parse(retry.text);
  if (!reflections.empty()) return reflections;
  throw Error(ErrorKind::agent_parse, "thinker.reflections: no numbered list in reply");
}

std::string AgentSuite::solver_generate(const ProblemView& problem,
                                        const Strategy& strategy) {
  if (strategy.text.empty())
    throw Error(ErrorKind::validation, "solver requires a non-empty strategy");
  const std::string system_text = PromptLibrary::render(prompts_.text("solver.system"),
                                                        {{"language", problem.language}});
  const std::string user_text = PromptLibrary::render(
      prompts_.text("solver.generate.user"),
      {{"description", problem.description},
       {"visible_tests", format_visible_tests(problem)},
       {"strategy", strategy.text},
       {"language", problem.language}});

  llm::ChatResponse res = call(solver_, system_text, user_text, "solver.generate");
  if (auto code = detail::extract_single_code_block(res.text)) return *code;
  llm::ChatResponse retry = recall(solver_, system_text, user_text, res.text,
                                   kCodeReminder, "solver.generate");
  if (auto code = detail::extract_single_code_block(retry.text)) return *code;
  throw Error(ErrorKind::agent_parse,
              "solver.generate: reply did not contain exactly one code block");
}

std::string AgentSuite::solver_unguided(const ProblemView& problem,
                                        SolvePromptFlavor flavor) {
  const char* tmpl =
      flavor == SolvePromptFlavor::plain ? "solver.direct.user" : "solver.cot.user";
  const char* tag =
      flavor == SolvePromptFlavor::plain ? "solver.direct" : "solver.cot";
  const std::string system_text = PromptLibrary::render(prompts_.text("solver.system"),
                                                        {{"language", problem.language}});
  const std::string user_text = PromptLibrary::render(
      prompts_.text(tmpl), {{"description", problem.description},
                            {"visible_tests", format_visible_tests(problem)},
                            {"language", problem.language}});

  llm::ChatResponse res = call(solver_, system_text, user_text, tag);
  if (auto code = detail::extract_single_code_block(res.text)) return *code;
  llm::ChatResponse retry =
      recall(solver_, system_text, user_text, res.text, kCodeReminder, tag);
  if (auto code = detail::extract_single_code_block(retry.text)) return *code;
  throw Error(ErrorKind::agent_parse,
              std::string(tag) + ": reply did not contain exactly one code block");
}

std::string AgentSuite::debugger_refine(const ProblemView& problem,
                                        const SolutionNode& node,
                                        const Reflection& reflection,
                                        const ExecutionFeedback& feedback) {
  if (reflection.text.empty())
    throw Error(ErrorKind::validation, "debugger requires a non-empty reflection");
  const std::string system_text = PromptLibrary::render(
      prompts_.text("debugger.system"), {{"language", problem.language}});
  // Conditioning set: reflection, collective feedback, prior code, strategy,
  // and the problem description, all embedded in one prompt.
  const std::string user_text = PromptLibrary::render(
      prompts_.text("debugger.refine.user"),
      {{"description", problem.description},
       {"strategy", node.strategy.text},
       {"code", fenced(node.code)},
       {"exec_feedback", format_exec_feedback(feedback)},
       {"reflection", reflection.text},
       {"language", problem.language}});

  llm::ChatResponse res = call(debugger_, system_text, user_text, "debugger.refine");
  if (auto code = detail::extract_single_code_block(res.text)) return *code;
  llm::ChatResponse retry = recall(debugger_, system_text, user_text, res.text,
                                   kCodeReminder, "debugger.refine");
  if (auto code = detail::extract_single_code_block(retry.text)) return *code;
  throw Error(ErrorKind::agent_parse,
              "debugger.refine: reply did not contain exactly one code block");
}

namespace {

struct EvaluateParse {
  std::optional<CriticFeedback> feedback;
  std::string problem;  // what went wrong, for the error message
  bool accept_seen = false;
};

EvaluateParse parse_evaluate_reply(const std::string& reply) {
  EvaluateParse out;
  auto fields =
      detail::parse_labeled_fields(reply, {"score", "action", "rationale", "suggestion"});
  if (!fields.count("score") || !fields.count("action")) {
    out.problem = "missing score/action lines";
    return out;
  }
  int score = -1;
  try {
    score = std::stoi(fields["score"]);
  } catch (...) {
    out.problem = "score is not an integer";
    return out;
  }
  if (score < 0 || score > 5) {
    out.problem = "score " + std::to_string(score) + " out of range 0..5";
    return out;
  }
  std::string action = fields["action"];
  std::transform(action.begin(), action.end(), action.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  CriticFeedback fb;
  fb.adherence_score = score;
  if (action == "refine") {
    fb.action = CriticAction::refine;
  } else if (action == "abort") {
    fb.action = CriticAction::abort_node;
  } else if (action == "accept") {
    out.accept_seen = true;
    out.problem = "accept is not a legal evaluation action";
    return out;
  } else {
    out.problem = "unknown action token '" + action + "'";
    return out;
  }
  fb.rationale = fields.count("rationale") ? fields["rationale"] : "";
  if (fields.count("suggestion") && !fields["suggestion"].empty())
    fb.suggested_improvements = fields["suggestion"];
  out.feedback = std::move(fb);
  return out;
}

}  // namespace

CriticFeedback AgentSuite::critic_evaluate(const ProblemView& problem,
                                           const SolutionNode& node,
                                           const ExecutionFeedback& feedback) {
  if (feedback.pass_count >= feedback.total)
    throw Error(ErrorKind::agent_invariant,
                "critic.evaluate is only for nodes failing a visible test");
  const std::string system_text = prompts_.text("critic.system");
  const std::string user_text = PromptLibrary::render(
      prompts_.text("critic.evaluate.user"),
      {{"description", problem.description},
       {"strategy", node.strategy.text},
       {"code", fenced(node.code)},
       {"exec_feedback", format_exec_feedback(feedback)}});

  llm::ChatResponse res = call(critic_, system_text, user_text, "critic.evaluate");
  EvaluateParse first = parse_evaluate_reply(res.text);
  if (first.feedback) return *first.feedback;
  llm::ChatResponse retry = recall(critic_, system_text, user_text, res.text,
                                   kEvaluateReminder, "critic.evaluate");
  EvaluateParse second = parse_evaluate_reply(retry.text);
  if (second.feedback) return *second.feedback;
  throw Error(second.accept_seen ? ErrorKind::agent_invariant : ErrorKind::agent_parse,
              "critic.evaluate: " + second.problem);
}

namespace {

struct VerifyParse {
  std::optional<Verdict> verdict;
  std::string problem;
  bool invariant = false;
};

VerifyParse parse_verify_reply(const std::string& reply) {
  VerifyParse out;
  auto fields =
      detail::parse_labeled_fields(reply, {"decision", "rationale", "suggestion"});
  if (!fields.count("decision")) {
    out.problem = "missing decision line";
    return out;
  }
  std::string decision = fields["decision"];
  std::transform(decision.begin(), decision.end(), decision.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  Verdict v;
  if (decision == "accept") {
    v.decision = VerdictDecision::accept;
  } else if (decision == "reject") {
    v.decision = VerdictDecision::reject;
  } else {
    out.problem = "unknown decision token '" + decision + "'";
    return out;
  }
  v.rationale = fields.count("rationale") ? fields["rationale"] : "";
  if (fields.count("suggestion") && !fields["suggestion"].empty())
    v.suggested_improvements = fields["suggestion"];
  if (v.decision == VerdictDecision::reject && !v.suggested_improvements) {
    out.problem = "reject without a suggestion";
    out.invariant = true;
    return out;
  }
  out.verdict = std::move(v);
  return out;
}

}  // namespace

Verdict AgentSuite::critic_verify(const ProblemView& problem, const SolutionNode& node,
                                  const ExecutionFeedback& feedback) {
  if (!feedback.all_passed())
    throw Error(ErrorKind::agent_invariant,
                "critic.verify is only for nodes passing every visible test");
  const std::string system_text = prompts_.text("critic.system");
  const std::string user_text = PromptLibrary::render(
      prompts_.text("critic.verify.user"),
      {{"description", problem.description},
       {"code", fenced(node.code)},
       {"exec_feedback", format_exec_feedback(feedback)}});

  llm::ChatResponse res = call(critic_, system_text, user_text, "critic.verify");
  VerifyParse first = parse_verify_reply(res.text);
  if (first.verdict) return *first.verdict;
  llm::ChatResponse retry = recall(critic_, system_text, user_text, res.text,
                                   kVerifyReminder, "critic.verify");
  VerifyParse second = parse_verify_reply(retry.text);
  if (second.verdict) return *second.verdict;
  throw Error(second.invariant ? ErrorKind::agent_invariant : ErrorKind::agent_parse,
              "critic.verify: " + second.problem);
}

}  // namespace arbor::agents
