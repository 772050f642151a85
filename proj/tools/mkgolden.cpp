// Regenerates the golden HumanEval-36 fixtures: the problem file and the
// recorded transcript that drives the replay acceptance suite. Run from the
// repository root:  arbor_mkgolden golden
//
// The scripted backend reproduces the reference walkthrough: five strategies,
// a first solution that passes every visible test but double-counts numbers
// divisible by both 11 and 13 (caught by hidden tests), a rejecting verdict
// with a concrete suggestion, and a corrected second solution that is
// accepted.

#include <cstdio>
#include <filesystem>
#include <string>

#include "arbor/backends.hpp"
#include "arbor/bench.hpp"
#include "arbor/exec.hpp"
#include "arbor/search.hpp"

using namespace arbor;

namespace {

const char* kW1 =
    "def fizz_buzz(n: int):\n"
    "    count = 0\n"
    "    for i in range(n):\n"
    "        if i % 11 == 0:\n"
    "            count += str(i).count('7')\n"
    "        if i % 13 == 0:\n"
    "            count += str(i).count('7')\n"
    "    return count";

const char* kW2 =
    "def fizz_buzz(n: int):\n"
    "    count = 0\n"
    "    for i in range(n):\n"
    "        if i % 11 == 0 or i % 13 == 0:\n"
    "            count += str(i).count('7')\n"
    "    return count";

Problem golden_problem() {
  Problem p;
  p.id = "humaneval-36";
  p.description =
      "Write a function fizz_buzz(n) that returns the number of times the digit 7 "
      "appears in the decimal digits of the non-negative integers below n that are "
      "divisible by 11 or by 13.\n\nExamples:\nfizz_buzz(50) returns 0\n"
      "fizz_buzz(78) returns 2\nfizz_buzz(79) returns 3";
  p.entry_point = "fizz_buzz";
  p.judging_style = JudgingStyle::call_based;
  p.solution_language = "python";
  p.source_tag = "humaneval";
  p.visible_tests = {{"[50]", "0"}, {"[78]", "2"}, {"[79]", "3"}, {"[100]", "3"}};
  p.hidden_tests = {{"[0]", "0"}, {"[-3]", "0"}, {"[720]", "25"}, {"[1000]", "47"}};
  return p;
}

std::string scripted_reply(const llm::ChatRequest& request) {
  const std::string& tag = request.request_tag;
  const std::string& prompt = request.messages.back().text;
  if (tag == "thinker.strategies")
    return "1. Iterate over every integer below n, keep the ones divisible by 11 or "
           "by 13, and add up how often the digit 7 occurs in each kept number.\n"
        "2. Generate the multiples of 11 and the multiples of 13 below n, merge them "
           "into one collection without duplicates, then count digit-7 occurrences.\n"
        "3. Build one long string by concatenating all qualifying numbers and count "
           "the character 7 in that string.\n"
        "4. Extract digits arithmetically: repeatedly divide each qualifying number "
           "by ten and count remainders equal to seven.\n"
        "5. Keep a running total while scanning upward so repeated queries for "
           "growing n can reuse earlier work.";
  if (tag == "solver.generate")
    return std::string("```python\n") + kW1 + "\n```";
  if (tag == "critic.verify") {
    bool is_first = prompt.find("if i % 11 == 0 or i % 13 == 0") == std::string::npos;
    if (is_first)
      return "decision: reject\n"
             "rationale: The two divisibility branches add the digit count "
             "independently, so any number divisible by both 11 and 13 is counted "
             "twice; the visible tests stay below the first such overlap that "
             "contains a seven, which hides the fault.\n"
             "suggestion: Use one combined check so each qualifying number "
             "contributes its digit count exactly once, and keep returning zero "
             "for non-positive n.";
    return "decision: accept\n"
           "rationale: Each qualifying number is counted once through the combined "
           "check, digit counting handles multi-digit values, and non-positive n "
           "falls out of the empty range.";
  }
  if (tag == "thinker.reflections")
    return "1. The independent branches double-count numbers divisible by both 11 "
           "and 13; replace them with a single combined condition so every "
           "qualifying number contributes its digit-7 count exactly once.";
  if (tag == "debugger.refine")
    return std::string("```python\n") + kW2 + "\n```";
  throw Error(ErrorKind::config, "unexpected request tag in golden script: " + tag);
}

int die(const std::string& message) {
  std::fprintf(stderr, "mkgolden: %s\n", message.c_str());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  std::string out_dir = argc > 1 ? argv[1] : "golden";
  std::filesystem::create_directories(out_dir);

  Problem problem = golden_problem();
  const std::string problems_path = out_dir + "/humaneval36_problems.jsonl";
  const std::string transcript_path = out_dir + "/humaneval36_transcript.jsonl";
  bench::save_problems({problem}, problems_path);

  auto backend = std::make_shared<llm::ScriptedBackend>(scripted_reply, "golden-mock");
  llm::Gateway gateway(backend);
  gateway.record_to(transcript_path);

  agents::AgentConfig thinker, solver, debugger, critic;
  thinker.role = agents::AgentRole::thinker;
  solver.role = agents::AgentRole::solver;
  debugger.role = agents::AgentRole::debugger;
  critic.role = agents::AgentRole::critic;
  for (agents::AgentConfig* a : {&thinker, &solver, &debugger, &critic})
    a->model_id = "golden-mock";

  agents::AgentSuite suite(gateway, agents::PromptLibrary::builtin(), thinker, solver,
                           debugger, critic);
  exec::ProcessExecutor executor(ExecLimits{}, exec::BackendRegistry::with_defaults());
  search::SearchEngine engine(suite, executor);

  search::SearchConfig config;
  config.policy = search::Policy::critic_guided;
  config.budget = 20;
  config.max_depth = 5;
  config.max_width = 4;

  search::SearchResult result = engine.search(problem, config);

  // Sanity checks before shipping the fixture.
  if (result.terminated_by != search::Termination::accepted)
    return die("expected termination by acceptance");
  if (result.generations_used != 2) return die("expected exactly 2 generations");
  const Tree& tree = *result.tree;
  if (tree.node_count() != 2) return die("expected a 2-node tree");
  const SolutionNode& w1 = tree.node(1);
  const SolutionNode& w2 = tree.node(2);
  if (!w1.passed_visible() || !w2.passed_visible())
    return die("both candidates must pass visible tests");
  if (!w1.verdict || w1.verdict->decision != VerdictDecision::reject)
    return die("first candidate must be verify-rejected");
  if (!w2.verdict || w2.verdict->decision != VerdictDecision::accept)
    return die("second candidate must be verify-accepted");
  if (executor.run_hidden(w1.code, problem)) return die("W1 must fail hidden tests");
  if (!executor.run_hidden(w2.code, problem)) return die("W2 must pass hidden tests");

  auto hits = bench::audit_transcript_for_hidden_leaks(gateway.transcript(), {problem});
  if (!hits.empty())
    return die("hidden-test audit flagged " + std::to_string(hits.size()) +
               " prompt(s); first needle: " + hits.front().needle);

  std::printf("golden fixtures written:\n  %s\n  %s\n  transcript entries: %zu\n",
              problems_path.c_str(), transcript_path.c_str(),
              gateway.transcript().size());
  return 0;
}
