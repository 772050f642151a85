#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memory>
#include <vector>

#include "arbor/agents.hpp"
#include "arbor/backends.hpp"
#include "support.hpp"

using namespace arbor;
using namespace arbor::agents;

namespace {

struct Capture {
  std::vector<llm::ChatRequest> requests;
  std::vector<std::string> replies;  // consumed in order; last reply repeats
};

struct SuiteHarness {
  explicit SuiteHarness(std::shared_ptr<Capture> capture)
      : cap(std::move(capture)),
        gateway(std::make_shared<llm::ScriptedBackend>([c = cap](const llm::ChatRequest& r) {
          c->requests.push_back(r);
          if (c->replies.empty()) return std::string("NONE");
          std::string reply = c->replies.front();
          if (c->replies.size() > 1) c->replies.erase(c->replies.begin());
          return reply;
        })),
        suite(gateway, PromptLibrary::builtin(), make_config(AgentRole::thinker),
              make_config(AgentRole::solver), make_config(AgentRole::debugger),
              make_config(AgentRole::critic)) {}

  static AgentConfig make_config(AgentRole role) {
    AgentConfig c;
    c.role = role;
    c.model_id = "test-model";
    return c;
  }

  std::shared_ptr<Capture> cap;
  llm::Gateway gateway;
  AgentSuite suite;
};

SolutionNode failing_node(const Problem& problem, int passed = 1) {
  SolutionNode node;
  node.node_id = 1;
  node.depth = 1;
  node.strategy = {1, "count pairs with a rolling window"};
  node.code = "def classify(x):\n    return 0";
  ExecutionFeedback fb;
  fb.total = static_cast<int>(problem.visible_tests.size());
  fb.pass_count = passed;
  for (int i = 0; i < fb.total; ++i) {
    TestResult r;
    r.input = problem.visible_tests[i].input;
    r.expected = problem.visible_tests[i].expected_output;
    if (i < passed) {
      r.outcome = TestOutcome::pass;
      r.actual = r.expected;
    } else {
      r.outcome = TestOutcome::wrong_output;
      r.actual = "7wrong7";
    }
    fb.results.push_back(r);
  }
  node.exec_feedback = fb;
  return node;
}

ExecutionFeedback passing_feedback(const Problem& problem) {
  ExecutionFeedback fb;
  fb.total = static_cast<int>(problem.visible_tests.size());
  fb.pass_count = fb.total;
  for (const TestCase& t : problem.visible_tests) {
    TestResult r;
    r.input = t.input;
    r.expected = t.expected_output;
    r.actual = t.expected_output;
    r.outcome = TestOutcome::pass;
    fb.results.push_back(r);
  }
  return fb;
}

}  // namespace

TEST_CASE("numbered-list parser handles minimal and messy input") {
  CHECK(detail::parse_numbered_list("1. brute force") ==
        std::vector<std::string>{"brute force"});
  auto items = detail::parse_numbered_list(
      "Here are ideas:\n1. first\n2) second\n   continuation line\n3. third\n");
  REQUIRE(items.size() == 3);
  CHECK(items[1] == "second continuation line");
  CHECK(detail::parse_numbered_list("no numbers here").empty());
}

TEST_CASE("code-block extraction accepts exactly one fenced block") {
  CHECK(*detail::extract_single_code_block("```python\nx = 1\n```") == "x = 1");
  CHECK(*detail::extract_single_code_block("prose\n```\na\nb\n```\ntrailing") == "a\nb");
  CHECK(!detail::extract_single_code_block("no blocks at all").has_value());
  CHECK(!detail::extract_single_code_block("```\na\n```\n```\nb\n```").has_value());
  CHECK(!detail::extract_single_code_block("```\nunclosed").has_value());
}

TEST_CASE("labeled-field parser is case-insensitive and joins continuations") {
  auto fields = detail::parse_labeled_fields(
      "Score: 3\nACTION: refine\nrationale: looks close\nstill wrong on edge\n",
      {"score", "action", "rationale", "suggestion"});
  CHECK(fields["score"] == "3");
  CHECK(fields["action"] == "refine");
  CHECK(fields["rationale"] == "looks close\nstill wrong on edge");
  CHECK(fields.count("suggestion") == 0);
}

TEST_CASE("thinker_strategies: single mock item parses to one strategy") {
  auto cap = std::make_shared<Capture>();
  cap->replies = {"1. brute force"};
  SuiteHarness h(cap);
  auto strategies = h.suite.thinker_strategies(ProblemView::of(test::simple_problem()), 5);
  REQUIRE(strategies.size() == 1);
  CHECK(strategies[0].ordinal == 1);
  CHECK(strategies[0].text == "brute force");
  CHECK(cap->requests.size() == 1);
  CHECK(cap->requests[0].request_tag == "thinker.strategies");
}

TEST_CASE("thinker_strategies: seven items with cap five keeps the first five") {
  auto cap = std::make_shared<Capture>();
  cap->replies = {"1. a\n2. b\n3. c\n4. d\n5. e\n6. f\n7. g"};
  SuiteHarness h(cap);
  auto strategies = h.suite.thinker_strategies(ProblemView::of(test::simple_problem()), 5);
  REQUIRE(strategies.size() == 5);
  CHECK(strategies.back().text == "e");
}

TEST_CASE("thinker_strategies: exact duplicates are dropped before the cap") {
  auto cap = std::make_shared<Capture>();
  cap->replies = {"1. same\n2. same\n3. other"};
  SuiteHarness h(cap);
  auto strategies = h.suite.thinker_strategies(ProblemView::of(test::simple_problem()), 5);
  REQUIRE(strategies.size() == 2);
  CHECK(strategies[0].text == "same");
  CHECK(strategies[1].text == "other");
  CHECK(strategies[1].ordinal == 2);
}

TEST_CASE("thinker_strategies: unparseable reply re-prompts once, then errors") {
  auto cap = std::make_shared<Capture>();
  cap->replies = {"no list here", "still no list"};
  SuiteHarness h(cap);
  CHECK_THROWS_AS(h.suite.thinker_strategies(ProblemView::of(test::simple_problem()), 5),
                  Error);
  REQUIRE(cap->requests.size() == 2);
  // The retry carries the first reply and a format reminder.
  CHECK(cap->requests[1].messages.size() == 4);
  CHECK(cap->requests[1].messages[2].text == "no list here");
}

TEST_CASE("thinker_strategies: recovery on the re-prompt") {
  auto cap = std::make_shared<Capture>();
  cap->replies = {"rambling preamble without items", "1. fixed"};
  SuiteHarness h(cap);
  auto strategies = h.suite.thinker_strategies(ProblemView::of(test::simple_problem()), 5);
  REQUIRE(strategies.size() == 1);
  CHECK(strategies[0].text == "fixed");
}

TEST_CASE("thinker_more_strategy: NONE, fresh item, and repeat behave distinctly") {
  Problem problem = test::simple_problem();
  std::vector<Strategy> prior = {{1, "existing plan"}};
  {
    auto cap = std::make_shared<Capture>();
    cap->replies = {"NONE"};
    SuiteHarness h(cap);
    CHECK(!h.suite.thinker_more_strategy(ProblemView::of(problem), prior).has_value());
  }
  {
    auto cap = std::make_shared<Capture>();
    cap->replies = {"2. brand new plan"};
    SuiteHarness h(cap);
    auto s = h.suite.thinker_more_strategy(ProblemView::of(problem), prior);
    REQUIRE(s.has_value());
    CHECK(s->ordinal == 2);
    CHECK(s->text == "brand new plan");
    CHECK(h.cap->requests[0].messages[1].text.find("existing plan") != std::string::npos);
  }
  {
    auto cap = std::make_shared<Capture>();
    cap->replies = {"2. existing plan"};
    SuiteHarness h(cap);
    CHECK(!h.suite.thinker_more_strategy(ProblemView::of(problem), prior).has_value());
  }
}

TEST_CASE("solver_generate: extracts the single fenced block verbatim") {
  auto cap = std::make_shared<Capture>();
  cap->replies = {"Sure thing.\n```python\nx = 1\n```"};
  SuiteHarness h(cap);
  std::string code = h.suite.solver_generate(ProblemView::of(test::simple_problem()),
                                             {1, "any strategy"});
  CHECK(code == "x = 1");
}

TEST_CASE("solver_generate: prose-only reply errors after one re-prompt") {
  auto cap = std::make_shared<Capture>();
  cap->replies = {"I would iterate over the input.", "Still just prose."};
  SuiteHarness h(cap);
  try {
    h.suite.solver_generate(ProblemView::of(test::simple_problem()), {1, "s"});
    FAIL("expected agent-parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::agent_parse);
  }
  CHECK(cap->requests.size() == 2);
}

TEST_CASE("solver prompt embeds the strategy and visible tests, never hidden ones") {
  Problem problem = test::simple_problem();
  problem.hidden_tests = {{"[777]", "SECRET-HIDDEN-VALUE"}};
  auto cap = std::make_shared<Capture>();
  cap->replies = {"```\nok\n```"};
  SuiteHarness h(cap);
  h.suite.solver_generate(ProblemView::of(problem), {1, "walk the array once"});
  const std::string& prompt = cap->requests[0].messages[1].text;
  CHECK(prompt.find("walk the array once") != std::string::npos);
  CHECK(prompt.find(problem.visible_tests[0].input) != std::string::npos);
  CHECK(prompt.find("SECRET-HIDDEN-VALUE") == std::string::npos);
  CHECK(prompt.find("[777]") == std::string::npos);
}

TEST_CASE("thinker_reflections: requires a failing test or rejecting verdict") {
  Problem problem = test::simple_problem();
  auto cap = std::make_shared<Capture>();
  cap->replies = {"1. tighten the loop bound"};
  SuiteHarness h(cap);
  SolutionNode healthy = failing_node(problem, static_cast<int>(problem.visible_tests.size()));
  healthy.exec_feedback->pass_count = healthy.exec_feedback->total;
  try {
    h.suite.thinker_reflections(ProblemView::of(problem), healthy,
                                *healthy.exec_feedback, 3, {});
    FAIL("expected invariant error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::agent_invariant);
  }
}

TEST_CASE("thinker_reflections: failing node prompt carries the failing test I/O") {
  Problem problem = test::simple_problem();
  auto cap = std::make_shared<Capture>();
  cap->replies = {"1. handle odd inputs separately\n2. guard the empty case"};
  SuiteHarness h(cap);
  SolutionNode node = failing_node(problem, 1);
  auto reflections =
      h.suite.thinker_reflections(ProblemView::of(problem), node, *node.exec_feedback, 3, {});
  REQUIRE(reflections.size() == 2);
  CHECK(reflections[0].ordinal == 1);
  const std::string& prompt = cap->requests[0].messages[1].text;
  const TestResult& failed = node.exec_feedback->results.back();
  CHECK(prompt.find(failed.input) != std::string::npos);
  CHECK(prompt.find(failed.expected) != std::string::npos);
  CHECK(prompt.find("7wrong7") != std::string::npos);
  CHECK(prompt.find(node.code) != std::string::npos);
}

TEST_CASE("thinker_reflections: verify-rejected node seeds from the suggestion") {
  Problem problem = test::simple_problem();
  auto cap = std::make_shared<Capture>();
  cap->replies = {"1. follow the reviewer hint"};
  SuiteHarness h(cap);
  SolutionNode node = failing_node(problem, static_cast<int>(problem.visible_tests.size()));
  node.exec_feedback->pass_count = node.exec_feedback->total;
  for (TestResult& r : node.exec_feedback->results) {
    r.outcome = TestOutcome::pass;
    r.actual = r.expected;
  }
  node.verdict = Verdict{VerdictDecision::reject, "overfits",
                         std::string("cover zeros and negatives")};
  auto reflections =
      h.suite.thinker_reflections(ProblemView::of(problem), node, *node.exec_feedback, 3, {});
  REQUIRE(reflections.size() == 1);
  CHECK(cap->requests[0].messages[1].text.find("cover zeros and negatives") !=
        std::string::npos);
}

TEST_CASE("thinker_reflections: prior reflections shift the ordinals") {
  Problem problem = test::simple_problem();
  auto cap = std::make_shared<Capture>();
  cap->replies = {"1. a different idea"};
  SuiteHarness h(cap);
  SolutionNode node = failing_node(problem, 0);
  std::vector<Reflection> prior = {{1, "first idea"}};
  auto reflections =
      h.suite.thinker_reflections(ProblemView::of(problem), node, *node.exec_feedback, 1, prior);
  REQUIRE(reflections.size() == 1);
  CHECK(reflections[0].ordinal == 2);
  CHECK(cap->requests[0].messages[1].text.find("first idea") != std::string::npos);
}

TEST_CASE("debugger_refine: prompt embeds all five conditioning elements") {
  Problem problem = test::simple_problem();
  auto cap = std::make_shared<Capture>();
  cap->replies = {"```\nfixed = True\n```"};
  SuiteHarness h(cap);
  SolutionNode node = failing_node(problem, 1);
  Reflection reflection{1, "swap the comparison operands"};
  std::string code = h.suite.debugger_refine(ProblemView::of(problem), node, reflection,
                                             *node.exec_feedback);
  CHECK(code == "fixed = True");
  const std::string& prompt = cap->requests[0].messages[1].text;
  CHECK(prompt.find(reflection.text) != std::string::npos);          // reflection
  CHECK(prompt.find(node.code) != std::string::npos);                // prior code
  CHECK(prompt.find(node.strategy.text) != std::string::npos);       // strategy
  CHECK(prompt.find(problem.description) != std::string::npos);      // problem
  const TestResult& failed = node.exec_feedback->results.back();     // feedback
  CHECK(prompt.find(failed.input) != std::string::npos);
  CHECK(prompt.find(failed.expected) != std::string::npos);
  CHECK(prompt.find(*failed.actual) != std::string::npos);
}

TEST_CASE("debugger_refine: echo backend makes refinement a no-op") {
  Problem problem = test::simple_problem();
  // Echo the code block already present in the prompt.
  auto backend = std::make_shared<llm::ScriptedBackend>([](const llm::ChatRequest& r) {
    const std::string& prompt = r.messages[1].text;
    std::size_t open = prompt.find("```\n");
    std::size_t close = prompt.find("\n```", open + 4);
    return prompt.substr(open, close + 4 - open);
  });
  llm::Gateway gw(backend);
  AgentSuite suite(gw, PromptLibrary::builtin(), SuiteHarness::make_config(AgentRole::thinker),
                   SuiteHarness::make_config(AgentRole::solver),
                   SuiteHarness::make_config(AgentRole::debugger),
                   SuiteHarness::make_config(AgentRole::critic));
  SolutionNode node = failing_node(problem, 0);
  std::string refined = suite.debugger_refine(ProblemView::of(problem), node,
                                              {1, "no-op"}, *node.exec_feedback);
  CHECK(refined == node.code);
}

TEST_CASE("critic_evaluate: strict parse of a well-formed reply") {
  Problem problem = test::simple_problem();
  auto cap = std::make_shared<Capture>();
  cap->replies = {"score: 4\naction: refine\nrationale: close but off by one\n"
                  "suggestion: start the range at zero"};
  SuiteHarness h(cap);
  SolutionNode node = failing_node(problem, 1);
  CriticFeedback fb = h.suite.critic_evaluate(ProblemView::of(problem), node,
                                              *node.exec_feedback);
  CHECK(fb.adherence_score == 4);
  CHECK(fb.action == CriticAction::refine);
  CHECK(fb.rationale == "close but off by one");
  REQUIRE(fb.suggested_improvements.has_value());
  CHECK(*fb.suggested_improvements == "start the range at zero");
}

TEST_CASE("critic_evaluate: abort replies parse cleanly") {
  Problem problem = test::simple_problem();
  auto cap = std::make_shared<Capture>();
  cap->replies = {"score: 0\naction: abort\nrationale: code ignores the strategy"};
  SuiteHarness h(cap);
  SolutionNode node = failing_node(problem, 0);
  CriticFeedback fb = h.suite.critic_evaluate(ProblemView::of(problem), node,
                                              *node.exec_feedback);
  CHECK(fb.adherence_score == 0);
  CHECK(fb.action == CriticAction::abort_node);
}

TEST_CASE("critic_evaluate: out-of-range score is a parse error") {
  Problem problem = test::simple_problem();
  auto cap = std::make_shared<Capture>();
  cap->replies = {"score: 6\naction: refine\nrationale: x",
                  "score: 6\naction: refine\nrationale: x"};
  SuiteHarness h(cap);
  SolutionNode node = failing_node(problem, 1);
  try {
    h.suite.critic_evaluate(ProblemView::of(problem), node, *node.exec_feedback);
    FAIL("expected agent-parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::agent_parse);
  }
}

TEST_CASE("critic_evaluate: accept on a failing node is an invariant error") {
  Problem problem = test::simple_problem();
  auto cap = std::make_shared<Capture>();
  cap->replies = {"score: 5\naction: accept\nrationale: ship it",
                  "score: 5\naction: accept\nrationale: ship it"};
  SuiteHarness h(cap);
  SolutionNode node = failing_node(problem, 0);
  try {
    h.suite.critic_evaluate(ProblemView::of(problem), node, *node.exec_feedback);
    FAIL("expected invariant error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::agent_invariant);
  }
}

TEST_CASE("critic_evaluate: rejects nodes that passed every visible test") {
  Problem problem = test::simple_problem();
  auto cap = std::make_shared<Capture>();
  SuiteHarness h(cap);
  SolutionNode node = failing_node(problem, 0);
  ExecutionFeedback ok = passing_feedback(problem);
  CHECK_THROWS_AS(h.suite.critic_evaluate(ProblemView::of(problem), node, ok), Error);
}

TEST_CASE("critic_verify: accept and reject verdicts parse; reject needs a suggestion") {
  Problem problem = test::simple_problem();
  SolutionNode node = failing_node(problem, 0);
  ExecutionFeedback ok = passing_feedback(problem);
  {
    auto cap = std::make_shared<Capture>();
    cap->replies = {"decision: accept\nrationale: covers the general case"};
    SuiteHarness h(cap);
    Verdict v = h.suite.critic_verify(ProblemView::of(problem), node, ok);
    CHECK(v.decision == VerdictDecision::accept);
  }
  {
    auto cap = std::make_shared<Capture>();
    cap->replies = {"decision: reject\nrationale: overfits\nsuggestion: handle "
                    "negative numbers"};
    SuiteHarness h(cap);
    Verdict v = h.suite.critic_verify(ProblemView::of(problem), node, ok);
    CHECK(v.decision == VerdictDecision::reject);
    CHECK(*v.suggested_improvements == "handle negative numbers");
  }
  {
    auto cap = std::make_shared<Capture>();
    cap->replies = {"decision: reject\nrationale: overfits",
                    "decision: reject\nrationale: overfits"};
    SuiteHarness h(cap);
    try {
      h.suite.critic_verify(ProblemView::of(problem), node, ok);
      FAIL("expected invariant error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::agent_invariant);
    }
  }
}

TEST_CASE("critic_verify: only for nodes passing every visible test") {
  Problem problem = test::simple_problem();
  auto cap = std::make_shared<Capture>();
  SuiteHarness h(cap);
  SolutionNode node = failing_node(problem, 1);
  CHECK_THROWS_AS(h.suite.critic_verify(ProblemView::of(problem), node,
                                        *node.exec_feedback),
                  Error);
}

TEST_CASE("prompt library: unknown placeholder and missing template are errors") {
  CHECK_THROWS_AS(PromptLibrary::render("hello {nope}", {}), Error);
  CHECK(PromptLibrary::render("a {x} b", {{"x", "{y}"}}) == "a {y} b");  // no re-scan
  PromptLibrary lib = PromptLibrary::builtin();
  CHECK_THROWS_AS(lib.text("no.such.template"), Error);
  CHECK(lib.has("solver.generate.user"));
}

TEST_CASE("prompt library: directory overrides replace builtin templates") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "arbor_prompt_override";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "solver.direct.user.txt");
    out << "custom {description} {visible_tests} {language}";
  }
  PromptLibrary lib = PromptLibrary::from_dir(dir.string());
  CHECK(lib.text("solver.direct.user").rfind("custom ", 0) == 0);
  // untouched templates still come from the builtin set
  CHECK(lib.text("critic.verify.user") == PromptLibrary::builtin().text("critic.verify.user"));
  fs::remove_all(dir);
}

TEST_CASE("prompt library: override missing a required placeholder is rejected") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "arbor_prompt_bad";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "debugger.refine.user.txt");
    out << "missing everything";
  }
  CHECK_THROWS_AS(PromptLibrary::from_dir(dir.string()), Error);
  fs::remove_all(dir);
}
