#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <fstream>

#include "arbor/agents.hpp"
#include "arbor/bench.hpp"
#include "arbor/exec.hpp"
#include "arbor/gateway.hpp"
#include "exec_corpus.hpp"
#include "support.hpp"

using namespace arbor;
using namespace arbor::exec;

namespace {

ProcessExecutor make_executor(std::int64_t timeout_ms = 5000,
                              std::int64_t memory_cap = std::int64_t{512} << 20,
                              int workers = 1) {
  ExecLimits limits;
  limits.per_test_timeout_ms = timeout_ms;
  limits.memory_cap_bytes = memory_cap;
  limits.workers = workers;
  return ProcessExecutor(limits, BackendRegistry::with_defaults());
}

}  // namespace

TEST_CASE("normalize_output: trailing whitespace and blank lines are stripped") {
  CHECK(normalize_output("42 \n", JudgingStyle::stdio_based) == "42");
  CHECK(normalize_output("a\nb\n\n", JudgingStyle::stdio_based) == "a\nb");
  CHECK(normalize_output("x\t \r\n", JudgingStyle::stdio_based) == "x");
  CHECK(normalize_output("", JudgingStyle::stdio_based) == "");
  // interior structure is untouched
  CHECK(normalize_output("a b\nc", JudgingStyle::stdio_based) == "a b\nc");
  CHECK(normalize_output("a\n\nb", JudgingStyle::stdio_based) == "a\n\nb");
}

TEST_CASE("normalize_output: no numeric tolerance anywhere") {
  CHECK(normalize_output("1.0", JudgingStyle::call_based) ==
        normalize_output("1.0", JudgingStyle::call_based));
  CHECK(normalize_output("1.0", JudgingStyle::call_based) !=
        normalize_output("1.00", JudgingStyle::call_based));
}

TEST_CASE("fixture corpus: every hand-labeled outcome matches exactly") {
  ::setenv("ARBOR_SECRET_TOKEN", "super-secret-do-not-leak", 1);
  for (const test::ExecFixture& fixture : test::exec_corpus()) {
    CAPTURE(fixture.name);
    ProcessExecutor executor = make_executor(fixture.timeout_ms);
    Problem problem = test::fixture_problem(fixture);
    ExecutionFeedback fb = executor.run_visible(fixture.code, problem);
    REQUIRE(fb.results.size() == fixture.cases.size());
    CHECK(fb.total == static_cast<int>(fixture.cases.size()));
    int want_pass = 0;
    for (std::size_t i = 0; i < fixture.cases.size(); ++i) {
      CAPTURE(i);
      CAPTURE(fb.results[i].diagnostic);
      CHECK(fb.results[i].outcome == fixture.cases[i].want);
      CHECK(fb.results[i].input == fixture.cases[i].input);
      if (fixture.cases[i].want == TestOutcome::pass) ++want_pass;
      if (fixture.cases[i].want == TestOutcome::timeout)
        CHECK(!fb.results[i].actual.has_value());
    }
    CHECK(fb.pass_count == want_pass);
  }
}

TEST_CASE("timeouts finish well inside ten times the configured limit") {
  ProcessExecutor executor = make_executor(100);
  Problem problem = test::fixture_problem(test::exec_corpus()[4]);  // busy_loop
  auto start = std::chrono::steady_clock::now();
  ExecutionFeedback fb = executor.run_visible("while True:\n    pass", problem);
  auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - start)
                  .count();
  REQUIRE(fb.results.size() == 1);
  CHECK(fb.results[0].outcome == TestOutcome::timeout);
  CHECK(wall < 1000);  // 10x the 100 ms limit
}

TEST_CASE("memory cap turns allocation bombs into runtime errors") {
  ProcessExecutor executor = make_executor(10000, std::int64_t{256} << 20);
  Problem p;
  p.id = "hog";
  p.description = "d";
  p.judging_style = JudgingStyle::stdio_based;
  p.solution_language = "python";
  p.visible_tests = {{"", "ok"}};
  p.hidden_tests = {{"", "ok"}};
  ExecutionFeedback fb =
      executor.run_visible("b = bytearray(400 * 1000 * 1000)\nprint('ok')", p);
  REQUIRE(fb.results.size() == 1);
  CHECK(fb.results[0].outcome == TestOutcome::runtime_error);
}

TEST_CASE("missing language backend is a configuration error") {
  ProcessExecutor executor = make_executor();
  Problem p = test::simple_problem();
  p.solution_language = "cobol";
  CHECK_THROWS_AS(executor.run_visible("x", p), Error);
}

TEST_CASE("unrunnable interpreter yields setup_error for every test") {
  BackendRegistry registry;
  LanguageBackend broken;
  broken.run_command = {"definitely-not-a-real-interpreter-xyz", "{file}"};
  broken.shim_template = "{code}\n# {entry_point}\n";
  registry.register_backend("python", broken);
  ExecLimits limits;
  ProcessExecutor executor(limits, registry);
  Problem p = test::simple_problem();
  ExecutionFeedback fb = executor.run_visible("def classify(x):\n    return x", p);
  for (const TestResult& r : fb.results) CHECK(r.outcome == TestOutcome::setup_error);
  CHECK(fb.pass_count == 0);
}

TEST_CASE("deterministic candidates produce identical feedback on repeat runs") {
  ProcessExecutor executor = make_executor();
  Problem problem = test::fixture_problem(test::exec_corpus()[2]);  // wrong output
  ExecutionFeedback a = executor.run_visible(test::exec_corpus()[2].code, problem);
  ExecutionFeedback b = executor.run_visible(test::exec_corpus()[2].code, problem);
  REQUIRE(a.results.size() == b.results.size());
  for (std::size_t i = 0; i < a.results.size(); ++i) {
    CHECK(a.results[i].outcome == b.results[i].outcome);
    CHECK(a.results[i].actual == b.results[i].actual);
    CHECK(a.results[i].diagnostic == b.results[i].diagnostic);
  }
}

TEST_CASE("tests are isolated: one candidate cannot see another's files") {
  ProcessExecutor executor = make_executor();
  Problem p;
  p.id = "iso";
  p.description = "d";
  p.judging_style = JudgingStyle::stdio_based;
  p.solution_language = "python";
  p.visible_tests = {{"", "clean"}};
  p.hidden_tests = {{"", "clean"}};

  ExecutionFeedback wrote = executor.run_visible(
      "open('marker.txt', 'w').write('x')\nprint('clean')", p);
  CHECK(wrote.results[0].outcome == TestOutcome::pass);

  ExecutionFeedback checked = executor.run_visible(
      "import os\nprint('clean' if not os.path.exists('marker.txt') else 'dirty')", p);
  CHECK(checked.results[0].outcome == TestOutcome::pass);
}

TEST_CASE("a candidate that destroys its working directory cannot hurt the harness") {
  ProcessExecutor executor = make_executor();
  Problem p;
  p.id = "rmrf";
  p.description = "d";
  p.judging_style = JudgingStyle::stdio_based;
  p.solution_language = "python";
  p.visible_tests = {{"", "ok"}, {"", "ok"}};
  p.hidden_tests = {{"", "ok"}};
  ExecutionFeedback fb = executor.run_visible(
      "import os, shutil\nprint('ok')\nshutil.rmtree(os.getcwd(), ignore_errors=True)",
      p);
  // each test runs in its own fresh directory; wrecking one leaves the other intact
  CHECK(fb.results[0].outcome == TestOutcome::pass);
  CHECK(fb.results[1].outcome == TestOutcome::pass);
}

TEST_CASE("per-candidate parallel execution keeps results in test order") {
  ProcessExecutor executor = make_executor(5000, std::int64_t{512} << 20, 4);
  Problem p;
  p.id = "par";
  p.description = "d";
  p.entry_point = "f";
  p.judging_style = JudgingStyle::call_based;
  p.solution_language = "python";
  for (int i = 0; i < 8; ++i)
    p.visible_tests.push_back({"[" + std::to_string(i) + "]", std::to_string(i * i)});
  p.hidden_tests = {{"[1]", "1"}};
  ExecutionFeedback fb = executor.run_visible("def f(x):\n    return x * x", p);
  REQUIRE(fb.results.size() == 8);
  CHECK(fb.pass_count == 8);
  for (int i = 0; i < 8; ++i)
    CHECK(fb.results[i].input == "[" + std::to_string(i) + "]");
}

TEST_CASE("run_hidden: all-pass, failure, empty code, and missing hidden tests") {
  ProcessExecutor executor = make_executor();
  Problem p;
  p.id = "hid";
  p.description = "d";
  p.entry_point = "f";
  p.judging_style = JudgingStyle::call_based;
  p.solution_language = "python";
  p.visible_tests = {{"[1]", "1"}};
  p.hidden_tests = {{"[2]", "2"}, {"[3]", "3"}};
  CHECK(executor.run_hidden("def f(x):\n    return x", p));
  CHECK(!executor.run_hidden("def f(x):\n    return x + 1", p));
  CHECK(!executor.run_hidden("", p));  // degenerate input: setup/runtime failure
  Problem no_hidden = p;
  no_hidden.hidden_tests.clear();
  CHECK_THROWS_AS(executor.run_hidden("def f(x):\n    return x", no_hidden), Error);
}

TEST_CASE("diagnostics are capped and only relative paths appear in tracebacks") {
  ProcessExecutor executor = make_executor();
  Problem p = test::fixture_problem(test::exec_corpus()[3]);  // raises ValueError
  ExecutionFeedback fb = executor.run_visible(test::exec_corpus()[3].code, p);
  REQUIRE(fb.results.size() == 1);
  CHECK(fb.results[0].diagnostic.size() <= 2003);  // 2000 + ellipsis
  CHECK(fb.results[0].diagnostic.find("ValueError") != std::string::npos);
  // The candidate runs as a relative "main.py": no scratch paths leak into
  // diagnostics, which keeps snapshots byte-reproducible across runs.
  CHECK(fb.results[0].diagnostic.find("/main.py") == std::string::npos);
  CHECK(fb.results[0].diagnostic.find("main.py") != std::string::npos);
}

TEST_CASE("golden candidates: first solution fails hidden tests, the refined one passes") {
  const std::string root = ARBOR_SOURCE_DIR;
  auto problems = bench::load_problems(root + "/golden/humaneval36_problems.jsonl");
  REQUIRE(problems.size() == 1);
  llm::Transcript transcript =
      llm::Transcript::load(root + "/golden/humaneval36_transcript.jsonl");
  std::string w1, w2;
  for (const llm::TranscriptEntry& e : transcript.entries()) {
    if (e.request_tag == "solver.generate")
      w1 = *agents::detail::extract_single_code_block(e.response_text);
    if (e.request_tag == "debugger.refine")
      w2 = *agents::detail::extract_single_code_block(e.response_text);
  }
  REQUIRE(!w1.empty());
  REQUIRE(!w2.empty());
  ProcessExecutor executor = make_executor();
  CHECK(executor.run_visible(w1, problems[0]).all_passed());
  CHECK(executor.run_visible(w2, problems[0]).all_passed());
  CHECK(!executor.run_hidden(w1, problems[0]));  // the false positive
  CHECK(executor.run_hidden(w2, problems[0]));
}
