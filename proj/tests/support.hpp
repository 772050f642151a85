// Shared helpers for the test suites: scripted gateway builders, a fake
// executor whose outcomes are controlled by the candidate code text, and
// small fixture factories.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "arbor/backends.hpp"
#include "arbor/exec.hpp"
#include "arbor/types.hpp"

namespace arbor::test {

inline Problem simple_problem(int visible = 2, int hidden = 2) {
  Problem p;
  p.id = "toy-1";
  p.description = "Echo the classification of the input token.";
  p.entry_point = "classify";
  p.judging_style = JudgingStyle::call_based;
  p.solution_language = "python";
  p.source_tag = "toy";
  for (int i = 0; i < visible; ++i)
    p.visible_tests.push_back({"[" + std::to_string(i) + "]", std::to_string(i % 2)});
  for (int i = 0; i < hidden; ++i)
    p.hidden_tests.push_back(
        {"[" + std::to_string(100 + i) + "]", std::to_string(i % 2)});
  return p;
}

// Executor for search-engine tests: pass/fail is decided by markers in the
// candidate code, no subprocesses involved.
//   "PASS_ALL"  -> every test passes
//   "PASS_K=k"  -> exactly k tests pass
//   otherwise   -> zero tests pass (wrong_output)
// Hidden behavior: "HIDDEN_OK" passes hidden, anything else fails.
class MarkerExecutor : public exec::CandidateExecutor {
 public:
  ExecutionFeedback run_visible(const std::string& code, const Problem& problem) override {
    int total = static_cast<int>(problem.visible_tests.size());
    int pass = 0;
    if (code.find("PASS_ALL") != std::string::npos) {
      pass = total;
    } else {
      std::size_t at = code.find("PASS_K=");
      if (at != std::string::npos) pass = std::atoi(code.c_str() + at + 7);
      if (pass > total) pass = total;
    }
    ExecutionFeedback fb;
    fb.total = total;
    fb.pass_count = pass;
    for (int i = 0; i < total; ++i) {
      TestResult r;
      r.input = problem.visible_tests[i].input;
      r.expected = problem.visible_tests[i].expected_output;
      if (i < pass) {
        r.outcome = TestOutcome::pass;
        r.actual = r.expected;
      } else {
        r.outcome = TestOutcome::wrong_output;
        r.actual = "bogus";
      }
      fb.results.push_back(std::move(r));
    }
    fb.wall_time_ms = 1;
    ++visible_runs;
    return fb;
  }

  bool run_hidden(const std::string& code, const Problem&) override {
    ++hidden_runs;
    return code.find("HIDDEN_OK") != std::string::npos;
  }

  int visible_runs = 0;
  int hidden_runs = 0;
};

// Deterministic xorshift for randomized property tests (seed-stable across
// platforms, unlike std::mt19937 distributions).
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed ? seed : 0x9e3779b97f4a7c15ull) {}
  std::uint64_t next() {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return state;
  }
  int below(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }
  bool chance(int percent) { return below(100) < percent; }
};

}  // namespace arbor::test
