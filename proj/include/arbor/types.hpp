#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arbor/error.hpp"

namespace arbor {

enum class JudgingStyle { call_based, stdio_based };

const char* to_string(JudgingStyle style);
JudgingStyle judging_style_from_string(const std::string& s);

struct TestCase {
  std::string input;
  std::string expected_output;  // literal text, compared after normalization
};

// A coding task: the statement, the tests the agents may see, and the tests
// reserved for final evaluation. This is the root of every search tree.
struct Problem {
  std::string id;
  std::string description;
  std::optional<std::string> entry_point;  // required for call_based judging
  std::vector<TestCase> visible_tests;
  std::vector<TestCase> hidden_tests;
  JudgingStyle judging_style = JudgingStyle::call_based;
  std::string solution_language = "python";
  std::string source_tag;

  // Throws Error{validation} when an invariant is broken.
  void validate() const;
};

struct Strategy {
  int ordinal = 0;  // unique per problem, 1-based
  std::string text;
};

struct Reflection {
  int ordinal = 0;  // unique per parent node, 1-based
  std::string text;
};

enum class TestOutcome { pass, wrong_output, runtime_error, timeout, setup_error };

const char* to_string(TestOutcome outcome);

struct TestResult {
  std::string input;
  std::string expected;
  std::optional<std::string> actual;  // absent for timeout / setup_error
  TestOutcome outcome = TestOutcome::setup_error;
  std::string diagnostic;  // truncated stderr / exception text, <= 2000 chars
};

struct ExecutionFeedback {
  std::vector<TestResult> results;  // one per test, in test order
  int pass_count = 0;
  int total = 0;
  std::int64_t wall_time_ms = 0;

  bool all_passed() const { return total > 0 && pass_count == total; }
};

enum class CriticAction { refine, abort_node, accept };

const char* to_string(CriticAction action);

struct CriticFeedback {
  int adherence_score = 0;  // 0..5, how robustly the code implements its strategy
  CriticAction action = CriticAction::refine;
  std::string rationale;
  std::optional<std::string> suggested_improvements;
};

enum class VerdictDecision { accept, reject };

const char* to_string(VerdictDecision decision);

struct Verdict {
  VerdictDecision decision = VerdictDecision::reject;
  std::string rationale;
  std::optional<std::string> suggested_improvements;  // non-empty when rejecting
};

struct ExecLimits {
  std::int64_t per_test_timeout_ms = 5000;
  std::int64_t memory_cap_bytes = std::int64_t{512} << 20;
  std::int64_t max_output_bytes = std::int64_t{1} << 20;
  int workers = 1;  // tests of one candidate may run in parallel

  void validate() const;
};

}  // namespace arbor
