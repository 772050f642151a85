#include "arbor/types.hpp"

namespace arbor {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::structural: return "structural";
    case ErrorKind::state: return "state";
    case ErrorKind::limit: return "limit";
    case ErrorKind::config: return "config";
    case ErrorKind::parse: return "parse";
    case ErrorKind::io: return "io";
    case ErrorKind::transport: return "transport";
    case ErrorKind::replay_miss: return "replay_miss";
    case ErrorKind::refusal: return "refusal";
    case ErrorKind::agent_parse: return "agent_parse";
    case ErrorKind::agent_invariant: return "agent_invariant";
  }
  return "?";
}

const char* to_string(JudgingStyle style) {
  return style == JudgingStyle::call_based ? "call_based" : "stdio_based";
}

JudgingStyle judging_style_from_string(const std::string& s) {
  if (s == "call_based") return JudgingStyle::call_based;
  if (s == "stdio_based") return JudgingStyle::stdio_based;
  throw Error(ErrorKind::parse, "unknown judging_style: " + s);
}

const char* to_string(TestOutcome outcome) {
  switch (outcome) {
    case TestOutcome::pass: return "pass";
    case TestOutcome::wrong_output: return "wrong_output";
    case TestOutcome::runtime_error: return "runtime_error";
    case TestOutcome::timeout: return "timeout";
    case TestOutcome::setup_error: return "setup_error";
  }
  return "?";
}

const char* to_string(CriticAction action) {
  switch (action) {
    case CriticAction::refine: return "refine";
    case CriticAction::abort_node: return "abort";
    case CriticAction::accept: return "accept";
  }
  return "?";
}

const char* to_string(VerdictDecision decision) {
  return decision == VerdictDecision::accept ? "accept" : "reject";
}

void Problem::validate() const {
  if (id.empty()) throw Error(ErrorKind::validation, "problem id is empty");
  if (description.empty())
    throw Error(ErrorKind::validation, "problem " + id + ": description is empty");
  if (visible_tests.empty())
    throw Error(ErrorKind::validation, "problem " + id + ": no visible tests");
  if (judging_style == JudgingStyle::call_based &&
      (!entry_point || entry_point->empty()))
    throw Error(ErrorKind::validation,
                "problem " + id + ": call_based judging requires an entry_point");
  if (solution_language.empty())
    throw Error(ErrorKind::validation, "problem " + id + ": no solution_language");
}

void ExecLimits::validate() const {
  if (per_test_timeout_ms <= 0 || memory_cap_bytes <= 0 || max_output_bytes <= 0 ||
      workers <= 0)
    throw Error(ErrorKind::validation, "exec limits must all be positive");
}

}  // namespace arbor
