#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace arbor::exec {

struct SpawnRequest {
  std::vector<std::string> argv;  // argv[0] resolved via the sanitized PATH
  std::string stdin_data;
  std::string workdir;
  std::int64_t timeout_ms = 5000;
  std::int64_t memory_cap_bytes = std::int64_t{512} << 20;
  std::int64_t max_output_bytes = std::int64_t{1} << 20;
};

struct SpawnResult {
  bool spawn_failed = false;
  std::string spawn_error;
  int exit_code = -1;
  int term_signal = 0;
  bool timed_out = false;
  std::string stdout_text;
  std::string stderr_text;
  bool stdout_truncated = false;
  bool stderr_truncated = false;
  std::int64_t wall_ms = 0;
};

// Runs one command in a fresh process group with a sanitized environment,
// an address-space cap, a wall-clock deadline, and capped output capture.
// The child is SIGKILLed (whole group) on deadline. Never throws for
// candidate faults; spawn_failed covers harness-side setup problems.
SpawnResult run_subprocess(const SpawnRequest& request);

}  // namespace arbor::exec
