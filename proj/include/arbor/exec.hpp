#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "arbor/types.hpp"

namespace arbor::exec {

// How to run candidates for one solution language.
struct LanguageBackend {
  std::vector<std::string> run_command;  // e.g. {"python3", "{file}"}
  std::string shim_template;  // call_based wrapper; placeholders {code} {entry_point}
  std::string file_extension = ".py";
};

class BackendRegistry {
 public:
  static BackendRegistry with_defaults();  // registers "python"

  void register_backend(std::string language, LanguageBackend backend);
  const LanguageBackend* find(const std::string& language) const;

 private:
  std::map<std::string, LanguageBackend> backends_;
};

// stdio_based: strip trailing whitespace per line, drop trailing blank lines.
// call_based outputs are already canonical renderings from the shim; the same
// trailing-whitespace rule is applied. No numeric tolerance anywhere.
std::string normalize_output(const std::string& text, JudgingStyle style);

class CandidateExecutor {
 public:
  virtual ~CandidateExecutor() = default;

  // Runs every visible test in its own subprocess; never raises on candidate
  // faults. Throws Error{config} when the language has no backend.
  virtual ExecutionFeedback run_visible(const std::string& code,
                                        const Problem& problem) = 0;

  // True iff every hidden test passes. Benchmark-kit use only.
  virtual bool run_hidden(const std::string& code, const Problem& problem) = 0;
};

class ProcessExecutor final : public CandidateExecutor {
 public:
  ProcessExecutor(ExecLimits limits, BackendRegistry registry,
                  std::string scratch_root = "");

  ExecutionFeedback run_visible(const std::string& code,
                                const Problem& problem) override;
  bool run_hidden(const std::string& code, const Problem& problem) override;

  // Shared path: run an arbitrary test list (visible or hidden).
  ExecutionFeedback run_tests(const std::string& code, const Problem& problem,
                              const std::vector<TestCase>& tests);

  const ExecLimits& limits() const { return limits_; }

 private:
  ExecLimits limits_;
  BackendRegistry registry_;
  std::string scratch_root_;
};

}  // namespace arbor::exec
