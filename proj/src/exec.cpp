#include "arbor/exec.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "arbor/error.hpp"
#include "arbor/log.hpp"
#include "arbor/prompts.hpp"
#include "arbor/subprocess.hpp"

namespace arbor::exec {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kMaxDiagnostic = 2000;

// Canonical rendering on the shim side: JSON with sorted keys and compact
// separators, repr() fallback for non-JSON values.
constexpr const char* kPythonShim = R"SHIM({code}

if __name__ == '__main__':
    import json as _json, sys as _sys
    _args = _json.loads(_sys.stdin.read() or '[]')
    _result = {entry_point}(*_args)
    try:
        _text = _json.dumps(_result, sort_keys=True, separators=(',', ':'),
                            ensure_ascii=False, allow_nan=False)
    except (TypeError, ValueError):
        _text = repr(_result)
    _sys.stdout.write(_text + '\n')
)SHIM";

std::string truncate_diag(std::string text) {
  if (text.size() > kMaxDiagnostic) {
    text.resize(kMaxDiagnostic);
    text += "...";
  }
  return text;
}

std::string tail_of(const std::string& text, std::size_t max_bytes = kMaxDiagnostic) {
  if (text.size() <= max_bytes) return text;
  return text.substr(text.size() - max_bytes);
}

// Scratch directories carry per-run counters; scrubbing them keeps
// diagnostics (and therefore tree snapshots) byte-identical across runs.
std::string scrub_paths(std::string text, const std::string& dir) {
  for (const std::string needle : {dir + "/", dir}) {
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos)
      text.erase(pos, needle.size());
  }
  return text;
}

std::atomic<std::uint64_t> g_scratch_counter{0};

}  // namespace

BackendRegistry BackendRegistry::with_defaults() {
  BackendRegistry registry;
  LanguageBackend python;
  python.run_command = {"python3", "{file}"};
  python.shim_template = kPythonShim;
  python.file_extension = ".py";
  registry.register_backend("python", std::move(python));
  return registry;
}

void BackendRegistry::register_backend(std::string language, LanguageBackend backend) {
  backends_[std::move(language)] = std::move(backend);
}

const LanguageBackend* BackendRegistry::find(const std::string& language) const {
  auto it = backends_.find(language);
  return it == backends_.end() ? nullptr : &it->second;
}

std::string normalize_output(const std::string& text, JudgingStyle /*style*/) {
  // Same rule for both styles: strip trailing whitespace on each line, then
  // drop trailing blank lines. call_based shim output is already canonical.
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
  for (std::string& line : lines) {
    std::size_t end = line.find_last_not_of(" \t\r");
    line = end == std::string::npos ? "" : line.substr(0, end + 1);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += "\n";
    out += lines[i];
  }
  return out;
}

ProcessExecutor::ProcessExecutor(ExecLimits limits, BackendRegistry registry,
                                 std::string scratch_root)
    : limits_(limits), registry_(std::move(registry)), scratch_root_(std::move(scratch_root)) {
  limits_.validate();
  if (scratch_root_.empty())
    scratch_root_ = (fs::temp_directory_path() / "arbor-exec").string();
}

ExecutionFeedback ProcessExecutor::run_visible(const std::string& code,
                                               const Problem& problem) {
  return run_tests(code, problem, problem.visible_tests);
}

bool ProcessExecutor::run_hidden(const std::string& code, const Problem& problem) {
  if (problem.hidden_tests.empty())
    throw Error(ErrorKind::validation,
                "problem " + problem.id + " has no hidden tests");
  ExecutionFeedback fb = run_tests(code, problem, problem.hidden_tests);
  return fb.all_passed();
}

ExecutionFeedback ProcessExecutor::run_tests(const std::string& code,
                                             const Problem& problem,
                                             const std::vector<TestCase>& tests) {
  const LanguageBackend* backend = registry_.find(problem.solution_language);
  if (!backend)
    throw Error(ErrorKind::config,
                "no execution backend registered for language '" +
                    problem.solution_language + "'");

  std::string program = code;
  if (problem.judging_style == JudgingStyle::call_based) {
    program = agents::PromptLibrary::render(
        backend->shim_template,
        {{"code", code}, {"entry_point", problem.entry_point.value_or("")}});
  }

  const std::string candidate_dir =
      (fs::path(scratch_root_) /
       ("cand-" + std::to_string(::getpid()) + "-" +
        std::to_string(g_scratch_counter.fetch_add(1))))
          .string();

  ExecutionFeedback feedback;
  feedback.total = static_cast<int>(tests.size());
  feedback.results.resize(tests.size());
  std::vector<std::int64_t> walls(tests.size(), 0);

  std::error_code ec;
  fs::create_directories(candidate_dir, ec);
  if (ec) {
    for (std::size_t i = 0; i < tests.size(); ++i) {
      TestResult& r = feedback.results[i];
      r.input = tests[i].input;
      r.expected = tests[i].expected_output;
      r.outcome = TestOutcome::setup_error;
      r.diagnostic = "cannot create scratch directory: " + ec.message();
    }
    return feedback;
  }

  auto run_one = [&](std::size_t index) {
    const TestCase& test = tests[index];
    TestResult result;
    result.input = test.input;
    result.expected = test.expected_output;

    // Each test gets a fresh directory and a private copy of the program so
    // one test cannot corrupt another.
    fs::path test_dir = fs::path(candidate_dir) / ("t" + std::to_string(index));
    const std::string file_name = "main" + backend->file_extension;
    std::error_code tec;
    fs::create_directories(test_dir, tec);
    bool wrote = false;
    if (!tec) {
      std::ofstream out(test_dir / file_name, std::ios::binary | std::ios::trunc);
      out << program;
      wrote = static_cast<bool>(out);
    }
    if (!wrote) {
      result.outcome = TestOutcome::setup_error;
      result.diagnostic = "cannot stage candidate file";
      feedback.results[index] = std::move(result);
      return;
    }

    SpawnRequest spawn;
    for (const std::string& part : backend->run_command) {
      if (part == "{file}")
        spawn.argv.push_back(file_name);  // relative: keeps diagnostics stable
      else
        spawn.argv.push_back(part);
    }
    spawn.stdin_data = test.input;
    spawn.workdir = test_dir.string();
    spawn.timeout_ms = limits_.per_test_timeout_ms;
    spawn.memory_cap_bytes = limits_.memory_cap_bytes;
    spawn.max_output_bytes = limits_.max_output_bytes;

    SpawnResult run = run_subprocess(spawn);
    run.stderr_text = scrub_paths(std::move(run.stderr_text), test_dir.string());

    if (run.spawn_failed) {
      result.outcome = TestOutcome::setup_error;
      result.diagnostic = truncate_diag(run.spawn_error);
    } else if (run.timed_out) {
      result.outcome = TestOutcome::timeout;
      result.diagnostic = "timed out after " +
                          std::to_string(limits_.per_test_timeout_ms) + " ms";
    } else if (run.exit_code != 0) {
      result.outcome = TestOutcome::runtime_error;
      result.actual = run.stdout_text;
      std::string diag = tail_of(run.stderr_text);
      if (diag.empty())
        diag = run.term_signal
                   ? "terminated by signal " + std::to_string(run.term_signal)
                   : "exited with status " + std::to_string(run.exit_code);
      result.diagnostic = truncate_diag(diag);
    } else {
      result.actual = run.stdout_text;
      bool equal = normalize_output(run.stdout_text, problem.judging_style) ==
                   normalize_output(test.expected_output, problem.judging_style);
      result.outcome = equal ? TestOutcome::pass : TestOutcome::wrong_output;
      if (!equal) result.diagnostic = truncate_diag(tail_of(run.stderr_text));
    }
    walls[index] = run.wall_ms;
    feedback.results[index] = std::move(result);
  };

  int workers = std::min<int>(limits_.workers, static_cast<int>(tests.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < tests.size(); ++i) run_one(i);
  } else {
    // Results land in fixed slots; only wall_time_ms needs the mutex.
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= tests.size()) return;
          run_one(i);
        }
      });
    for (std::thread& t : pool) t.join();
  }

  feedback.pass_count = 0;
  for (const TestResult& r : feedback.results)
    if (r.outcome == TestOutcome::pass) ++feedback.pass_count;
  for (std::int64_t w : walls) feedback.wall_time_ms += w;

  fs::remove_all(candidate_dir, ec);  // scratch cleaned after each candidate
  return feedback;
}

}  // namespace arbor::exec
