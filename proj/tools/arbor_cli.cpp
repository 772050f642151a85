// Command-line front end over the arbor C API. Verbs:
//   run    - execute a benchmark against a problems file
//   replay - run from a recorded transcript (backend=replay)
//   report - recompute metrics from an emitted report directory
//   demo   - search a single problem and print the tree trace
//
// Exit codes: 0 success, 1 partial failures, 2 configuration error.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "arbor/arbor.h"

namespace {

struct ConfigDeleter {
  void operator()(arbor_config* c) const { arbor_config_free(c); }
};
struct ProblemsDeleter {
  void operator()(arbor_problem_set* p) const { arbor_problem_set_free(p); }
};
struct RunDeleter {
  void operator()(arbor_run* r) const { arbor_run_free(r); }
};

using ConfigPtr = std::unique_ptr<arbor_config, ConfigDeleter>;
using ProblemsPtr = std::unique_ptr<arbor_problem_set, ProblemsDeleter>;
using RunPtr = std::unique_ptr<arbor_run, RunDeleter>;

struct CommonFlags {
  std::string config_path;
  std::string problems;
  std::string policy;
  int budget = -1;
  int depth = -1;
  int width = -1;
  std::string backend;
  std::string transcript;
  std::string record;
  std::string out_dir;
  int workers = -1;
  long long seed = -1;
  std::string prompts_dir;
  bool quiet = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags* flags, bool with_problems) {
  cmd->add_option("--config", flags->config_path, "JSON config file");
  if (with_problems)
    cmd->add_option("problems", flags->problems, "problems file (JSONL)");
  cmd->add_option("--policy", flags->policy,
                  "critic_guided|bfs|dfs|strategy_list|resample|direct|cot_single|reflexion");
  cmd->add_option("--budget", flags->budget, "generation budget per problem");
  cmd->add_option("--depth", flags->depth, "max search depth");
  cmd->add_option("--width", flags->width, "max search width");
  cmd->add_option("--backend", flags->backend, "live|mock|replay");
  cmd->add_option("--transcript", flags->transcript, "transcript for replay");
  cmd->add_option("--record", flags->record, "record completions to this transcript");
  cmd->add_option("--out", flags->out_dir, "report output directory");
  cmd->add_option("--workers", flags->workers, "parallel problems");
  cmd->add_option("--seed", flags->seed, "seed forwarded to the search config");
  cmd->add_option("--prompts", flags->prompts_dir, "prompt template override directory");
  cmd->add_flag("--quiet", flags->quiet, "suppress progress output");
}

int fail(const char* what) {
  std::fprintf(stderr, "arbor: %s: %s\n", what, arbor_last_error());
  return 2;
}

bool set_or_die(arbor_config* config, const char* key, const std::string& value) {
  if (arbor_config_set(config, key, value.c_str()) != ARBOR_OK) {
    std::fprintf(stderr, "arbor: --%s: %s\n", key, arbor_last_error());
    return false;
  }
  return true;
}

ConfigPtr build_config(const CommonFlags& flags, bool* ok) {
  *ok = false;
  arbor_config* raw = nullptr;
  arbor_status rc = flags.config_path.empty()
                        ? arbor_config_create(&raw)
                        : arbor_config_load(flags.config_path.c_str(), &raw);
  if (rc != ARBOR_OK) {
    std::fprintf(stderr, "arbor: config: %s\n", arbor_last_error());
    return nullptr;
  }
  ConfigPtr config(raw);
  if (!flags.policy.empty() && !set_or_die(raw, "policy", flags.policy)) return nullptr;
  if (flags.budget >= 0 && !set_or_die(raw, "budget", std::to_string(flags.budget)))
    return nullptr;
  if (flags.depth >= 0 && !set_or_die(raw, "max_depth", std::to_string(flags.depth)))
    return nullptr;
  if (flags.width >= 0 && !set_or_die(raw, "max_width", std::to_string(flags.width)))
    return nullptr;
  if (!flags.backend.empty() && !set_or_die(raw, "backend", flags.backend)) return nullptr;
  if (!flags.transcript.empty() && !set_or_die(raw, "transcript", flags.transcript))
    return nullptr;
  if (!flags.record.empty() && !set_or_die(raw, "record", flags.record)) return nullptr;
  if (!flags.out_dir.empty() && !set_or_die(raw, "out_dir", flags.out_dir)) return nullptr;
  if (flags.workers >= 0 && !set_or_die(raw, "workers", std::to_string(flags.workers)))
    return nullptr;
  if (flags.seed >= 0 && !set_or_die(raw, "seed", std::to_string(flags.seed)))
    return nullptr;
  if (!flags.prompts_dir.empty() && !set_or_die(raw, "prompts_dir", flags.prompts_dir))
    return nullptr;
  *ok = true;
  return config;
}

std::string config_string(const arbor_config* config, const char* key) {
  char* json = nullptr;
  if (arbor_config_to_json(config, &json) != ARBOR_OK || !json) return "";
  std::string text(json);
  arbor_string_free(json);
  // minimal scan: "key": "value"
  std::string needle = std::string("\"") + key + "\": \"";
  std::size_t pos = text.find(needle);
  if (pos == std::string::npos) return "";
  pos += needle.size();
  std::size_t end = text.find('"', pos);
  return end == std::string::npos ? "" : text.substr(pos, end - pos);
}

void progress_printer(const char* problem_id, int completed, int total, int solved,
                      void* user) {
  bool quiet = *static_cast<bool*>(user);
  if (quiet) return;
  std::fprintf(stderr, "[%d/%d] %s (solved so far: %d)\n", completed, total,
               problem_id, solved);
}

int do_run(const CommonFlags& flags) {
  bool ok = false;
  ConfigPtr config = build_config(flags, &ok);
  if (!ok) return 2;

  std::string problems_path = flags.problems;
  if (problems_path.empty()) problems_path = config_string(config.get(), "problems");
  if (problems_path.empty()) {
    std::fprintf(stderr, "arbor: no problems file (positional argument or config key)\n");
    return 2;
  }

  arbor_problem_set* raw_problems = nullptr;
  if (arbor_problem_set_load(problems_path.c_str(), &raw_problems) != ARBOR_OK)
    return fail("problems");
  ProblemsPtr problems(raw_problems);

  bool quiet = flags.quiet;
  arbor_run* raw_run = nullptr;
  arbor_status rc = arbor_run_execute(problems.get(), config.get(), progress_printer,
                                      &quiet, &raw_run);
  if (rc != ARBOR_OK && rc != ARBOR_ERR_PARTIAL) return fail("run");
  RunPtr run(raw_run);

  std::string out_dir = flags.out_dir;
  if (out_dir.empty()) out_dir = config_string(config.get(), "out_dir");
  if (out_dir.empty()) out_dir = "out";
  if (arbor_run_emit_report(run.get(), out_dir.c_str()) != ARBOR_OK)
    return fail("report");

  char* summary = nullptr;
  if (arbor_run_summary_json(run.get(), &summary) == ARBOR_OK && summary) {
    std::printf("%s\n", summary);
    arbor_string_free(summary);
  }
  std::fprintf(stderr, "report written to %s\n", out_dir.c_str());
  return rc == ARBOR_ERR_PARTIAL ? 1 : 0;
}

int do_report(const CommonFlags& flags) {
  std::string dir = flags.out_dir.empty() ? "out" : flags.out_dir;
  char* summary = nullptr;
  if (arbor_report_recompute(dir.c_str(), &summary) != ARBOR_OK) return fail("report");
  if (summary) {
    std::printf("%s\n", summary);
    arbor_string_free(summary);
  }
  return 0;
}

int do_demo(const CommonFlags& flags, const std::string& problem_id) {
  bool ok = false;
  ConfigPtr config = build_config(flags, &ok);
  if (!ok) return 2;

  std::string problems_path = flags.problems;
  if (problems_path.empty()) problems_path = config_string(config.get(), "problems");
  if (problems_path.empty()) {
    std::fprintf(stderr, "arbor: no problems file\n");
    return 2;
  }
  arbor_problem_set* raw_problems = nullptr;
  if (arbor_problem_set_load(problems_path.c_str(), &raw_problems) != ARBOR_OK)
    return fail("problems");
  ProblemsPtr problems(raw_problems);

  char* trace = nullptr;
  if (arbor_demo(problems.get(), config.get(),
                 problem_id.empty() ? nullptr : problem_id.c_str(), &trace) != ARBOR_OK)
    return fail("demo");
  if (trace) {
    std::printf("%s", trace);
    arbor_string_free(trace);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"agent-guided tree search for program synthesis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(arbor_version()));

  CommonFlags run_flags, replay_flags, report_flags, demo_flags;
  std::string demo_problem;

  CLI::App* run_cmd = app.add_subcommand("run", "execute a benchmark");
  add_common_flags(run_cmd, &run_flags, true);

  CLI::App* replay_cmd = app.add_subcommand("replay", "run from a recorded transcript");
  add_common_flags(replay_cmd, &replay_flags, true);

  CLI::App* report_cmd = app.add_subcommand("report", "recompute metrics from a report");
  report_cmd->add_option("--out", report_flags.out_dir, "report directory");

  CLI::App* demo_cmd = app.add_subcommand("demo", "single problem, verbose tree trace");
  add_common_flags(demo_cmd, &demo_flags, true);
  demo_cmd->add_option("--problem", demo_problem, "problem id (default: first)");

  CLI11_PARSE(app, argc, argv);

  if (run_cmd->parsed()) return do_run(run_flags);
  if (replay_cmd->parsed()) {
    replay_flags.backend = "replay";
    if (replay_flags.transcript.empty()) {
      std::fprintf(stderr, "arbor: replay requires --transcript\n");
      return 2;
    }
    return do_run(replay_flags);
  }
  if (report_cmd->parsed()) return do_report(report_flags);
  if (demo_cmd->parsed()) return do_demo(demo_flags, demo_problem);
  return 2;
}
