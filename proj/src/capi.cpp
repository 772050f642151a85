#include "arbor/arbor.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "arbor/bench.hpp"
#include "arbor/error.hpp"
#include "arbor/exec.hpp"

namespace {

thread_local std::string t_last_error;

arbor_status status_for(const arbor::Error& e) {
  using arbor::ErrorKind;
  switch (e.kind()) {
    case ErrorKind::io: return ARBOR_ERR_IO;
    case ErrorKind::parse: return ARBOR_ERR_PARSE;
    case ErrorKind::config: return ARBOR_ERR_CONFIG;
    case ErrorKind::transport:
    case ErrorKind::replay_miss:
    case ErrorKind::refusal: return ARBOR_ERR_GATEWAY;
    case ErrorKind::state: return ARBOR_ERR_STATE;
    case ErrorKind::validation:
    case ErrorKind::structural:
    case ErrorKind::limit: return ARBOR_ERR_INVALID_ARGUMENT;
    case ErrorKind::agent_parse:
    case ErrorKind::agent_invariant: return ARBOR_ERR_GATEWAY;
  }
  return ARBOR_ERR_UNKNOWN;
}

template <typename F>
arbor_status guarded(F&& f) {
  try {
    t_last_error.clear();
    return f();
  } catch (const arbor::Error& e) {
    t_last_error = e.what();
    return status_for(e);
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return ARBOR_ERR_UNKNOWN;
  } catch (...) {
    t_last_error = "unknown failure";
    return ARBOR_ERR_UNKNOWN;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) return nullptr;
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

struct arbor_problem_set {
  std::vector<arbor::Problem> problems;
};

struct arbor_config {
  arbor::bench::RunSettings settings;
};

struct arbor_run {
  arbor::bench::BenchmarkRun run;
};

extern "C" {

const char* arbor_version(void) { return "0.1.0"; }

const char* arbor_last_error(void) { return t_last_error.c_str(); }

void arbor_string_free(char* s) { std::free(s); }

arbor_status arbor_problem_set_load(const char* path, arbor_problem_set** out) {
  return guarded([&]() -> arbor_status {
    if (!path || !out) {
      t_last_error = "null argument";
      return ARBOR_ERR_INVALID_ARGUMENT;
    }
    auto set = std::make_unique<arbor_problem_set>();
    set->problems = arbor::bench::load_problems(path);
    *out = set.release();
    return ARBOR_OK;
  });
}

size_t arbor_problem_set_size(const arbor_problem_set* set) {
  return set ? set->problems.size() : 0;
}

const char* arbor_problem_set_id(const arbor_problem_set* set, size_t index) {
  if (!set || index >= set->problems.size()) return nullptr;
  return set->problems[index].id.c_str();
}

void arbor_problem_set_free(arbor_problem_set* set) { delete set; }

arbor_status arbor_config_create(arbor_config** out) {
  return guarded([&]() -> arbor_status {
    if (!out) {
      t_last_error = "null argument";
      return ARBOR_ERR_INVALID_ARGUMENT;
    }
    *out = new arbor_config();
    return ARBOR_OK;
  });
}

arbor_status arbor_config_load(const char* path, arbor_config** out) {
  return guarded([&]() -> arbor_status {
    if (!path || !out) {
      t_last_error = "null argument";
      return ARBOR_ERR_INVALID_ARGUMENT;
    }
    auto config = std::make_unique<arbor_config>();
    config->settings = arbor::bench::RunSettings::load_file(path);
    *out = config.release();
    return ARBOR_OK;
  });
}

arbor_status arbor_config_set(arbor_config* config, const char* key, const char* value) {
  return guarded([&]() -> arbor_status {
    if (!config || !key || !value) {
      t_last_error = "null argument";
      return ARBOR_ERR_INVALID_ARGUMENT;
    }
    config->settings.apply_override(key, value);
    return ARBOR_OK;
  });
}

arbor_status arbor_config_to_json(const arbor_config* config, char** json_out) {
  return guarded([&]() -> arbor_status {
    if (!config || !json_out) {
      t_last_error = "null argument";
      return ARBOR_ERR_INVALID_ARGUMENT;
    }
    *json_out = dup_string(config->settings.to_json(true).dump(2));
    return ARBOR_OK;
  });
}

void arbor_config_free(arbor_config* config) { delete config; }

arbor_status arbor_run_execute(const arbor_problem_set* problems,
                               const arbor_config* config, arbor_progress_fn progress,
                               void* user, arbor_run** out) {
  return guarded([&]() -> arbor_status {
    if (!problems || !config || !out) {
      t_last_error = "null argument";
      return ARBOR_ERR_INVALID_ARGUMENT;
    }
    const arbor::bench::RunSettings& settings = config->settings;
    auto gateway = arbor::bench::make_gateway(settings);
    arbor::exec::ProcessExecutor executor(settings.exec_limits,
                                          arbor::exec::BackendRegistry::with_defaults(),
                                          settings.scratch_root);
    arbor::bench::ProgressFn fn;
    if (progress)
      fn = [&](const std::string& id, int completed, int total, int solved) {
        progress(id.c_str(), completed, total, solved, user);
      };
    auto run = std::make_unique<arbor_run>();
    run->run = arbor::bench::evaluate_run(problems->problems, settings, *gateway,
                                          executor, fn);
    std::size_t errors = 0;
    for (const auto& r : run->run.problems)
      if (!r.ok) ++errors;
    *out = run.release();
    if (errors) {
      t_last_error = std::to_string(errors) + " problem(s) failed";
      return ARBOR_ERR_PARTIAL;
    }
    return ARBOR_OK;
  });
}

double arbor_run_pass_at_1(const arbor_run* run) {
  if (!run || run->run.problems.empty()) return 0.0;
  return arbor::bench::pass_at_1(run->run);
}

size_t arbor_run_problem_count(const arbor_run* run) {
  return run ? run->run.problems.size() : 0;
}

size_t arbor_run_error_count(const arbor_run* run) {
  if (!run) return 0;
  size_t errors = 0;
  for (const auto& r : run->run.problems)
    if (!r.ok) ++errors;
  return errors;
}

arbor_status arbor_run_emit_report(const arbor_run* run, const char* out_dir) {
  return guarded([&]() -> arbor_status {
    if (!run || !out_dir) {
      t_last_error = "null argument";
      return ARBOR_ERR_INVALID_ARGUMENT;
    }
    arbor::bench::emit_report(run->run, out_dir);
    return ARBOR_OK;
  });
}

arbor_status arbor_run_summary_json(const arbor_run* run, char** json_out) {
  return guarded([&]() -> arbor_status {
    if (!run || !json_out) {
      t_last_error = "null argument";
      return ARBOR_ERR_INVALID_ARGUMENT;
    }
    const arbor::bench::BenchmarkRun& r = run->run;
    int solved = 0, errors = 0;
    long long generations = 0;
    for (const auto& p : r.problems) {
      if (!p.ok) { ++errors; continue; }
      if (p.selected_hidden_pass.value_or(false)) ++solved;
      if (p.result) generations += p.result->generations_used;
    }
    nlohmann::ordered_json j;
    j["run_id"] = r.run_id;
    j["policy"] = r.policy_name;
    j["budget"] = r.budget;
    j["problems"] = r.problems.size();
    j["solved"] = solved;
    j["errors"] = errors;
    j["pass_at_1"] = arbor::bench::pass_at_1(r);
    j["total_generations"] = generations;
    *json_out = dup_string(j.dump(2));
    return ARBOR_OK;
  });
}

void arbor_run_free(arbor_run* run) { delete run; }

arbor_status arbor_demo(const arbor_problem_set* problems, const arbor_config* config,
                        const char* problem_id, char** trace_out) {
  return guarded([&]() -> arbor_status {
    if (!problems || !config || !trace_out) {
      t_last_error = "null argument";
      return ARBOR_ERR_INVALID_ARGUMENT;
    }
    if (problems->problems.empty()) {
      t_last_error = "empty problem set";
      return ARBOR_ERR_INVALID_ARGUMENT;
    }
    const arbor::Problem* chosen = &problems->problems.front();
    if (problem_id) {
      chosen = nullptr;
      for (const auto& p : problems->problems)
        if (p.id == problem_id) chosen = &p;
      if (!chosen) {
        t_last_error = std::string("unknown problem id: ") + problem_id;
        return ARBOR_ERR_INVALID_ARGUMENT;
      }
    }
    const arbor::bench::RunSettings& settings = config->settings;
    auto gateway = arbor::bench::make_gateway(settings);
    arbor::exec::ProcessExecutor executor(settings.exec_limits,
                                          arbor::exec::BackendRegistry::with_defaults(),
                                          settings.scratch_root);
    arbor::agents::PromptLibrary prompts =
        settings.prompts_dir.empty()
            ? arbor::agents::PromptLibrary::builtin()
            : arbor::agents::PromptLibrary::from_dir(settings.prompts_dir);
    arbor::agents::AgentSuite agents(*gateway, prompts, settings.thinker,
                                     settings.solver, settings.debugger,
                                     settings.critic);
    arbor::search::SearchEngine engine(agents, executor);
    arbor::search::SearchResult result = engine.search(*chosen, settings.search);
    std::string trace = arbor::bench::render_tree_trace(*result.tree);
    trace += "terminated_by: " + std::string(arbor::search::to_string(result.terminated_by)) +
             ", generations_used: " + std::to_string(result.generations_used) + "\n";
    *trace_out = dup_string(trace);
    return ARBOR_OK;
  });
}

arbor_status arbor_report_recompute(const char* report_dir, char** summary_json_out) {
  return guarded([&]() -> arbor_status {
    if (!report_dir) {
      t_last_error = "null argument";
      return ARBOR_ERR_INVALID_ARGUMENT;
    }
    arbor::bench::BenchmarkRun run = arbor::bench::load_run_from_report(report_dir);
    arbor::bench::emit_report(run, report_dir);  // rewrites summary + curve
    if (summary_json_out) {
      int solved = 0, errors = 0;
      for (const auto& p : run.problems) {
        if (!p.ok) { ++errors; continue; }
        if (p.selected_hidden_pass.value_or(false)) ++solved;
      }
      nlohmann::ordered_json j;
      j["run_id"] = run.run_id;
      j["policy"] = run.policy_name;
      j["budget"] = run.budget;
      j["problems"] = run.problems.size();
      j["solved"] = solved;
      j["errors"] = errors;
      j["pass_at_1"] = arbor::bench::pass_at_1(run);
      *summary_json_out = dup_string(j.dump(2));
    }
    return ARBOR_OK;
  });
}

}  // extern "C"
