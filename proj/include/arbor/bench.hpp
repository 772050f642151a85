#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "arbor/backends.hpp"
#include "arbor/exec.hpp"
#include "arbor/search.hpp"

namespace arbor::bench {

// ---------------------------------------------------------------- problems

// JSONL, one record per line: {id, description, entry_point?, judging_style,
// solution_language, visible_tests[], hidden_tests[], source_tag}.
std::vector<Problem> load_problems(const std::string& path);
void save_problems(const std::vector<Problem>& problems, const std::string& path);

nlohmann::ordered_json problem_to_json(const Problem& problem);
Problem problem_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------- settings

// Everything a run needs: search knobs, agent configs, execution limits,
// backend selection, and benchmark-kit options. Loadable from a JSON file;
// individual keys can be overridden (CLI flags).
struct RunSettings {
  search::SearchConfig search;
  agents::AgentConfig thinker;
  agents::AgentConfig solver;
  agents::AgentConfig debugger;
  agents::AgentConfig critic;
  ExecLimits exec_limits;
  std::string backend = "mock";  // live | mock | replay
  std::string transcript_path;   // replay input
  std::string record_path;       // record output (optional)
  std::string problems_path;
  std::string out_dir = "out";
  std::string prompts_dir;  // optional template overrides
  std::string scratch_root;
  int workers = 1;
  llm::HttpBackendConfig live;

  RunSettings();

  static RunSettings from_json(const nlohmann::json& j);
  static RunSettings load_file(const std::string& path);
  void apply_override(const std::string& key, const std::string& value);
  nlohmann::ordered_json to_json(bool include_output_paths) const;
  void validate() const;
};

// ---------------------------------------------------------------- run data

struct ProblemReport {
  std::string problem_id;
  std::string source_tag;
  bool ok = false;
  std::string error;  // set when !ok
  std::optional<search::SearchResult> result;
  std::map<NodeId, bool> hidden_verdicts;  // cache for curve prefixes + selection
  std::optional<bool> selected_hidden_pass;
  llm::TokenUsage tokens;
};

struct BenchmarkRun {
  std::string run_id;  // content hash of config + problem ids; stable
  nlohmann::ordered_json config_snapshot;  // output locations excluded
  std::string policy_name;
  int budget = 20;
  std::vector<ProblemReport> problems;
};

struct CurvePoint {
  int budget_prefix = 0;   // 1..budget
  double pass_at_1 = 0.0;  // in [0,1]
};

using ProgressFn = std::function<void(const std::string& problem_id, int completed,
                                      int total, int solved)>;

// Builds the gateway described by the settings (live/mock/replay, recording).
std::unique_ptr<llm::Gateway> make_gateway(const RunSettings& settings);

// Runs the search on every problem (workers in parallel), then judges the
// selected candidate on hidden tests. Hidden tests are touched only here.
BenchmarkRun evaluate_run(const std::vector<Problem>& problems,
                          const RunSettings& settings, llm::Gateway& gateway,
                          exec::CandidateExecutor& executor,
                          const ProgressFn& progress = {});

double pass_at_1(const BenchmarkRun& run);

// One point per budget prefix 1..budget, selection frozen per policy rules.
std::vector<CurvePoint> cumulative_curve(const BenchmarkRun& run);

struct EmittedPaths {
  std::string problems_jsonl;
  std::string summary_csv;
  std::string curve_csv;
  std::string run_meta_json;
  std::string snapshots_dir;
};

// Writes per-problem JSONL, summary CSV, curve CSV, run metadata, and one
// tree snapshot per problem. Re-emitting the same run is byte-identical.
EmittedPaths emit_report(const BenchmarkRun& run, const std::string& out_dir);

// Rebuilds a run from an emitted report directory (for metric recomputation).
BenchmarkRun load_run_from_report(const std::string& out_dir);

// ---------------------------------------------------------------- auditing

struct AuditHit {
  std::string problem_id;
  std::string entry_key;
  std::string needle;
};

// Scans every prompt-side message in the transcript for hidden-test inputs
// and outputs. Needles shorter than 2 characters after trimming are skipped
// as unattributable. An empty result is the firewall guarantee.
std::vector<AuditHit> audit_transcript_for_hidden_leaks(
    const llm::Transcript& transcript, const std::vector<Problem>& problems);

// ---------------------------------------------------------------- display

std::string render_tree_trace(const Tree& tree);
std::string sanitize_file_component(const std::string& name);

}  // namespace arbor::bench
