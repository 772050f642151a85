#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arbor/agents.hpp"
#include "arbor/exec.hpp"
#include "arbor/tree.hpp"

namespace arbor::search {

enum class Policy {
  critic_guided,
  bfs,
  dfs,
  strategy_list,
  resample,
  direct,
  cot_single,
};

const char* to_string(Policy policy);
Policy policy_from_string(const std::string& name);

struct SearchConfig {
  Policy policy = Policy::critic_guided;
  int budget = 20;     // max candidate solutions (Solver + Debugger outputs)
  int max_depth = 5;   // d
  int max_width = 4;   // w
  bool verification_enabled = true;
  bool abort_enabled = true;
  bool critic_scoring_enabled = true;
  std::uint64_t seed = 0;  // forwarded to stochastic collaborators; unused by the engine

  void validate() const;
};

// Counts candidate solutions; incremented exactly once per code candidate
// produced by the Solver or the Debugger. Thinker and Critic calls are free.
struct BudgetLedger {
  int budget = 0;
  int used = 0;

  bool exhausted() const { return used >= budget; }
  int remaining() const { return budget - used; }
  void charge();
};

struct EventLogEntry {
  std::uint32_t generation_index = 0;
  NodeId node_id = 0;
  int visible_passed = 0;
  int visible_total = 0;
  bool passed_visible = false;
  double score = 0.0;
};

enum class Termination { accepted, budget_exhausted, strategies_exhausted };

const char* to_string(Termination termination);

struct SearchResult {
  std::optional<std::string> selected_code;
  std::optional<NodeId> selected_node;
  int generations_used = 0;
  Termination terminated_by = Termination::strategies_exhausted;
  std::shared_ptr<const Tree> tree;
  std::vector<EventLogEntry> event_log;  // one entry per candidate, in order
  std::optional<std::uint32_t> accepted_generation;
  std::optional<std::string> abort_note;  // set when a gateway hard failure cut the run short
};

// pass fraction plus adherence/5 when critic feedback is present and scoring
// is enabled; range [0,2].
double compute_score(const ExecutionFeedback& exec,
                     const std::optional<CriticFeedback>& critic,
                     bool critic_scoring_enabled = true);

// Linear refine chain: dfs with width 1 and depth = budget.
SearchConfig reflexion_preset(SearchConfig config);

class SearchEngine {
 public:
  SearchEngine(agents::AgentSuite& agents, exec::CandidateExecutor& executor);

  SearchResult search(const Problem& problem, const SearchConfig& config);

 private:
  agents::AgentSuite& agents_;
  exec::CandidateExecutor& executor_;
};

}  // namespace arbor::search
