#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "arbor/gateway.hpp"
#include "arbor/prompts.hpp"
#include "arbor/tree.hpp"
#include "arbor/types.hpp"

namespace arbor::agents {

enum class AgentRole { thinker, solver, debugger, critic };

const char* to_string(AgentRole role);

struct AgentConfig {
  AgentRole role = AgentRole::thinker;
  std::string model_id = "default";
  double temperature = 0.0;
  int max_output_tokens = 4096;
  int max_strategies_cap = 5;   // thinker only
  int max_reflections_cap = 3;  // thinker only

  void validate() const;
};

// Visible-only projection of a problem. Agents are constructed over this view
// so no code path can put hidden tests into a prompt.
struct ProblemView {
  std::string id;
  std::string description;
  std::string language;
  std::optional<std::string> entry_point;
  std::vector<TestCase> visible_tests;

  static ProblemView of(const Problem& problem);
};

enum class SolvePromptFlavor { plain, chain_of_thought };

// The four role agents as prompt builders plus strict response parsers. Each
// operation wraps one gateway call (plus at most one re-prompt on a parse
// failure) and returns a typed result or throws a typed error.
class AgentSuite {
 public:
  AgentSuite(llm::Gateway& gateway, PromptLibrary prompts, AgentConfig thinker,
             AgentConfig solver, AgentConfig debugger, AgentConfig critic);

  // Numbered-list strategies; the model decides how many, capped at the
  // caller-supplied cap (the critic-guided engine passes the configured
  // thinker cap; fixed-shape policies pass their width or budget). Exact
  // duplicates are dropped before the cap applies.
  std::vector<Strategy> thinker_strategies(const ProblemView& problem, int cap);

  // One additional strategy conditioned on everything proposed so far, or
  // nullopt when the model declines (reply NONE) or repeats itself.
  std::optional<Strategy> thinker_more_strategy(const ProblemView& problem,
                                                const std::vector<Strategy>& prior);

  // Diagnoses for a failing or verify-rejected node; 1..cap reflections.
  std::vector<Reflection> thinker_reflections(const ProblemView& problem,
                                              const SolutionNode& node,
                                              const ExecutionFeedback& feedback,
                                              int cap,
                                              const std::vector<Reflection>& prior);

  std::string solver_generate(const ProblemView& problem, const Strategy& strategy);
  std::string solver_unguided(const ProblemView& problem, SolvePromptFlavor flavor);

  std::string debugger_refine(const ProblemView& problem, const SolutionNode& node,
                              const Reflection& reflection,
                              const ExecutionFeedback& feedback);

  // For nodes failing at least one visible test; never returns accept.
  CriticFeedback critic_evaluate(const ProblemView& problem, const SolutionNode& node,
                                 const ExecutionFeedback& feedback);

  // For nodes passing every visible test; accept or reject only.
  Verdict critic_verify(const ProblemView& problem, const SolutionNode& node,
                        const ExecutionFeedback& feedback);

  llm::TokenUsage tokens_used() const { return tokens_; }

  const AgentConfig& thinker_config() const { return thinker_; }
  const AgentConfig& solver_config() const { return solver_; }

  void set_solver_temperature(double t) { solver_.temperature = t; }

  // Deterministic prompt fragments, exposed for prompt-content tests.
  static std::string format_visible_tests(const ProblemView& problem);
  static std::string format_exec_feedback(const ExecutionFeedback& feedback);
  static std::string format_strategies(const std::vector<Strategy>& strategies);

 private:
  llm::ChatResponse call(const AgentConfig& agent, const std::string& system_text,
                         const std::string& user_text, const std::string& tag);
  llm::ChatResponse recall(const AgentConfig& agent, const std::string& system_text,
                           const std::string& user_text, const std::string& first_reply,
                           const std::string& reminder, const std::string& tag);

  llm::Gateway& gateway_;
  PromptLibrary prompts_;
  AgentConfig thinker_, solver_, debugger_, critic_;
  llm::TokenUsage tokens_;
};

namespace detail {

// "1. foo" / "2) bar" items; continuation lines attach to the current item.
std::vector<std::string> parse_numbered_list(const std::string& text);

// Exactly one fenced block, returned without the fences; nullopt otherwise.
std::optional<std::string> extract_single_code_block(const std::string& text);

// key: value lines, case-insensitive keys; later lines continue the previous
// value. Returns only the requested keys.
std::map<std::string, std::string> parse_labeled_fields(
    const std::string& text, const std::vector<std::string>& keys);

}  // namespace detail

}  // namespace arbor::agents
