#include "arbor/search.hpp"

#include <algorithm>

#include "arbor/log.hpp"

namespace arbor::search {

const char* to_string(Policy policy) {
  switch (policy) {
    case Policy::critic_guided: return "critic_guided";
    case Policy::bfs: return "bfs";
    case Policy::dfs: return "dfs";
    case Policy::strategy_list: return "strategy_list";
    case Policy::resample: return "resample";
    case Policy::direct: return "direct";
    case Policy::cot_single: return "cot_single";
  }
  return "?";
}

Policy policy_from_string(const std::string& name) {
  for (Policy p : {Policy::critic_guided, Policy::bfs, Policy::dfs,
                   Policy::strategy_list, Policy::resample, Policy::direct,
                   Policy::cot_single})
    if (name == to_string(p)) return p;
  throw Error(ErrorKind::config, "unknown policy: " + name);
}

const char* to_string(Termination termination) {
  switch (termination) {
    case Termination::accepted: return "accepted";
    case Termination::budget_exhausted: return "budget_exhausted";
    case Termination::strategies_exhausted: return "strategies_exhausted";
  }
  return "?";
}

void SearchConfig::validate() const {
  if (budget < 1) throw Error(ErrorKind::config, "budget must be >= 1");
  if (max_depth < 1) throw Error(ErrorKind::config, "max_depth must be >= 1");
  if ((policy == Policy::bfs || policy == Policy::dfs) && max_width < 1)
    throw Error(ErrorKind::config, "bfs/dfs require max_width >= 1");
  if (max_width < 1) throw Error(ErrorKind::config, "max_width must be >= 1");
}

void BudgetLedger::charge() {
  if (used >= budget)
    throw Error(ErrorKind::limit, "generation budget exhausted");
  ++used;
}

double compute_score(const ExecutionFeedback& exec,
                     const std::optional<CriticFeedback>& critic,
                     bool critic_scoring_enabled) {
  double pass_fraction =
      exec.total > 0 ? static_cast<double>(exec.pass_count) / exec.total : 0.0;
  double adherence = 0.0;
  if (critic && critic_scoring_enabled) adherence = critic->adherence_score / 5.0;
  return pass_fraction + adherence;
}

SearchConfig reflexion_preset(SearchConfig config) {
  config.policy = Policy::dfs;
  config.max_width = 1;
  config.max_depth = config.budget;
  return config;
}

namespace {

bool gateway_hard_failure(ErrorKind kind) {
  return kind == ErrorKind::transport || kind == ErrorKind::replay_miss ||
         kind == ErrorKind::refusal;
}

bool agent_soft_failure(ErrorKind kind) {
  return kind == ErrorKind::agent_parse || kind == ErrorKind::agent_invariant;
}

// One search run over one tree. Strictly sequential: every decision depends
// on the previous candidate's feedback.
class Driver {
 public:
  Driver(const Problem& problem, const SearchConfig& config,
         agents::AgentSuite& agents, exec::CandidateExecutor& executor)
      : problem_(problem),
        view_(agents::ProblemView::of(problem)),
        config_(config),
        agents_(agents),
        executor_(executor),
        tree_(create_tree(problem, config.max_depth)) {
    ledger_.budget = config.budget;
    // Repeated agent-parse failures consume no budget; this cap guarantees
    // termination regardless of how the model misbehaves.
    attempt_cap_ = 2 * config.budget + 5;
  }

  SearchResult run() {
    try {
      switch (config_.policy) {
        case Policy::critic_guided: run_critic_guided(); break;
        case Policy::bfs: run_bfs(); break;
        case Policy::dfs: run_dfs(); break;
        case Policy::strategy_list: run_strategy_list(); break;
        case Policy::resample: run_resample(); break;
        case Policy::direct: run_single(agents::SolvePromptFlavor::plain); break;
        case Policy::cot_single:
          run_single(agents::SolvePromptFlavor::chain_of_thought);
          break;
      }
    } catch (const Error& e) {
      if (!gateway_hard_failure(e.kind())) throw;
      abort_note_ = std::string(to_string(e.kind())) + ": " + e.what();
      log::warn("search aborted for " + problem_.id + ": " + *abort_note_);
    }
    return finish();
  }

 private:
  struct Produced {
    NodeId id;
    ExecutionFeedback fb;
  };

  // --- plumbing ---------------------------------------------------------

  template <typename F>
  auto soft(F&& f) -> std::optional<decltype(f())> {
    try {
      return f();
    } catch (const Error& e) {
      if (!agent_soft_failure(e.kind())) throw;
      log::warn("agent failure on " + problem_.id + ": " + e.what());
      return std::nullopt;
    }
  }

  bool out_of_steam() const {
    return accepted_ || ledger_.exhausted() || attempts_ >= attempt_cap_;
  }

  template <typename CodeFn>
  std::optional<Produced> produce(NodeId parent, Strategy strategy,
                                  std::optional<Reflection> reflection,
                                  CodeFn&& code_fn) {
    if (out_of_steam()) return std::nullopt;
    ++attempts_;
    std::optional<std::string> code = soft(code_fn);
    if (!code) return std::nullopt;
    NodeId id = tree_.add_node(parent, std::move(strategy), std::move(reflection),
                               std::move(*code));
    ledger_.charge();
    ExecutionFeedback fb = executor_.run_visible(tree_.node(id).code, problem_);
    return Produced{id, std::move(fb)};
  }

  void attach_and_log(NodeId id, ExecutionFeedback fb,
                      std::optional<CriticFeedback> critic) {
    double score = compute_score(fb, critic, config_.critic_scoring_enabled);
    EventLogEntry entry;
    entry.generation_index = tree_.node(id).generation_index;
    entry.node_id = id;
    entry.visible_passed = fb.pass_count;
    entry.visible_total = fb.total;
    entry.passed_visible = fb.all_passed();
    entry.score = score;
    tree_.attach_feedback(id, std::move(fb), std::move(critic), score);
    log_.push_back(entry);
  }

  void accept(NodeId id) {
    tree_.set_status(id, NodeStatus::accepted);
    accepted_ = true;
    accepted_generation_ = tree_.node(id).generation_index;
  }

  // --- critic-guided search --------------------------------------------

  void run_critic_guided() {
    std::vector<Strategy> strategies;
    if (auto initial = soft([&] {
          return agents_.thinker_strategies(
              view_, agents_.thinker_config().max_strategies_cap);
        }))
      strategies = std::move(*initial);

    std::size_t next = 0;
    bool more_available = true;
    while (!out_of_steam()) {
      std::optional<Strategy> strategy;
      if (next < strategies.size()) {
        strategy = strategies[next++];
      } else if (more_available) {
        // The strategy list is consumed lazily; once it runs dry the Thinker
        // is asked for one more at a time, conditioned on all priors.
        auto more = soft([&] { return agents_.thinker_more_strategy(view_, strategies); });
        if (!more || !*more) {
          more_available = false;
          break;
        }
        strategies.push_back(**more);
        strategy = strategies.back();
        next = strategies.size();
      } else {
        break;
      }
      auto produced = produce(kRootId, *strategy, std::nullopt, [&] {
        return agents_.solver_generate(view_, *strategy);
      });
      if (!produced) continue;  // parse failure: move to the next strategy
      explore(std::move(*produced));
    }
  }

  void explore(Produced produced) {
    NodeId id = produced.id;
    if (produced.fb.all_passed()) {
      attach_and_log(id, std::move(produced.fb), std::nullopt);
      if (!config_.verification_enabled) {
        accept(id);  // ablation: every visible-pass solution is final
        return;
      }
      auto verdict = soft([&] {
        return agents_.critic_verify(view_, tree_.node(id),
                                     *tree_.node(id).exec_feedback);
      });
      if (!verdict) return;  // unusable verdict: keep the node, move on
      tree_.attach_verdict(id, *verdict);
      if (verdict->decision == VerdictDecision::accept) {
        accept(id);
        return;
      }
      spawn_refinements(id);  // rejected: refine along the suggestion
      return;
    }

    auto critic = soft([&] {
      return agents_.critic_evaluate(view_, tree_.node(id), produced.fb);
    });
    if (!critic) {
      // Parse failure counts as an abort decision.
      attach_and_log(id, std::move(produced.fb), std::nullopt);
      tree_.set_status(id, NodeStatus::aborted);
      return;
    }
    CriticAction action = critic->action;
    attach_and_log(id, std::move(produced.fb), std::move(*critic));
    if (action == CriticAction::abort_node && config_.abort_enabled) {
      // Prune; exploration retraces to the sibling nodes.
      tree_.set_status(id, NodeStatus::aborted);
      return;
    }
    if (tree_.node(id).depth >= config_.max_depth) {
      tree_.set_status(id, NodeStatus::aborted);  // still failing at max depth
      return;
    }
    if (!spawn_refinements(id)) tree_.set_status(id, NodeStatus::aborted);
  }

  // Children are explored depth-first before moving on; returns whether any
  // refinement child was spawned.
  bool spawn_refinements(NodeId id) {
    if (tree_.node(id).depth >= config_.max_depth) return false;
    auto reflections = soft([&] {
      return agents_.thinker_reflections(view_, tree_.node(id),
                                         *tree_.node(id).exec_feedback,
                                         agents_.thinker_config().max_reflections_cap,
                                         {});
    });
    if (!reflections || reflections->empty()) return false;
    bool spawned = false;
    tree_.set_status(id, NodeStatus::refining);
    for (const Reflection& reflection : *reflections) {
      if (out_of_steam()) break;
      auto child = produce(id, tree_.node(id).strategy, reflection, [&] {
        return agents_.debugger_refine(view_, tree_.node(id), reflection,
                                       *tree_.node(id).exec_feedback);
      });
      if (!child) continue;
      spawned = true;
      explore(std::move(*child));
      if (accepted_) break;
    }
    return spawned;
  }

  // --- fixed-shape policies (no critic) ----------------------------------

  void run_bfs() {
    const int width = config_.max_width;
    std::vector<NodeId> level = seed_level(width);
    for (int depth = 2; depth <= config_.max_depth && !level.empty(); ++depth) {
      if (out_of_steam()) return;
      std::vector<NodeId> next_level;
      for (NodeId parent : level) {
        if (out_of_steam()) return;
        expand_children(parent, width, /*depth_first=*/false, &next_level);
        if (accepted_) return;
      }
      level = std::move(next_level);
    }
  }

  void run_dfs() {
    // Strategies are requested up front, but each root candidate is only
    // generated when depth-first traversal reaches it.
    auto strategies =
        soft([&] { return agents_.thinker_strategies(view_, config_.max_width); });
    if (!strategies) return;
    for (const Strategy& strategy : *strategies) {
      if (out_of_steam()) return;
      auto produced = produce(kRootId, strategy, std::nullopt, [&] {
        return agents_.solver_generate(view_, strategy);
      });
      if (!produced) continue;
      NodeId id = produced->id;
      bool passed = produced->fb.all_passed();
      attach_and_log(id, std::move(produced->fb), std::nullopt);
      if (passed) {
        accept(id);
        return;
      }
      dfs_expand(id);
      if (accepted_) return;
    }
  }

  void dfs_expand(NodeId id) {
    if (tree_.node(id).depth >= config_.max_depth) return;
    std::vector<Reflection> used;
    for (int j = 0; j < config_.max_width; ++j) {
      if (out_of_steam()) return;
      auto reflections = soft([&] {
        return agents_.thinker_reflections(view_, tree_.node(id),
                                           *tree_.node(id).exec_feedback, 1, used);
      });
      if (!reflections || reflections->empty()) return;
      Reflection reflection = reflections->front();
      used.push_back(reflection);
      tree_.set_status(id, NodeStatus::refining);
      auto child = produce(id, tree_.node(id).strategy, reflection, [&] {
        return agents_.debugger_refine(view_, tree_.node(id), reflection,
                                       *tree_.node(id).exec_feedback);
      });
      if (!child) continue;
      NodeId child_id = child->id;
      bool passed = child->fb.all_passed();
      attach_and_log(child_id, std::move(child->fb), std::nullopt);
      if (passed) {
        accept(child_id);  // no-critic selection: first visible pass wins
        return;
      }
      dfs_expand(child_id);
      if (accepted_) return;
    }
  }

  // Generates up to `width` depth-1 candidates from up-front strategies.
  std::vector<NodeId> seed_level(int width) {
    std::vector<NodeId> level;
    auto strategies = soft([&] { return agents_.thinker_strategies(view_, width); });
    if (!strategies) return level;
    for (const Strategy& strategy : *strategies) {
      if (out_of_steam()) break;
      auto produced = produce(kRootId, strategy, std::nullopt, [&] {
        return agents_.solver_generate(view_, strategy);
      });
      if (!produced) continue;
      bool passed = produced->fb.all_passed();
      NodeId id = produced->id;
      attach_and_log(id, std::move(produced->fb), std::nullopt);
      if (passed) {
        accept(id);
        break;
      }
      level.push_back(id);
    }
    return level;
  }

  // One breadth level under `parent`: up to `width` reflection children.
  void expand_children(NodeId parent, int width, bool /*depth_first*/,
                       std::vector<NodeId>* out) {
    auto reflections = soft([&] {
      return agents_.thinker_reflections(view_, tree_.node(parent),
                                         *tree_.node(parent).exec_feedback, width, {});
    });
    if (!reflections || reflections->empty()) return;
    tree_.set_status(parent, NodeStatus::refining);
    int made = 0;
    for (const Reflection& reflection : *reflections) {
      if (made >= width || out_of_steam()) return;
      auto child = produce(parent, tree_.node(parent).strategy, reflection, [&] {
        return agents_.debugger_refine(view_, tree_.node(parent), reflection,
                                       *tree_.node(parent).exec_feedback);
      });
      if (!child) continue;
      ++made;
      NodeId id = child->id;
      bool passed = child->fb.all_passed();
      attach_and_log(id, std::move(child->fb), std::nullopt);
      if (passed) {
        accept(id);
        return;
      }
      if (out) out->push_back(id);
    }
  }

  void run_strategy_list() {
    auto strategies =
        soft([&] { return agents_.thinker_strategies(view_, config_.budget); });
    if (!strategies) return;
    for (const Strategy& strategy : *strategies) {
      if (out_of_steam()) return;
      auto produced = produce(kRootId, strategy, std::nullopt, [&] {
        return agents_.solver_generate(view_, strategy);
      });
      if (!produced) continue;
      bool passed = produced->fb.all_passed();
      NodeId id = produced->id;
      attach_and_log(id, std::move(produced->fb), std::nullopt);
      if (passed) {
        accept(id);
        return;
      }
    }
  }

  void run_resample() {
    Strategy placeholder{1, "independent sample on the bare problem"};
    while (!out_of_steam()) {
      auto produced = produce(kRootId, placeholder, std::nullopt, [&] {
        return agents_.solver_unguided(view_, agents::SolvePromptFlavor::plain);
      });
      if (!produced) continue;
      bool passed = produced->fb.all_passed();
      NodeId id = produced->id;
      attach_and_log(id, std::move(produced->fb), std::nullopt);
      if (passed) {
        accept(id);
        return;
      }
    }
  }

  void run_single(agents::SolvePromptFlavor flavor) {
    Strategy placeholder{1, flavor == agents::SolvePromptFlavor::plain
                                ? "single direct solution"
                                : "reason step by step, then solve"};
    auto produced = produce(kRootId, placeholder, std::nullopt, [&] {
      return agents_.solver_unguided(view_, flavor);
    });
    if (!produced) return;
    bool passed = produced->fb.all_passed();
    NodeId id = produced->id;
    attach_and_log(id, std::move(produced->fb), std::nullopt);
    if (passed) accept(id);
  }

  // --- result assembly ----------------------------------------------------

  SearchResult finish() {
    tree_.check_invariants();
    SearchResult result;
    result.generations_used = ledger_.used;
    if (accepted_) {
      result.terminated_by = Termination::accepted;
      result.accepted_generation = accepted_generation_;
    } else if (ledger_.exhausted()) {
      result.terminated_by = Termination::budget_exhausted;
    } else {
      result.terminated_by = Termination::strategies_exhausted;
    }
    result.selected_node = tree_.best_node();
    if (result.selected_node)
      result.selected_code = tree_.node(*result.selected_node).code;
    result.event_log = std::move(log_);
    result.abort_note = abort_note_;
    result.tree = std::make_shared<const Tree>(std::move(tree_));
    return result;
  }

  const Problem& problem_;
  agents::ProblemView view_;
  const SearchConfig& config_;
  agents::AgentSuite& agents_;
  exec::CandidateExecutor& executor_;
  Tree tree_;
  BudgetLedger ledger_;
  std::vector<EventLogEntry> log_;
  std::optional<std::string> abort_note_;
  bool accepted_ = false;
  std::uint32_t accepted_generation_ = 0;
  int attempts_ = 0;
  int attempt_cap_ = 0;
};

}  // namespace

SearchEngine::SearchEngine(agents::AgentSuite& agents, exec::CandidateExecutor& executor)
    : agents_(agents), executor_(executor) {}

SearchResult SearchEngine::search(const Problem& problem, const SearchConfig& config) {
  config.validate();
  problem.validate();
  Driver driver(problem, config, agents_, executor_);
  return driver.run();
}

}  // namespace arbor::search
