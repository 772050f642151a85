#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "arbor/types.hpp"

namespace arbor {

using NodeId = std::uint32_t;
inline constexpr NodeId kRootId = 0;  // sentinel parent for depth-1 nodes

enum class NodeStatus { fresh, refining, aborted, accepted };

const char* to_string(NodeStatus status);

// One candidate program with its lineage and feedback.
struct SolutionNode {
  NodeId node_id = 0;
  NodeId parent = kRootId;
  int depth = 0;
  Strategy strategy;
  std::optional<Reflection> reflection;  // absent at depth 1, present deeper
  std::string code;
  std::optional<ExecutionFeedback> exec_feedback;
  std::optional<CriticFeedback> critic_feedback;
  std::optional<Verdict> verdict;
  std::optional<double> score;  // in [0,2]; set iff exec_feedback is set
  NodeStatus status = NodeStatus::fresh;
  std::uint32_t generation_index = 0;  // 1-based creation order under the budget
  std::vector<NodeId> children;        // creation order

  bool evaluated() const { return exec_feedback.has_value(); }
  bool passed_visible() const { return exec_feedback && exec_feedback->all_passed(); }
};

// Heterogeneous search tree: the root is the problem, every other node is a
// candidate solution. Single writer; snapshots may be shared read-only.
class Tree {
 public:
  Tree(Problem problem, int max_depth);

  const Problem& problem() const { return problem_; }
  int max_depth() const { return max_depth_; }
  std::size_t node_count() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

  NodeId add_node(NodeId parent, Strategy strategy,
                  std::optional<Reflection> reflection, std::string code);
  void attach_feedback(NodeId id, ExecutionFeedback exec,
                       std::optional<CriticFeedback> critic, double score);
  void attach_verdict(NodeId id, Verdict verdict);
  void set_status(NodeId id, NodeStatus next);

  const SolutionNode& node(NodeId id) const;
  int depth_of(NodeId id) const { return node(id).depth; }

  // Later-created siblings of the node, in creation order.
  std::vector<NodeId> siblings_after(NodeId id) const;

  // Accepted node if any, else the evaluated node with the highest score;
  // ties broken by visible passes, then by smaller generation_index.
  std::optional<NodeId> best_node() const;
  std::optional<NodeId> accepted_node() const { return accepted_; }

  const std::vector<SolutionNode>& nodes() const { return nodes_; }

  // Throws Error{validation} on any broken invariant; used by property tests
  // and by the search engine's internal assertions.
  void check_invariants() const;

  nlohmann::ordered_json to_json() const;
  std::string snapshot() const;  // stable, byte-reproducible dump

 private:
  SolutionNode& mutable_node(NodeId id);

  Problem problem_;
  int max_depth_;
  std::vector<SolutionNode> nodes_;  // index = node_id - 1
  std::optional<NodeId> accepted_;
};

// Validates the problem and returns an empty tree rooted at it.
Tree create_tree(Problem problem, int max_depth);

}  // namespace arbor
