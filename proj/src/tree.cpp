#include "arbor/tree.hpp"

#include <algorithm>
#include <unordered_set>

namespace arbor {

namespace {

std::string node_label(NodeId id) { return "node " + std::to_string(id); }

}  // namespace

const char* to_string(NodeStatus status) {
  switch (status) {
    case NodeStatus::fresh: return "fresh";
    case NodeStatus::refining: return "refining";
    case NodeStatus::aborted: return "aborted";
    case NodeStatus::accepted: return "accepted";
  }
  return "?";
}

Tree::Tree(Problem problem, int max_depth)
    : problem_(std::move(problem)), max_depth_(max_depth) {
  if (max_depth_ < 1)
    throw Error(ErrorKind::validation, "max_depth must be >= 1");
}

Tree create_tree(Problem problem, int max_depth) {
  problem.validate();
  return Tree(std::move(problem), max_depth);
}

const SolutionNode& Tree::node(NodeId id) const {
  if (id == kRootId || id > nodes_.size())
    throw Error(ErrorKind::structural, "unknown " + node_label(id));
  return nodes_[id - 1];
}

SolutionNode& Tree::mutable_node(NodeId id) {
  return const_cast<SolutionNode&>(node(id));
}

NodeId Tree::add_node(NodeId parent, Strategy strategy,
                      std::optional<Reflection> reflection, std::string code) {
  int depth = 1;
  if (parent != kRootId) {
    depth = node(parent).depth + 1;  // throws on unknown parent
  }
  if (depth > max_depth_)
    throw Error(ErrorKind::limit, "adding under " + node_label(parent) +
                                      " would exceed max depth " +
                                      std::to_string(max_depth_));
  if (parent == kRootId && reflection)
    throw Error(ErrorKind::validation, "depth-1 nodes carry no reflection");
  if (parent != kRootId && !reflection)
    throw Error(ErrorKind::validation,
                "nodes below depth 1 require a reflection");
  if (strategy.ordinal < 1 || strategy.text.empty())
    throw Error(ErrorKind::validation, "strategy must have ordinal >= 1 and text");

  SolutionNode n;
  n.node_id = static_cast<NodeId>(nodes_.size() + 1);
  n.parent = parent;
  n.depth = depth;
  n.strategy = std::move(strategy);
  n.reflection = std::move(reflection);
  n.code = std::move(code);
  n.generation_index = n.node_id;  // contiguous 1..N creation order
  nodes_.push_back(std::move(n));
  if (parent != kRootId) mutable_node(parent).children.push_back(nodes_.back().node_id);
  return nodes_.back().node_id;
}

void Tree::attach_feedback(NodeId id, ExecutionFeedback exec,
                           std::optional<CriticFeedback> critic, double score) {
  SolutionNode& n = mutable_node(id);
  if (n.status != NodeStatus::fresh && n.status != NodeStatus::refining)
    throw Error(ErrorKind::state,
                node_label(id) + " is " + to_string(n.status) +
                    "; feedback may only be attached to fresh/refining nodes");
  if (n.exec_feedback)
    throw Error(ErrorKind::state, node_label(id) + " already has feedback");
  if (score < 0.0 || score > 2.0)
    throw Error(ErrorKind::validation, "score must lie in [0,2]");
  n.exec_feedback = std::move(exec);
  n.critic_feedback = std::move(critic);
  n.score = score;
}

void Tree::attach_verdict(NodeId id, Verdict verdict) {
  SolutionNode& n = mutable_node(id);
  if (!n.exec_feedback)
    throw Error(ErrorKind::state, node_label(id) + " has no execution feedback");
  if (n.verdict)
    throw Error(ErrorKind::state, node_label(id) + " already has a verdict");
  if (verdict.decision == VerdictDecision::reject &&
      (!verdict.suggested_improvements || verdict.suggested_improvements->empty()))
    throw Error(ErrorKind::validation, "rejecting verdict requires a suggestion");
  n.verdict = std::move(verdict);
}

void Tree::set_status(NodeId id, NodeStatus next) {
  SolutionNode& n = mutable_node(id);
  if (n.status == next) return;
  if (n.status == NodeStatus::accepted || n.status == NodeStatus::aborted)
    throw Error(ErrorKind::state, node_label(id) + " status is final");
  if (next == NodeStatus::accepted) {
    if (accepted_)
      throw Error(ErrorKind::state, "tree already has an accepted node");
    accepted_ = id;
  }
  n.status = next;
}

std::vector<NodeId> Tree::siblings_after(NodeId id) const {
  const SolutionNode& n = node(id);
  std::vector<NodeId> out;
  if (n.parent == kRootId) {
    for (const SolutionNode& other : nodes_)
      if (other.parent == kRootId && other.generation_index > n.generation_index)
        out.push_back(other.node_id);
    return out;  // depth-1 nodes are created in order, so this is ordered
  }
  const SolutionNode& parent = node(n.parent);
  bool seen = false;
  for (NodeId child : parent.children) {
    if (seen) out.push_back(child);
    if (child == id) seen = true;
  }
  return out;
}

std::optional<NodeId> Tree::best_node() const {
  if (accepted_) return accepted_;
  std::optional<NodeId> best;
  for (const SolutionNode& n : nodes_) {
    if (!n.score) continue;
    if (!best) {
      best = n.node_id;
      continue;
    }
    const SolutionNode& b = node(*best);
    double sn = *n.score, sb = *b.score;
    if (sn > sb) {
      best = n.node_id;
    } else if (sn == sb) {
      int pn = n.exec_feedback->pass_count, pb = b.exec_feedback->pass_count;
      if (pn > pb) best = n.node_id;
      // equal score and passes: keep the earlier generation_index (already held)
    }
  }
  return best;
}

void Tree::check_invariants() const {
  int accepted_count = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const SolutionNode& n = nodes_[i];
    if (n.node_id != i + 1)
      throw Error(ErrorKind::validation, "node ids are not contiguous");
    if (n.generation_index != n.node_id)
      throw Error(ErrorKind::validation,
                  "generation_index does not match creation order");
    if (n.parent != kRootId) {
      const SolutionNode& p = node(n.parent);
      if (p.generation_index >= n.generation_index)
        throw Error(ErrorKind::validation, "parent created after child");
      if (n.depth != p.depth + 1)
        throw Error(ErrorKind::validation, "depth inconsistent with parent");
      if (!n.reflection)
        throw Error(ErrorKind::validation, "deep node lacks a reflection");
    } else {
      if (n.depth != 1)
        throw Error(ErrorKind::validation, "depth-1 node with wrong depth");
      if (n.reflection)
        throw Error(ErrorKind::validation, "depth-1 node carries a reflection");
    }
    if (n.depth > max_depth_)
      throw Error(ErrorKind::validation, "node exceeds max depth");
    if (n.score.has_value() != n.exec_feedback.has_value())
      throw Error(ErrorKind::validation, "score must be set iff feedback is set");
    if (n.score && (*n.score < 0.0 || *n.score > 2.0))
      throw Error(ErrorKind::validation, "score out of range");
    if (n.status == NodeStatus::accepted) ++accepted_count;
  }
  if (accepted_count > 1)
    throw Error(ErrorKind::validation, "more than one accepted node");
  if (accepted_ && (accepted_count != 1 ||
                    node(*accepted_).status != NodeStatus::accepted))
    throw Error(ErrorKind::validation, "accepted bookkeeping inconsistent");
}

nlohmann::ordered_json Tree::to_json() const {
  nlohmann::ordered_json doc;
  doc["problem_id"] = problem_.id;
  doc["max_depth"] = max_depth_;
  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (const SolutionNode& n : nodes_) {
    nlohmann::ordered_json jn;
    jn["node_id"] = n.node_id;
    jn["parent"] = n.parent;
    jn["depth"] = n.depth;
    jn["generation_index"] = n.generation_index;
    jn["strategy"] = {{"ordinal", n.strategy.ordinal}, {"text", n.strategy.text}};
    if (n.reflection)
      jn["reflection"] = {{"ordinal", n.reflection->ordinal},
                          {"text", n.reflection->text}};
    else
      jn["reflection"] = nullptr;
    jn["code"] = n.code;
    if (n.exec_feedback) {
      nlohmann::ordered_json je;
      je["pass_count"] = n.exec_feedback->pass_count;
      je["total"] = n.exec_feedback->total;
      nlohmann::ordered_json results = nlohmann::ordered_json::array();
      for (const TestResult& r : n.exec_feedback->results) {
        nlohmann::ordered_json jr;
        jr["input"] = r.input;
        jr["expected"] = r.expected;
        if (r.actual) jr["actual"] = *r.actual; else jr["actual"] = nullptr;
        jr["outcome"] = to_string(r.outcome);
        jr["diagnostic"] = r.diagnostic;
        results.push_back(std::move(jr));
      }
      je["results"] = std::move(results);
      jn["exec"] = std::move(je);
    } else {
      jn["exec"] = nullptr;
    }
    if (n.critic_feedback) {
      jn["critic"] = {
          {"adherence_score", n.critic_feedback->adherence_score},
          {"action", to_string(n.critic_feedback->action)},
          {"rationale", n.critic_feedback->rationale},
          {"suggestion", n.critic_feedback->suggested_improvements
                             ? nlohmann::ordered_json(*n.critic_feedback->suggested_improvements)
                             : nlohmann::ordered_json(nullptr)}};
    } else {
      jn["critic"] = nullptr;
    }
    if (n.verdict) {
      jn["verdict"] = {
          {"decision", to_string(n.verdict->decision)},
          {"rationale", n.verdict->rationale},
          {"suggestion", n.verdict->suggested_improvements
                             ? nlohmann::ordered_json(*n.verdict->suggested_improvements)
                             : nlohmann::ordered_json(nullptr)}};
    } else {
      jn["verdict"] = nullptr;
    }
    if (n.score) jn["score"] = *n.score; else jn["score"] = nullptr;
    jn["status"] = to_string(n.status);
    nodes.push_back(std::move(jn));
  }
  doc["nodes"] = std::move(nodes);
  return doc;
}

std::string Tree::snapshot() const { return to_json().dump(2) + "\n"; }

}  // namespace arbor
