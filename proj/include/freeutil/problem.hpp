#ifndef FREEUTIL_PROBLEM_HPP
#define FREEUTIL_PROBLEM_HPP

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "freeutil/core.hpp"

namespace freeutil {

/// Single-stage control: an initial policy and the utilities it is tilted by.
/// The utility table is stored aligned to the prior's label order.
struct ControlProblem {
  ControlProblem() = default;
  ControlProblem(FiniteDistribution prior_in, const UtilityTable& utility_in)
      : prior(std::move(prior_in)), utility(prior.labels(), aligned_values(prior, utility_in)) {}

  FiniteDistribution prior;
  UtilityTable utility;

  friend bool operator==(const ControlProblem&, const ControlProblem&) = default;
};

/// An agent emits an action x1 ~ P0(x1), then observes an outcome
/// x2 ~ P0(x2|x1). Utilities are U(x1) for the action and U(x2|x1) for the
/// outcome. All utility tables are stored aligned to the declared label order.
class TwoStageProblem {
 public:
  TwoStageProblem() = default;

  TwoStageProblem(FiniteDistribution prior_action, std::vector<FiniteDistribution> channel,
                  const UtilityTable& action_utility,
                  const std::vector<UtilityTable>& outcome_utility)
      : prior_action_(std::move(prior_action)), channel_(std::move(channel)) {
    const std::size_t n_actions = prior_action_.size();
    if (n_actions == 0) throw Error(ErrorCode::EmptySupport, "problem has no actions");
    if (channel_.size() != n_actions) {
      throw Error(ErrorCode::LabelMismatch, "one channel row per action required");
    }
    if (outcome_utility.size() != n_actions) {
      throw Error(ErrorCode::LabelMismatch, "one outcome utility row per action required");
    }
    outcomes_ = channel_.front().labels();
    if (outcomes_.empty()) throw Error(ErrorCode::EmptySupport, "problem has no outcomes");
    for (std::size_t a = 0; a < n_actions; ++a) {
      if (channel_[a].labels() != outcomes_) {
        throw Error(ErrorCode::LabelMismatch,
                    "channel row for '" + actions()[a] + "' uses different outcome labels");
      }
    }
    action_utility_ = UtilityTable(actions(), aligned_values(prior_action_, action_utility));
    outcome_utility_.reserve(n_actions);
    for (std::size_t a = 0; a < n_actions; ++a) {
      outcome_utility_.emplace_back(outcomes_, aligned_values(channel_[a], outcome_utility[a]));
    }
  }

  const Labels& actions() const noexcept { return prior_action_.labels(); }
  const Labels& outcomes() const noexcept { return outcomes_; }
  std::size_t num_actions() const noexcept { return prior_action_.size(); }
  std::size_t num_outcomes() const noexcept { return outcomes_.size(); }

  const FiniteDistribution& prior_action() const noexcept { return prior_action_; }
  const FiniteDistribution& channel(std::size_t action) const { return channel_.at(action); }
  const UtilityTable& action_utility() const noexcept { return action_utility_; }
  const UtilityTable& outcome_utility(std::size_t action) const {
    return outcome_utility_.at(action);
  }

  std::size_t action_index(std::string_view label) const {
    if (auto i = prior_action_.index_of(label)) return *i;
    throw Error(ErrorCode::UnknownAction, "no action named '" + std::string(label) + "'");
  }

  friend bool operator==(const TwoStageProblem&, const TwoStageProblem&) = default;

 private:
  FiniteDistribution prior_action_;
  std::vector<FiniteDistribution> channel_;
  Labels outcomes_;
  UtilityTable action_utility_;
  std::vector<UtilityTable> outcome_utility_;
};

/// Which inverse temperature of a TemperatureSpec governs a tree node.
enum class StageTag { Lambda, Mu };

constexpr std::string_view to_string(StageTag tag) noexcept {
  return tag == StageTag::Lambda ? "lambda" : "mu";
}

inline StageTag parse_stage_tag(std::string_view text) {
  if (text == "lambda") return StageTag::Lambda;
  if (text == "mu") return StageTag::Mu;
  throw Error(ErrorCode::UnknownTemperatureTag,
              "'" + std::string(text) + "' is neither 'lambda' nor 'mu'");
}

struct TreeEdge {
  std::size_t child = 0;
  double prior = 0.0;
  double utility = 0.0;

  friend bool operator==(const TreeEdge&, const TreeEdge&) = default;
};

struct TreeNode {
  std::string id;
  StageTag tag = StageTag::Lambda;
  std::vector<TreeEdge> edges;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Finite rooted tree of chooser nodes. Each internal node carries a prior
/// over its children and a utility gain per child edge. Construction rejects
/// cycles and shared children, so every reachable node has exactly one
/// parent. Nodes unreachable from the root are kept but never evaluated.
class DecisionTree {
 public:
  DecisionTree() = default;

  DecisionTree(std::vector<TreeNode> nodes, std::size_t root)
      : nodes_(std::move(nodes)), root_(root) {
    if (root_ >= nodes_.size()) throw Error(ErrorCode::DomainError, "root index out of range");
    Labels ids;
    ids.reserve(nodes_.size());
    for (const auto& n : nodes_) ids.push_back(n.id);
    if (auto dup = detail::first_duplicate(ids)) {
      throw Error(ErrorCode::DuplicateLabel, "node id '" + ids[*dup] + "' appears twice");
    }

    priors_.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& node = nodes_[i];
      if (node.edges.empty()) continue;
      Labels child_ids;
      std::vector<double> probs;
      for (const auto& e : node.edges) {
        if (e.child >= nodes_.size()) {
          throw Error(ErrorCode::DomainError, "node '" + node.id + "' has a dangling child");
        }
        if (!std::isfinite(e.utility)) {
          throw Error(ErrorCode::NonFinite, "edge utility below '" + node.id + "' not finite");
        }
        child_ids.push_back(nodes_[e.child].id);
        probs.push_back(e.prior);
      }
      if (auto err = validate(child_ids, probs)) {
        const std::string what = err->what();
        throw Error(err->code(),
                    "children of '" + node.id + "': " + what.substr(what.find(": ") + 2));
      }
      priors_[i] = FiniteDistribution(std::move(child_ids), std::move(probs));
      // Keep the edges in sync with the normalized prior.
      for (std::size_t k = 0; k < node.edges.size(); ++k) {
        nodes_[i].edges[k].prior = priors_[i][k];
      }
    }
    build_post_order();
  }

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  const TreeNode& node(std::size_t i) const { return nodes_.at(i); }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t root() const noexcept { return root_; }
  bool is_leaf(std::size_t i) const { return nodes_.at(i).edges.empty(); }

  /// Prior over the children of an internal node, labeled by child id.
  const FiniteDistribution& prior(std::size_t i) const { return priors_.at(i); }

  /// Reachable nodes with every child listed before its parent.
  const std::vector<std::size_t>& post_order() const noexcept { return post_order_; }

  std::size_t index_of(std::string_view id) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].id == id) return i;
    }
    throw Error(ErrorCode::DomainError, "no node named '" + std::string(id) + "'");
  }

  friend bool operator==(const DecisionTree& a, const DecisionTree& b) {
    return a.nodes_ == b.nodes_ && a.root_ == b.root_;
  }

 private:
  void build_post_order() {
    enum class Mark : unsigned char { Unseen, Open, Done };
    std::vector<Mark> mark(nodes_.size(), Mark::Unseen);
    // Explicit stack of (node, next edge) frames.
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root_, 0}};
    mark[root_] = Mark::Open;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < nodes_[node].edges.size()) {
        const std::size_t child = nodes_[node].edges[next++].child;
        if (mark[child] == Mark::Open) {
          throw Error(ErrorCode::CyclicTree, "cycle through node '" + nodes_[child].id + "'");
        }
        if (mark[child] == Mark::Done) {
          throw Error(ErrorCode::CyclicTree, "node '" + nodes_[child].id + "' has two parents");
        }
        mark[child] = Mark::Open;
        stack.emplace_back(child, 0);
      } else {
        mark[node] = Mark::Done;
        post_order_.push_back(node);
        stack.pop_back();
      }
    }
  }

  std::vector<TreeNode> nodes_;
  std::size_t root_ = 0;
  std::vector<FiniteDistribution> priors_;
  std::vector<std::size_t> post_order_;
};

/// The depth-2 tree equivalent of a two-stage problem: a lambda-tagged root
/// over actions, each action a mu-tagged node over outcomes.
inline DecisionTree to_tree(const TwoStageProblem& problem) {
  std::vector<TreeNode> nodes;
  nodes.push_back(TreeNode{"root", StageTag::Lambda, {}});
  for (std::size_t a = 0; a < problem.num_actions(); ++a) {
    const std::size_t action_node = nodes.size();
    nodes[0].edges.push_back(
        TreeEdge{action_node, problem.prior_action()[a], problem.action_utility()[a]});
    const std::string action_id = "a:" + problem.actions()[a];
    nodes.push_back(TreeNode{action_id, StageTag::Mu, {}});
    for (std::size_t o = 0; o < problem.num_outcomes(); ++o) {
      nodes[action_node].edges.push_back(
          TreeEdge{nodes.size(), problem.channel(a)[o], problem.outcome_utility(a)[o]});
      nodes.push_back(TreeNode{action_id + "/o:" + problem.outcomes()[o], StageTag::Lambda, {}});
    }
  }
  return DecisionTree(std::move(nodes), 0);
}

}  // namespace freeutil

#endif  // FREEUTIL_PROBLEM_HPP
