#ifndef FREEUTIL_RANDOM_HPP
#define FREEUTIL_RANDOM_HPP

// Seeded random instance generators for property tests and the verification
// suites.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "freeutil/core.hpp"
#include "freeutil/problem.hpp"

namespace freeutil::random {

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return Rng(seq);
}

inline Labels make_labels(const std::string& prefix, std::size_t n) {
  Labels out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

inline std::size_t uniform_size(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline double uniform_real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Flat Dirichlet sample. With `zero_rate` > 0 each coordinate is
/// independently zeroed with that probability, keeping at least one.
inline FiniteDistribution random_distribution(Rng& rng, Labels labels, double zero_rate = 0.0,
                                              double floor = 0.0) {
  const std::size_t n = labels.size();
  std::exponential_distribution<double> expo(1.0);
  std::bernoulli_distribution drop(zero_rate);
  std::vector<double> w(n);
  for (auto& x : w) x = floor + expo(rng);
  if (zero_rate > 0.0) {
    const std::size_t keep = uniform_size(rng, 0, n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      if (i != keep && drop(rng)) w[i] = 0.0;
    }
  }
  double sum = 0.0;
  for (double x : w) sum += x;
  for (double& x : w) x /= sum;
  return FiniteDistribution(std::move(labels), std::move(w));
}

inline UtilityTable random_utilities(Rng& rng, Labels labels, double lo = -5.0, double hi = 5.0) {
  std::vector<double> v(labels.size());
  for (auto& x : v) x = uniform_real(rng, lo, hi);
  return UtilityTable(std::move(labels), std::move(v));
}

struct TwoStageOptions {
  std::size_t actions = 2;
  std::size_t outcomes = 2;
  bool zero_action_utility = false;
  double channel_zero_rate = 0.0;
  double lo = -5.0;
  double hi = 5.0;
};

inline TwoStageProblem random_two_stage(Rng& rng, const TwoStageOptions& opt) {
  const auto actions = make_labels("a", opt.actions);
  const auto outcomes = make_labels("o", opt.outcomes);
  auto prior = random_distribution(rng, actions, 0.0, 0.05);
  std::vector<FiniteDistribution> channel;
  std::vector<UtilityTable> outcome_utility;
  for (std::size_t a = 0; a < opt.actions; ++a) {
    channel.push_back(random_distribution(rng, outcomes, opt.channel_zero_rate, 0.05));
    outcome_utility.push_back(random_utilities(rng, outcomes, opt.lo, opt.hi));
  }
  auto action_utility = opt.zero_action_utility ? UtilityTable::constant(actions, 0.0)
                                                 : random_utilities(rng, actions, opt.lo, opt.hi);
  return TwoStageProblem(std::move(prior), std::move(channel), action_utility, outcome_utility);
}

/// Random tree with 1..max_branching children per internal node and leaves
/// at depth 1..max_depth. Priors are bounded away from zero.
inline DecisionTree random_tree(Rng& rng, std::size_t max_branching, std::size_t max_depth,
                                double lo = -5.0, double hi = 5.0) {
  std::vector<TreeNode> nodes{{"n0", StageTag::Lambda, {}}};
  std::vector<std::pair<std::size_t, std::size_t>> frontier{{0, 0}};  // (node, depth)
  const std::size_t depth_limit = uniform_size(rng, 1, max_depth);
  while (!frontier.empty()) {
    const auto [node, depth] = frontier.back();
    frontier.pop_back();
    const bool expand = depth == 0 || (depth < depth_limit && uniform_real(rng, 0.0, 1.0) < 0.8);
    if (!expand) continue;
    const std::size_t k = uniform_size(rng, 1, max_branching);
    std::vector<double> w(k);
    double sum = 0.0;
    for (auto& x : w) sum += (x = uniform_real(rng, 0.1, 1.0));
    nodes[node].tag = uniform_real(rng, 0.0, 1.0) < 0.5 ? StageTag::Lambda : StageTag::Mu;
    for (std::size_t c = 0; c < k; ++c) {
      const std::size_t child = nodes.size();
      nodes[node].edges.push_back({child, w[c] / sum, uniform_real(rng, lo, hi)});
      nodes.push_back({"n" + std::to_string(child), StageTag::Lambda, {}});
      frontier.emplace_back(child, depth + 1);
    }
  }
  return DecisionTree(std::move(nodes), 0);
}

}  // namespace freeutil::random

#endif  // FREEUTIL_RANDOM_HPP
