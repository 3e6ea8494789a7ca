#ifndef FREEUTIL_ORACLE_HPP
#define FREEUTIL_ORACLE_HPP

// Brute-force reference solutions for small instances. Nothing here calls the
// analytic solvers: objectives are re-evaluated from raw probabilities and
// utilities so that agreement between the two is a meaningful certificate.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "freeutil/core.hpp"
#include "freeutil/problem.hpp"

namespace freeutil::oracle {

inline constexpr std::size_t kMaxGridOutcomes = 4;
inline constexpr std::size_t kMaxPaths = 100000;
inline constexpr double kDefaultResolution = 1e-3;

struct OracleResult {
  double best_value = -std::numeric_limits<double>::infinity();
  /// One distribution for a single simplex; (p(x1), p(x2|a1), p(x2|a2)) for
  /// the two-stage search.
  std::vector<FiniteDistribution> best_point;
  double resolution = 0.0;
  std::uint64_t evaluations = 0;
};

namespace detail {

inline std::size_t grid_steps(double resolution) {
  if (!(resolution >= 1e-4 && resolution <= 0.1)) {
    throw Error(ErrorCode::DomainError, "grid resolution must lie in [1e-4, 0.1]");
  }
  return static_cast<std::size_t>(std::llround(1.0 / resolution));
}

/// x u - a x log(x / q): one coordinate's share of E[u] - a KL(P || q).
inline double kl_term(double x, double u, double a, double q) {
  if (x == 0.0) return 0.0;
  if (q == 0.0) return -std::numeric_limits<double>::infinity();
  return x * u - a * x * std::log(x / q);
}

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

struct SimplexMax {
  double value = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> counts;  // grid coordinates, summing to the step count
};

/// Maximum of sum_i tables[i][k_i] over all k with sum k_i = steps. The
/// objective is separable, so the maximum over every composition is found by
/// folding coordinates one at a time (max-plus convolution); ties keep the
/// smallest index at each fold.
inline SimplexMax max_over_simplex(const std::vector<std::vector<double>>& tables,
                                   std::size_t steps) {
  const std::size_t n = tables.size();
  std::vector<std::vector<std::size_t>> choice(n, std::vector<std::size_t>(steps + 1, 0));
  std::vector<double> acc = tables[0];
  for (std::size_t s = 0; s <= steps; ++s) choice[0][s] = s;
  for (std::size_t j = 1; j < n; ++j) {
    std::vector<double> next(steps + 1, -std::numeric_limits<double>::infinity());
    for (std::size_t s = 0; s <= steps; ++s) {
      for (std::size_t k = 0; k <= s; ++k) {
        const double v = acc[s - k] + tables[j][k];
        if (v > next[s]) {
          next[s] = v;
          choice[j][s] = k;
        }
      }
    }
    acc = std::move(next);
  }
  SimplexMax out;
  out.value = acc[steps];
  out.counts.assign(n, 0);
  std::size_t remaining = steps;
  for (std::size_t j = n; j-- > 0;) {
    out.counts[j] = choice[j][remaining];
    remaining -= out.counts[j];
  }
  return out;
}

inline FiniteDistribution grid_point(const Labels& labels, const std::vector<std::size_t>& counts,
                                     std::size_t steps) {
  std::vector<double> probs(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    probs[i] = static_cast<double>(counts[i]) / static_cast<double>(steps);
  }
  return FiniteDistribution(labels, std::move(probs));
}

inline std::vector<double> kl_table(double u, double a, double q, std::size_t steps) {
  std::vector<double> t(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    t[k] = kl_term(static_cast<double>(k) / static_cast<double>(steps), u, a, q);
  }
  return t;
}

}  // namespace detail

/// E_P[u_star] - alpha KL(P || prior) evaluated directly.
inline double control_objective(const FiniteDistribution& p, const FiniteDistribution& prior,
                                const UtilityTable& u_star, double alpha) {
  const auto u = aligned_values(prior, u_star);
  const auto map = align_labels(p.labels(), prior.labels());
  double total = 0.0;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    total += detail::kl_term(p[map[i]], u[i], alpha, prior[i]);
  }
  return total;
}

/// Best value of E_P[u_star] - alpha KL(P || prior) over the simplex grid of
/// the given resolution. Covers every grid point; at most four outcomes.
inline OracleResult simplex_grid_search(const FiniteDistribution& prior,
                                        const UtilityTable& u_star, double alpha,
                                        double resolution = kDefaultResolution) {
  const std::size_t n = prior.size();
  if (n > kMaxGridOutcomes) {
    throw Error(ErrorCode::TooManyOutcomes, std::to_string(n) + " outcomes exceed the grid cap of " +
                                                std::to_string(kMaxGridOutcomes));
  }
  if (!(std::isfinite(alpha) && alpha > 0.0)) {
    throw Error(ErrorCode::DomainError, "conversion factor must be positive");
  }
  const std::size_t steps = detail::grid_steps(resolution);
  const auto u = aligned_values(prior, u_star);
  std::vector<std::vector<double>> tables;
  for (std::size_t i = 0; i < n; ++i) tables.push_back(detail::kl_table(u[i], alpha, prior[i], steps));
  const auto best = detail::max_over_simplex(tables, steps);

  OracleResult r;
  r.best_value = best.value;
  r.best_point = {detail::grid_point(prior.labels(), best.counts, steps)};
  r.resolution = resolution;
  r.evaluations = detail::binomial(steps + n - 1, n - 1);
  return r;
}

/// Full nested objective
///   sum_x1 p(x1) [U(x1) - (1/lambda) log(p(x1)/p0(x1))
///                 + sum_x2 p(x2|x1) (U(x2|x1) - (1/mu) log(p(x2|x1)/p0(x2|x1)))]
/// with the constant constraint levels dropped.
inline double two_stage_objective(const TwoStageProblem& problem,
                                  const FiniteDistribution& action_policy,
                                  const std::vector<FiniteDistribution>& beliefs, double lambda,
                                  double mu) {
  const double alpha = 1.0 / lambda;
  const double beta = 1.0 / mu;
  double total = 0.0;
  for (std::size_t a = 0; a < problem.num_actions(); ++a) {
    const double pa = action_policy[a];
    if (pa == 0.0) continue;
    double inner = 0.0;
    for (std::size_t o = 0; o < problem.num_outcomes(); ++o) {
      inner += detail::kl_term(beliefs[a][o], problem.outcome_utility(a)[o], beta,
                               problem.channel(a)[o]);
    }
    total += detail::kl_term(pa, problem.action_utility()[a] + inner, alpha,
                             problem.prior_action()[a]);
  }
  return total;
}

/// Joint grid search over p(x1) and both rows p(x2|x1) of a 2x2 problem for
/// positive finite lambda and mu. For a fixed p(x1) the rows enter
/// independently with non-negative weights, so the maximum over the product
/// grid is the outer maximum over p(x1) of the per-row maxima.
inline OracleResult exhaustive_two_stage(const TwoStageProblem& problem, double lambda, double mu,
                                         double resolution = kDefaultResolution) {
  if (problem.num_actions() != 2 || problem.num_outcomes() != 2) {
    throw Error(ErrorCode::TooLarge, "exhaustive two-stage search supports 2x2 problems only");
  }
  if (!(std::isfinite(lambda) && lambda > 0.0 && std::isfinite(mu) && mu > 0.0)) {
    throw Error(ErrorCode::DomainError, "lambda and mu must be positive and finite");
  }
  const std::size_t steps = detail::grid_steps(resolution);
  const double alpha = 1.0 / lambda;
  const double beta = 1.0 / mu;

  std::vector<FiniteDistribution> rows;
  std::vector<double> row_best;
  for (std::size_t a = 0; a < 2; ++a) {
    const auto& channel = problem.channel(a);
    const auto& u = problem.outcome_utility(a);
    const auto best = detail::max_over_simplex(
        {detail::kl_table(u[0], beta, channel[0], steps),
         detail::kl_table(u[1], beta, channel[1], steps)},
        steps);
    rows.push_back(detail::grid_point(problem.outcomes(), best.counts, steps));
    row_best.push_back(best.value);
  }
  const auto& prior = problem.prior_action();
  std::vector<std::vector<double>> outer;
  for (std::size_t a = 0; a < 2; ++a) {
    outer.push_back(
        detail::kl_table(problem.action_utility()[a] + row_best[a], alpha, prior[a], steps));
  }
  const auto best = detail::max_over_simplex(outer, steps);

  OracleResult r;
  r.best_value = best.value;
  r.best_point = {detail::grid_point(problem.actions(), best.counts, steps), rows[0], rows[1]};
  r.resolution = resolution;
  const auto side = static_cast<std::uint64_t>(steps + 1);
  r.evaluations = side * side * side;
  return r;
}

struct MinimaxResult {
  std::size_t index = 0;
  std::string label;
  double value = 0.0;
};

/// Max over supported actions of U(x1) + min over supported outcomes of
/// U(x2|x1), by plain enumeration. Ties keep the earliest action.
inline MinimaxResult enumerate_minimax(const TwoStageProblem& problem) {
  MinimaxResult best;
  bool found = false;
  for (std::size_t a = 0; a < problem.num_actions(); ++a) {
    if (problem.prior_action()[a] == 0.0) continue;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t o = 0; o < problem.num_outcomes(); ++o) {
      if (problem.channel(a)[o] > 0.0) worst = std::min(worst, problem.outcome_utility(a)[o]);
    }
    const double v = problem.action_utility()[a] + worst;
    if (!found || v > best.value) {
      best = {a, problem.actions()[a], v};
      found = true;
    }
  }
  if (!found) throw Error(ErrorCode::EmptySupport, "no action has positive prior mass");
  return best;
}

namespace detail {

struct PathSummary {
  long double log_prob;
  long double utility;
};

inline std::vector<PathSummary> enumerate_paths(const DecisionTree& tree) {
  std::vector<PathSummary> paths;
  struct Frame {
    std::size_t node;
    long double log_prob;
    long double utility;
  };
  std::vector<Frame> stack{{tree.root(), 0.0L, 0.0L}};
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    const auto& edges = tree.node(f.node).edges;
    if (edges.empty()) {
      if (paths.size() == kMaxPaths) {
        throw Error(ErrorCode::TooManyPaths,
                    "tree has more than " + std::to_string(kMaxPaths) + " root-to-leaf paths");
      }
      paths.push_back({f.log_prob, f.utility});
      continue;
    }
    for (auto it = edges.rbegin(); it != edges.rend(); ++it) {
      const long double lp = it->prior > 0.0
                                 ? f.log_prob + std::log(static_cast<long double>(it->prior))
                                 : -std::numeric_limits<long double>::infinity();
      stack.push_back({it->child, lp, f.utility + it->utility});
    }
  }
  return paths;
}

}  // namespace detail

/// (1/lambda) log sum over root-to-leaf paths of P0(path) exp(lambda U(path)),
/// accumulated in extended precision with compensated summation. Ignores the
/// nodes' temperature tags: every stage uses lambda.
inline double path_enumeration(const DecisionTree& tree, double lambda) {
  if (!(std::isfinite(lambda) && lambda > 0.0)) {
    throw Error(ErrorCode::DomainError, "lambda must be positive and finite");
  }
  const auto paths = detail::enumerate_paths(tree);
  const long double l = lambda;
  long double m = -std::numeric_limits<long double>::infinity();
  for (const auto& p : paths) {
    if (std::isfinite(p.log_prob)) m = std::max(m, p.log_prob + l * p.utility);
  }
  long double sum = 0.0L;
  long double carry = 0.0L;
  for (const auto& p : paths) {
    if (!std::isfinite(p.log_prob)) continue;
    const long double term = std::exp(p.log_prob + l * p.utility - m);
    const long double t = sum + term;
    carry += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return static_cast<double>((m + std::log(sum + carry)) / l);
}

/// Largest total utility over root-to-leaf paths with positive prior mass.
inline double max_path_utility(const DecisionTree& tree) {
  long double best = -std::numeric_limits<long double>::infinity();
  for (const auto& p : detail::enumerate_paths(tree)) {
    if (std::isfinite(p.log_prob)) best = std::max(best, p.utility);
  }
  return static_cast<double>(best);
}

}  // namespace freeutil::oracle

#endif  // FREEUTIL_ORACLE_HPP
