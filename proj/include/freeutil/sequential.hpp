#ifndef FREEUTIL_SEQUENTIAL_HPP
#define FREEUTIL_SEQUENTIAL_HPP

// Nested two-stage bounded-rational solver and the soft value recursion over
// decision trees.
//
// For inverse temperatures lambda (agent) and mu (environment) the inner
// stage tilts each channel row, p(x2|x1) ~ p0(x2|x1) exp(mu U(x2|x1)), and
// the outer stage tilts the action prior by the certainty equivalent of the
// inner stage:
//
//   CE(x1)  = (1/mu) log sum_x2 p0(x2|x1) exp(mu U(x2|x1))
//   p(x1)  ~ p0(x1) exp(lambda (U(x1) + CE(x1)))
//
// The limits mu -> 0, mu -> -inf and lambda -> +inf turn the certainty
// equivalent into the expectation, the worst case, and the outer tilt into
// a hard argmax.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "freeutil/core.hpp"
#include "freeutil/free_utility.hpp"
#include "freeutil/problem.hpp"

namespace freeutil {

namespace detail {

/// (1/mu) log sum_i p_i exp(mu v_i) for finite nonzero mu, with v in the
/// label order of p.
inline double finite_certainty_equivalent(const FiniteDistribution& p,
                                          std::span<const double> v, double mu) {
  const double lo = support_extreme(p, v, false);
  const double hi = support_extreme(p, v, true);
  const double ref = mu > 0.0 ? hi : lo;
  if (std::abs(mu) * (hi - lo) < 1.0) {
    // Small exponents: sum p_i expm1(x_i) keeps the O(mu) terms that a plain
    // log(sum) would cancel away.
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (p.in_support(i)) s += p[i] * std::expm1(mu * (v[i] - ref));
    }
    return ref + std::log1p(s) / mu;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (p.in_support(i)) s += p[i] * std::exp(mu * (v[i] - ref));
  }
  return ref + std::log(s) / mu;
}

inline double certainty_equivalent(const FiniteDistribution& p, std::span<const double> v,
                                   const Temperature& mu) {
  require_support(p);
  switch (mu.kind()) {
    case Temperature::Kind::Zero: {
      double e = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) e += p[i] * v[i];
      return e;
    }
    case Temperature::Kind::PosInf: return support_extreme(p, v, true);
    case Temperature::Kind::NegInf: return support_extreme(p, v, false);
    case Temperature::Kind::Finite: break;
  }
  return finite_certainty_equivalent(p, v, mu.value());
}

/// log sum_i p_i exp(t v_i) = t * CE_t; 0 in the zero limit, absent for
/// infinite t where it diverges.
inline std::optional<double> log_partition_of(double certainty_equivalent,
                                              const Temperature& t) {
  if (t.is_zero()) return 0.0;
  if (t.is_infinite()) return std::nullopt;
  return t.value() * certainty_equivalent;
}

/// First supported index whose value is within the tie tolerance of the
/// supported maximum.
inline std::size_t first_maximizer(const FiniteDistribution& support,
                                   std::span<const double> values) {
  return extreme_set(support, values, true).front();
}

}  // namespace detail

/// Certainty equivalent (1/mu) log E_p[exp(mu u)]. The zero limit gives
/// E_p[u]; the infinite limits give the max / min of u over the support of p.
inline double certainty_equivalent(const FiniteDistribution& p, const UtilityTable& u,
                                   const Temperature& mu) {
  return detail::certainty_equivalent(p, aligned_values(p, u), mu);
}

inline double certainty_equivalent(const FiniteDistribution& p, const UtilityTable& u, double mu) {
  return certainty_equivalent(p, u, Temperature::finite(mu));
}

/// Second-order cumulant expansion E[u] + (mu/2) Var[u] of the certainty
/// equivalent around mu = 0.
inline double taylor_ce_approx(const FiniteDistribution& p, const UtilityTable& u, double mu) {
  const auto v = aligned_values(p, u);
  double mean = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) mean += p[i] * v[i];
  double var = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) var += p[i] * (v[i] - mean) * (v[i] - mean);
  return mean + 0.5 * mu * var;
}

enum class Regime {
  RiskSeekingBounded,  // finite lambda, mu > 0
  RiskNeutral,         // lambda = inf, mu -> 0
  RiskAverse,          // lambda = inf, mu < 0
  Robust,              // lambda = inf, mu = -inf
  BoundedRiskNeutral,  // finite lambda, mu -> 0
  BoundedRiskAverse,   // finite lambda, mu < 0
  BoundedRobust,       // finite lambda, mu = -inf
  RationalRiskSeeking, // lambda = inf, mu > 0
};

constexpr std::string_view to_string(Regime r) noexcept {
  switch (r) {
    case Regime::RiskSeekingBounded: return "risk-seeking-bounded";
    case Regime::RiskNeutral: return "risk-neutral";
    case Regime::RiskAverse: return "risk-averse";
    case Regime::Robust: return "robust";
    case Regime::BoundedRiskNeutral: return "bounded-risk-neutral";
    case Regime::BoundedRiskAverse: return "bounded-risk-averse";
    case Regime::BoundedRobust: return "bounded-robust";
    case Regime::RationalRiskSeeking: return "rational-risk-seeking";
  }
  return "unknown";
}

/// The four named regimes need lambda = inf or a finite positive lambda. The
/// remaining combinations are solved by the same formulas and labeled with
/// a "bounded-"/"rational-" prefix.
inline Regime classify(const TemperatureSpec& temps) {
  const auto& lambda = temps.lambda;
  const auto& mu = temps.mu;
  if (lambda.is_zero() || lambda.is_neg_inf() ||
      (lambda.is_finite() && lambda.value() <= 0.0)) {
    throw Error(ErrorCode::UnsupportedRegime, "lambda must be positive or +inf");
  }
  const bool optimistic = mu.is_pos_inf() || (mu.is_finite() && mu.value() > 0.0);
  const bool pessimistic = mu.is_finite() && mu.value() < 0.0;
  if (lambda.is_finite()) {
    if (optimistic) return Regime::RiskSeekingBounded;
    if (mu.is_zero()) return Regime::BoundedRiskNeutral;
    if (pessimistic) return Regime::BoundedRiskAverse;
    return Regime::BoundedRobust;
  }
  if (optimistic) return Regime::RationalRiskSeeking;
  if (mu.is_zero()) return Regime::RiskNeutral;
  if (pessimistic) return Regime::RiskAverse;
  return Regime::Robust;
}

struct InnerSolution {
  FiniteDistribution belief;
  std::optional<double> log_z2;
  double certainty_equivalent = 0.0;
};

/// Inner stage for one action: the channel row tilted by exp(mu U(x2|x1)).
inline InnerSolution inner_policy(const TwoStageProblem& problem, std::size_t action,
                                  const Temperature& mu) {
  if (action >= problem.num_actions()) {
    throw Error(ErrorCode::UnknownAction, "action index out of range");
  }
  const auto& row = problem.channel(action);
  const auto values = problem.outcome_utility(action).values();
  InnerSolution s;
  s.belief = exponential_tilt(row, values, mu);
  s.certainty_equivalent = detail::certainty_equivalent(row, values, mu);
  s.log_z2 = detail::log_partition_of(s.certainty_equivalent, mu);
  return s;
}

inline InnerSolution inner_policy(const TwoStageProblem& problem, std::string_view action,
                                  const Temperature& mu) {
  return inner_policy(problem, problem.action_index(action), mu);
}

struct TwoStageSolution {
  TemperatureSpec temps;
  std::optional<Regime> regime;
  FiniteDistribution action_policy;
  std::vector<FiniteDistribution> outcome_beliefs;
  std::optional<double> log_z1;
  std::vector<std::optional<double>> log_z2;
  /// Certainty equivalent of the outcome stage, per action.
  std::vector<double> values;
  /// U(x1) + CE(x1), per action.
  std::vector<double> action_values;
  /// (1/lambda) log Z1, the value of the whole problem.
  double value = 0.0;
  double achieved_c1 = 0.0;
  double achieved_c2 = 0.0;
};

/// Outer stage: tilts the action prior by exp(lambda (U(x1) + CE(x1))) and
/// fills in every solution field. Finite lambda must be positive.
inline TwoStageSolution outer_policy(const TwoStageProblem& problem, const Temperature& lambda,
                                     const Temperature& mu) {
  TemperatureSpec temps{lambda, mu};
  temps.validate();
  if (lambda.is_neg_inf()) {
    throw Error(ErrorCode::InvalidTemperature, "lambda must not be -inf");
  }
  TwoStageSolution s;
  s.temps = temps;
  const std::size_t n = problem.num_actions();
  s.outcome_beliefs.reserve(n);
  for (std::size_t a = 0; a < n; ++a) {
    auto inner = inner_policy(problem, a, mu);
    s.outcome_beliefs.push_back(std::move(inner.belief));
    s.log_z2.push_back(inner.log_z2);
    s.values.push_back(inner.certainty_equivalent);
    s.action_values.push_back(problem.action_utility()[a] + inner.certainty_equivalent);
  }
  const auto& prior = problem.prior_action();
  s.action_policy = exponential_tilt(prior, s.action_values, lambda);
  s.value = detail::certainty_equivalent(prior, s.action_values, lambda);
  s.log_z1 = detail::log_partition_of(s.value, lambda);
  s.achieved_c1 = kl_divergence(s.action_policy, prior);
  for (std::size_t a = 0; a < n; ++a) {
    if (s.action_policy[a] > 0.0) {
      s.achieved_c2 += s.action_policy[a] * kl_divergence(s.outcome_beliefs[a], problem.channel(a));
    }
  }
  return s;
}

/// Solves the problem in the regime named by `temps` and attaches the
/// regime label. A zero or negative lambda is not one of the regimes.
inline TwoStageSolution solve_regime(const TwoStageProblem& problem, const TemperatureSpec& temps) {
  const Regime regime = classify(temps);
  auto s = outer_policy(problem, temps.lambda, temps.mu);
  s.regime = regime;
  return s;
}

struct ActionChoice {
  std::size_t index = 0;
  std::string label;
  double value = 0.0;
};

/// Action maximizing U(x1) + min over the supported outcomes of U(x2|x1).
/// Only actions with positive prior mass compete; ties go to the earliest.
inline ActionChoice minimax_solve(const TwoStageProblem& problem) {
  std::vector<double> worst(problem.num_actions());
  for (std::size_t a = 0; a < worst.size(); ++a) {
    worst[a] = problem.action_utility()[a] +
               detail::certainty_equivalent(problem.channel(a), problem.outcome_utility(a).values(),
                                            Temperature::neg_inf());
  }
  const std::size_t best = detail::first_maximizer(problem.prior_action(), worst);
  return {best, problem.actions()[best], worst[best]};
}

/// Perfectly rational choice under risk sensitivity mu (finite, nonzero):
/// maximizes U(x1) + CE_mu(x1). Ties go to the earliest action.
inline ActionChoice risk_sensitive_argmax(const TwoStageProblem& problem, double mu) {
  if (!std::isfinite(mu) || mu == 0.0) {
    throw Error(ErrorCode::DomainError, "risk sensitivity must be finite and nonzero");
  }
  std::vector<double> score(problem.num_actions());
  for (std::size_t a = 0; a < score.size(); ++a) {
    score[a] = problem.action_utility()[a] +
               detail::finite_certainty_equivalent(problem.channel(a),
                                                   problem.outcome_utility(a).values(), mu);
  }
  const std::size_t best = detail::first_maximizer(problem.prior_action(), score);
  return {best, problem.actions()[best], score[best]};
}

/// Value and policy at every node of a decision tree. Leaves carry value 0
/// and no policy.
struct TreeValue {
  std::vector<double> values;
  std::vector<std::optional<FiniteDistribution>> policies;

  double root_value(const DecisionTree& tree) const { return values.at(tree.root()); }
};

namespace detail {

inline std::vector<double> backed_up(const DecisionTree& tree, std::size_t node,
                                     const std::vector<double>& values) {
  const auto& edges = tree.node(node).edges;
  std::vector<double> q(edges.size());
  for (std::size_t k = 0; k < edges.size(); ++k) q[k] = edges[k].utility + values[edges[k].child];
  return q;
}

}  // namespace detail

/// Soft value recursion V = (1/t) log sum_c P0(c) exp(t (U(c) + V(c))) with
/// t the node's tagged inverse temperature, evaluated bottom-up. Each node's
/// policy is P0(c) exp(t (U(c) + V(c))) normalized; t = +inf gives the
/// Bellman backup with uniform tie-breaking.
inline TreeValue value_recursion(const DecisionTree& tree, const TemperatureSpec& temps) {
  temps.validate();
  TreeValue out;
  out.values.assign(tree.size(), 0.0);
  out.policies.resize(tree.size());
  for (std::size_t node : tree.post_order()) {
    if (tree.is_leaf(node)) continue;
    const Temperature& t = tree.node(node).tag == StageTag::Lambda ? temps.lambda : temps.mu;
    const auto q = detail::backed_up(tree, node, out.values);
    out.values[node] = detail::certainty_equivalent(tree.prior(node), q, t);
    out.policies[node] = exponential_tilt(tree.prior(node), q, t);
  }
  return out;
}

/// Hard-max dynamic program V* = max over supported children of U + V*.
inline TreeValue bellman_backup(const DecisionTree& tree) {
  TreeValue out;
  out.values.assign(tree.size(), 0.0);
  out.policies.resize(tree.size());
  for (std::size_t node : tree.post_order()) {
    if (tree.is_leaf(node)) continue;
    const auto& prior = tree.prior(node);
    const auto q = detail::backed_up(tree, node, out.values);
    out.values[node] = detail::support_extreme(prior, q, true);
    out.policies[node] = detail::uniform_on(prior.labels(), detail::extreme_set(prior, q, true));
  }
  return out;
}

}  // namespace freeutil

#endif  // FREEUTIL_SEQUENTIAL_HPP
