#ifndef FREEUTIL_FREE_UTILITY_HPP
#define FREEUTIL_FREE_UTILITY_HPP

// Conversion between utility gains and probabilities, the Gibbs measure,
// the free-utility functional, and the control and estimation principles
// built on it. The conversion factor alpha plays the role of a temperature.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "freeutil/core.hpp"

namespace freeutil {

/// Reciprocal of a temperature. The zero limit is read as 0+, so it maps to
/// +inf; both infinities map to the zero limit.
inline Temperature reciprocal(const Temperature& t) {
  switch (t.kind()) {
    case Temperature::Kind::Finite: return Temperature::finite(1.0 / t.value());
    case Temperature::Kind::Zero: return Temperature::pos_inf();
    case Temperature::Kind::PosInf:
    case Temperature::Kind::NegInf: return Temperature::zero();
  }
  return Temperature::zero();
}

namespace detail {

inline void require_valid_alpha(double alpha) {
  if (!std::isfinite(alpha) || alpha == 0.0) {
    throw Error(ErrorCode::DomainError, "conversion factor must be finite and nonzero");
  }
}

inline double support_extreme(const FiniteDistribution& prior, std::span<const double> values,
                              bool maximize) {
  double best = maximize ? -INFINITY : INFINITY;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!prior.in_support(i)) continue;
    best = maximize ? std::max(best, values[i]) : std::min(best, values[i]);
  }
  return best;
}

/// Indices in the support of `prior` whose value lies within the tie
/// tolerance of the extreme (max when `maximize`, else min).
inline std::vector<std::size_t> extreme_set(const FiniteDistribution& prior,
                                            std::span<const double> values, bool maximize) {
  const double best = support_extreme(prior, values, maximize);
  std::vector<std::size_t> set;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (prior.in_support(i) && std::abs(values[i] - best) <= tolerance::kTie) set.push_back(i);
  }
  return set;
}

inline FiniteDistribution uniform_on(const Labels& labels, const std::vector<std::size_t>& set) {
  std::vector<double> probs(labels.size(), 0.0);
  for (std::size_t i : set) probs[i] = 1.0 / static_cast<double>(set.size());
  return FiniteDistribution(labels, std::move(probs));
}

inline void require_support(const FiniteDistribution& prior) {
  for (std::size_t i = 0; i < prior.size(); ++i) {
    if (prior.in_support(i)) return;
  }
  throw Error(ErrorCode::EmptySupport, "prior has no outcome with positive probability");
}

}  // namespace detail

/// The distribution proportional to prior(x) * exp(inv_temp * value(x)),
/// with `values` in the prior's label order. Limits of the inverse
/// temperature give the prior itself (zero) or the uniform distribution over
/// the supported maximizers (+inf) or minimizers (-inf).
inline FiniteDistribution exponential_tilt(const FiniteDistribution& prior,
                                           std::span<const double> values,
                                           const Temperature& inv_temp) {
  detail::require_support(prior);
  if (values.size() != prior.size()) {
    throw Error(ErrorCode::LabelMismatch, "one value per outcome required");
  }
  switch (inv_temp.kind()) {
    case Temperature::Kind::Zero: return prior;
    case Temperature::Kind::PosInf:
      return detail::uniform_on(prior.labels(), detail::extreme_set(prior, values, true));
    case Temperature::Kind::NegInf:
      return detail::uniform_on(prior.labels(), detail::extreme_set(prior, values, false));
    case Temperature::Kind::Finite: break;
  }
  const double t = inv_temp.value();
  // Reference at the dominant value so exponents are taken of differences.
  const double ref = detail::support_extreme(prior, values, t > 0.0);
  if (ref == detail::support_extreme(prior, values, t < 0.0)) return prior;
  std::vector<double> log_w(prior.size(), -INFINITY);
  for (std::size_t i = 0; i < prior.size(); ++i) {
    if (prior.in_support(i)) log_w[i] = std::log(prior[i]) + t * (values[i] - ref);
  }
  const double log_z = log_sum_exp(log_w);
  std::vector<double> probs(prior.size(), 0.0);
  for (std::size_t i = 0; i < prior.size(); ++i) {
    if (prior.in_support(i)) probs[i] = std::exp(log_w[i] - log_z);
  }
  return FiniteDistribution(prior.labels(), std::move(probs));
}

/// Utility gain alpha * log(p) of an event with conditional probability p.
/// Negative alpha describes an adversarial assignment.
inline double utility_gain_from_prob(double p, double alpha) {
  detail::require_valid_alpha(alpha);
  if (!(p > 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::DomainError, "probability must lie in (0, 1]");
  }
  return alpha * std::log(p);
}

/// Inverse of utility_gain_from_prob: exp(gain / alpha).
inline double prob_from_utility_gain(double gain, double alpha) {
  detail::require_valid_alpha(alpha);
  if (!std::isfinite(gain)) throw Error(ErrorCode::DomainError, "utility gain must be finite");
  const double exponent = gain / alpha;
  if (exponent > 0.0) {
    throw Error(ErrorCode::DomainError, "implied probability exceeds 1");
  }
  return std::exp(exponent);
}

/// Work -alpha * log(p) needed to acquire -log(p) nats at conversion factor alpha.
inline double information_work(double p, double alpha) {
  if (!(std::isfinite(alpha) && alpha > 0.0)) {
    throw Error(ErrorCode::DomainError, "conversion factor must be positive");
  }
  if (!(p > 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::DomainError, "probability must lie in (0, 1]");
  }
  return -alpha * std::log(p);
}

/// Gibbs measure at temperature alpha: probabilities proportional to
/// exp(u / alpha). alpha may be negative (mass moves to low utilities), the
/// zero limit (uniform over the maximal set) or infinite (uniform).
inline FiniteDistribution gibbs_measure(const UtilityTable& u, const Temperature& alpha) {
  return exponential_tilt(FiniteDistribution::uniform(u.labels()), u.values(), reciprocal(alpha));
}

inline FiniteDistribution gibbs_measure(const UtilityTable& u, double alpha) {
  return gibbs_measure(u, Temperature::finite(alpha));
}

/// Free utility E_p[u] + alpha * H(p).
inline double free_utility(const FiniteDistribution& p, const UtilityTable& u, double alpha) {
  return expectation(p, u) + alpha * entropy(p);
}

/// alpha * log(sum exp(u / alpha)): the maximum of the free utility.
inline double log_partition(const UtilityTable& u, double alpha) {
  detail::require_valid_alpha(alpha);
  std::vector<double> scaled(u.values().begin(), u.values().end());
  for (double& x : scaled) x /= alpha;
  return alpha * log_sum_exp(scaled);
}

/// Maximizer of E_P[u_star] - alpha * KL(P || prior), i.e.
/// P(x) proportional to prior(x) * exp(u_star(x) / alpha). The zero limit
/// concentrates uniformly on the supported maximizers; the infinite limit
/// returns the prior.
inline FiniteDistribution bounded_control(const FiniteDistribution& prior,
                                          const UtilityTable& u_star, const Temperature& alpha) {
  if (alpha.is_neg_inf() || (alpha.is_finite() && alpha.value() < 0.0)) {
    throw Error(ErrorCode::DomainError, "control requires a positive conversion factor");
  }
  return exponential_tilt(prior, aligned_values(prior, u_star), reciprocal(alpha));
}

inline FiniteDistribution bounded_control(const FiniteDistribution& prior,
                                          const UtilityTable& u_star, double alpha) {
  return bounded_control(prior, u_star, Temperature::finite(alpha));
}

/// The two terms of a change in free utility from `prior` to `posterior`.
struct FreeUtilityReport {
  double expected_utility = 0.0;
  double information_cost = 0.0;  // alpha * achieved_kl
  double total = 0.0;
  double achieved_kl = 0.0;  // nats
};

inline FreeUtilityReport free_utility_difference(const FiniteDistribution& prior,
                                                 const FiniteDistribution& posterior,
                                                 const UtilityTable& u_star, double alpha) {
  if (!(std::isfinite(alpha) && alpha > 0.0)) {
    throw Error(ErrorCode::DomainError, "conversion factor must be positive");
  }
  FreeUtilityReport r;
  r.achieved_kl = kl_divergence(posterior, prior);
  r.expected_utility = expectation(posterior, u_star);
  r.information_cost = alpha * r.achieved_kl;
  r.total = r.expected_utility - r.information_cost;
  return r;
}

/// Minimum relative entropy estimate of the initial measure given the final
/// one: the final measure itself.
inline FiniteDistribution estimation_solution(const FiniteDistribution& p_final) {
  return p_final;
}

/// Estimation objective E_{p_final}[u_star] - alpha * KL(p_final || candidate),
/// maximized by estimation_solution.
inline double estimation_objective(const FiniteDistribution& p_final,
                                   const FiniteDistribution& candidate,
                                   const UtilityTable& u_star, double alpha) {
  return expectation(p_final, u_star) - alpha * kl_divergence(p_final, candidate);
}

}  // namespace freeutil

#endif  // FREEUTIL_FREE_UTILITY_HPP
