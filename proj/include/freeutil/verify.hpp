#ifndef FREEUTIL_VERIFY_HPP
#define FREEUTIL_VERIFY_HPP

// Certificate batteries pairing each analytic solver with its brute-force
// oracle on seeded random instances. Used by the `verify` command and the
// acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "freeutil/core.hpp"
#include "freeutil/free_utility.hpp"
#include "freeutil/oracle.hpp"
#include "freeutil/problem.hpp"
#include "freeutil/random.hpp"
#include "freeutil/sequential.hpp"

namespace freeutil::verify {

inline constexpr std::uint64_t kDefaultSeed = 20100906;
inline constexpr double kObjectiveGap = 1e-5;
inline constexpr double kIdentityTolerance = 1e-9;
inline constexpr double kBellmanTolerance = 1e-2;

struct Options {
  std::uint64_t seed = kDefaultSeed;
  /// Test hook: mixes this fraction of the uniform distribution into every
  /// analytic policy before it is certified. Zero in normal runs.
  double perturbation = 0.0;
};

/// One line of a verification report. For agreement checks `analytic`
/// counts agreements, `oracle` counts cases, and `gap` counts disagreements.
struct Certificate {
  std::string name;
  std::size_t cases = 0;
  double analytic = 0.0;
  double oracle = 0.0;
  double gap = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

namespace detail {

inline FiniteDistribution perturbed(const FiniteDistribution& p, double eps) {
  if (eps == 0.0) return p;
  std::vector<double> q(p.probs().begin(), p.probs().end());
  const double u = 1.0 / static_cast<double>(q.size());
  for (double& x : q) x = (1.0 - eps) * x + eps * u;
  return FiniteDistribution(p.labels(), std::move(q));
}

/// Tracks the worst case of an "oracle minus analytic" gap.
struct WorstGap {
  Certificate cert;

  WorstGap(std::string name, double tolerance) {
    cert.name = std::move(name);
    cert.tolerance = tolerance;
    cert.gap = -std::numeric_limits<double>::infinity();
    cert.pass = true;
  }

  void add(double analytic, double oracle, double gap) {
    ++cert.cases;
    if (cert.cases == 1 || !(gap <= cert.gap)) {
      cert.gap = gap;
      cert.analytic = analytic;
      cert.oracle = oracle;
    }
    if (!(gap <= cert.tolerance)) cert.pass = false;
  }
};

struct Agreement {
  Certificate cert;

  explicit Agreement(std::string name) {
    cert.name = std::move(name);
    cert.pass = true;
  }

  void add(bool agrees) {
    ++cert.cases;
    cert.oracle = static_cast<double>(cert.cases);
    if (agrees) {
      cert.analytic += 1.0;
    } else {
      cert.gap += 1.0;
      cert.pass = false;
    }
  }
};

enum Stream : std::uint64_t {
  kGibbs = 1,
  kControl,
  kLimits,
  kTwoStage,
  kTelescoping,
  kMonotonicity,
  kCumulant,
  kMinimax,
};

inline bool has_unique_top(std::vector<double> v, double margin) {
  if (v.size() < 2) return true;
  std::sort(v.begin(), v.end(), std::greater<>());
  return v[0] - v[1] > margin;
}

}  // namespace detail

/// Gibbs measure against the simplex grid on 50 random tables (2-4 outcomes,
/// utilities in [-5, 5]) at alpha in {0.1, 1, 10}, plus the log-partition
/// identity on the same 150 cases.
inline std::vector<Certificate> gibbs_optimality(const Options& opt) {
  auto rng = random::make_rng(opt.seed, detail::kGibbs);
  detail::WorstGap optimality("gibbs-optimality", kObjectiveGap);
  detail::WorstGap identity("log-partition-identity", kIdentityTolerance);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = random::uniform_size(rng, 2, 4);
    const auto u = random::random_utilities(rng, random::make_labels("x", n));
    for (double alpha : {0.1, 1.0, 10.0}) {
      const auto gibbs = detail::perturbed(gibbs_measure(u, alpha), opt.perturbation);
      const double analytic = free_utility(gibbs, u, alpha);
      // Free utility equals E[u] - alpha KL(P || uniform) + alpha log n.
      const auto grid = oracle::simplex_grid_search(FiniteDistribution::uniform(u.labels()), u,
                                                    alpha, oracle::kDefaultResolution);
      const double best = grid.best_value + alpha * std::log(static_cast<double>(n));
      optimality.add(analytic, best, best - analytic);

      long double sum = 0.0L;
      for (double x : u.values()) sum += std::exp(static_cast<long double>(x) / alpha);
      const double closed = static_cast<double>(alpha * std::log(sum));
      identity.add(analytic, closed, std::abs(analytic - closed));
    }
  }
  return {optimality.cert, identity.cert};
}

/// bounded_control against the simplex grid on 50 random (prior, u, alpha)
/// triples, with zeros planted in the priors; checks support preservation.
inline std::vector<Certificate> control_optimality(const Options& opt) {
  auto rng = random::make_rng(opt.seed, detail::kControl);
  detail::WorstGap optimality("control-optimality", kObjectiveGap);
  detail::Agreement support("control-support-preservation");
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = random::uniform_size(rng, 2, 4);
    const auto labels = random::make_labels("x", n);
    const auto prior = random::random_distribution(rng, labels, t % 2 == 0 ? 0.35 : 0.0);
    const auto u = random::random_utilities(rng, labels);
    const double alpha = std::pow(10.0, random::uniform_real(rng, -1.0, 1.0));
    const auto policy = bounded_control(prior, u, alpha);
    const auto certified = detail::perturbed(policy, opt.perturbation);
    const double analytic = oracle::control_objective(certified, prior, u, alpha);
    const auto grid = oracle::simplex_grid_search(prior, u, alpha, oracle::kDefaultResolution);
    optimality.add(analytic, grid.best_value, grid.best_value - analytic);
    bool preserved = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (prior[i] == 0.0 && policy[i] != 0.0) preserved = false;
    }
    support.add(preserved);
  }
  return {optimality.cert, support.cert};
}

/// Exact limit recovery: zero-temperature Gibbs, infinite-temperature
/// control, the risk-neutral rational regime against brute-force expected
/// utility, and the robust regime against enumerated minimax.
inline std::vector<Certificate> limit_recovery(const Options& opt) {
  auto rng = random::make_rng(opt.seed, detail::kLimits);

  detail::Agreement gibbs_zero("limit-gibbs-zero-temperature");
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = random::uniform_size(rng, 1, 6);
    std::vector<double> v(n);
    for (auto& x : v) x = static_cast<double>(random::uniform_size(rng, 0, 4)) - 2.0;
    const UtilityTable u(random::make_labels("x", n), v);
    const double top = *std::max_element(v.begin(), v.end());
    const auto count = static_cast<double>(std::count(v.begin(), v.end(), top));
    std::vector<double> expected(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (v[i] == top) expected[i] = 1.0 / count;
    }
    const auto g = gibbs_measure(u, Temperature::zero());
    gibbs_zero.add(std::equal(expected.begin(), expected.end(), g.probs().begin(), g.probs().end()));
  }

  detail::Agreement control_inf("limit-control-infinite-temperature");
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = random::uniform_size(rng, 1, 6);
    const auto labels = random::make_labels("x", n);
    const auto prior = random::random_distribution(rng, labels, 0.3);
    const auto u = random::random_utilities(rng, labels);
    control_inf.add(bounded_control(prior, u, Temperature::pos_inf()) == prior);
  }

  detail::Agreement neutral("limit-risk-neutral-argmax");
  for (int found = 0; found < 200;) {
    random::TwoStageOptions o;
    o.actions = random::uniform_size(rng, 2, 5);
    o.outcomes = random::uniform_size(rng, 2, 5);
    o.zero_action_utility = true;
    const auto problem = random::random_two_stage(rng, o);
    std::vector<double> mean(o.actions, 0.0);
    for (std::size_t a = 0; a < o.actions; ++a) {
      for (std::size_t x = 0; x < o.outcomes; ++x) {
        mean[a] += problem.channel(a)[x] * problem.outcome_utility(a)[x];
      }
    }
    if (!detail::has_unique_top(mean, 1e-9)) continue;
    ++found;
    const auto best = static_cast<std::size_t>(
        std::distance(mean.begin(), std::max_element(mean.begin(), mean.end())));
    const auto s = solve_regime(problem, {Temperature::pos_inf(), Temperature::zero()});
    neutral.add(s.action_policy == FiniteDistribution::point_mass(problem.actions(), best));
  }

  detail::Agreement robust("limit-robust-minimax");
  for (int found = 0; found < 1000;) {
    random::TwoStageOptions o;
    o.actions = 5;
    o.outcomes = 5;
    const auto problem = random::random_two_stage(rng, o);
    std::vector<double> worst(o.actions);
    for (std::size_t a = 0; a < o.actions; ++a) {
      const auto row = problem.outcome_utility(a).values();
      worst[a] = problem.action_utility()[a] + *std::min_element(row.begin(), row.end());
    }
    if (!detail::has_unique_top(worst, 1e-9)) continue;
    ++found;
    const auto truth = oracle::enumerate_minimax(problem);
    const auto s = solve_regime(problem, {Temperature::pos_inf(), Temperature::neg_inf()});
    robust.add(s.action_policy == FiniteDistribution::point_mass(problem.actions(), truth.index) &&
               minimax_solve(problem).index == truth.index);
  }
  return {gibbs_zero.cert, control_inf.cert, neutral.cert, robust.cert};
}

/// Nested solution against the joint grid search of the full two-stage
/// objective on 20 random 2x2 instances at every (lambda, mu) in
/// {0.5, 1, 2}^2.
inline std::vector<Certificate> two_stage_optimality(const Options& opt) {
  auto rng = random::make_rng(opt.seed, detail::kTwoStage);
  detail::WorstGap optimality("two-stage-optimality", kObjectiveGap);
  detail::WorstGap value("two-stage-value-identity", kIdentityTolerance);
  for (int t = 0; t < 20; ++t) {
    const auto problem = random::random_two_stage(rng, {});
    for (double lambda : {0.5, 1.0, 2.0}) {
      for (double mu : {0.5, 1.0, 2.0}) {
        const auto s =
            solve_regime(problem, {Temperature::finite(lambda), Temperature::finite(mu)});
        std::vector<FiniteDistribution> beliefs;
        for (const auto& b : s.outcome_beliefs) {
          beliefs.push_back(detail::perturbed(b, opt.perturbation));
        }
        const auto policy = detail::perturbed(s.action_policy, opt.perturbation);
        const double analytic = oracle::two_stage_objective(problem, policy, beliefs, lambda, mu);
        const auto grid = oracle::exhaustive_two_stage(problem, lambda, mu);
        optimality.add(analytic, grid.best_value, grid.best_value - analytic);
        value.add(analytic, s.value, std::abs(analytic - s.value));
      }
    }
  }
  return {optimality.cert, value.cert};
}

/// Soft value recursion against brute-force path enumeration on 50 random
/// trees (branching <= 3, depth <= 4), and its large-lambda agreement with
/// the Bellman backup.
inline std::vector<Certificate> telescoping(const Options& opt) {
  auto rng = random::make_rng(opt.seed, detail::kTelescoping);
  detail::WorstGap identity("value-recursion-telescoping", kIdentityTolerance);
  detail::WorstGap bellman("value-recursion-bellman-limit", kBellmanTolerance);
  detail::WorstGap hard("bellman-max-path", kIdentityTolerance);
  for (int t = 0; t < 50; ++t) {
    const auto tree = random::random_tree(rng, 3, 4);
    for (double lambda : {0.5, 1.0, 5.0}) {
      const auto l = Temperature::finite(lambda);
      const double recursive = value_recursion(tree, {l, l}).root_value(tree);
      const double paths = oracle::path_enumeration(tree, lambda);
      identity.add(recursive, paths, std::abs(recursive - paths));
    }
    const auto big = Temperature::finite(1e4);
    const double soft = value_recursion(tree, {big, big}).root_value(tree);
    const double exact = bellman_backup(tree).root_value(tree);
    bellman.add(soft, exact, std::abs(soft - exact));
    const double max_path = oracle::max_path_utility(tree);
    hard.add(exact, max_path, std::abs(exact - max_path));
  }
  return {identity.cert, bellman.cert, hard.cert};
}

/// Certainty equivalent is non-decreasing along mu in
/// {-inf, -10, -1, 0, 1, 10, +inf} and stays within the supported utility
/// range, with equality at the infinite limits.
inline std::vector<Certificate> ce_monotonicity(const Options& opt) {
  auto rng = random::make_rng(opt.seed, detail::kMonotonicity);
  const std::vector<Temperature> mus{Temperature::neg_inf(),    Temperature::finite(-10.0),
                                     Temperature::finite(-1.0), Temperature::zero(),
                                     Temperature::finite(1.0),  Temperature::finite(10.0),
                                     Temperature::pos_inf()};
  detail::Agreement monotone("ce-monotonicity");
  detail::Agreement bounded("ce-bounds");
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = random::uniform_size(rng, 1, 6);
    const auto labels = random::make_labels("x", n);
    const auto p = random::random_distribution(rng, labels, 0.25);
    const auto u = random::random_utilities(rng, labels);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
      if (p[i] > 0.0) {
        lo = std::min(lo, u[i]);
        hi = std::max(hi, u[i]);
      }
    }
    const double slack = 1e-12 * (1.0 + std::max(std::abs(lo), std::abs(hi)));
    bool mono = true;
    bool in_range = true;
    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& mu : mus) {
      const double ce = certainty_equivalent(p, u, mu);
      if (ce < prev - slack) mono = false;
      if (ce < lo - slack || ce > hi + slack) in_range = false;
      prev = ce;
    }
    in_range = in_range && certainty_equivalent(p, u, Temperature::neg_inf()) == lo &&
               certainty_equivalent(p, u, Temperature::pos_inf()) == hi;
    monotone.add(mono);
    bounded.add(in_range);
  }
  return {monotone.cert, bounded.cert};
}

/// Residual of a second-order expansion with the given sign of the
/// variance term, scaled by mu^2.
inline double cumulant_residual_ratio(const FiniteDistribution& p, const UtilityTable& u,
                                      double mu, double sign) {
  double mean = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) mean += p[i] * u[i];
  double var = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) var += p[i] * (u[i] - mean) * (u[i] - mean);
  const double residual = certainty_equivalent(p, u, mu) - mean - sign * 0.5 * mu * var;
  return std::abs(residual) / (mu * mu);
}

/// Growth of the mu^2-scaled residual from |mu| = 0.04 down to |mu| = 0.01:
/// the largest ratio at any mu in {+-0.01, +-0.02, +-0.04} divided by the
/// constant C fitted at |mu| = 0.04. Near 1 for a second-order accurate
/// expansion, near 4 when a first-order error is left over.
inline double cumulant_growth(const FiniteDistribution& p, const UtilityTable& u, double sign) {
  const double fitted = std::max(cumulant_residual_ratio(p, u, 0.04, sign),
                                 cumulant_residual_ratio(p, u, -0.04, sign));
  double worst = 0.0;
  for (double mu : {-0.04, -0.02, -0.01, 0.01, 0.02, 0.04}) {
    // The 1e-9 floor absorbs rounding of near-exact residuals (~1e-16 / mu^2).
    worst = std::max(worst, cumulant_residual_ratio(p, u, mu, sign) / (fitted + 1e-9));
  }
  return worst;
}

/// Ratio test: the residual stays within C |mu|^2 with growth below 4.
inline bool cumulant_ratio_test(const FiniteDistribution& p, const UtilityTable& u, double sign) {
  return cumulant_growth(p, u, sign) < 4.0;
}

/// The expansion with +(mu/2) Var must pass the ratio test; the -(mu/2) Var
/// variant must show first-order growth (factor above 2) on every instance.
inline std::vector<Certificate> cumulant_expansion(const Options& opt) {
  auto rng = random::make_rng(opt.seed, detail::kCumulant);
  detail::Agreement plus("cumulant-expansion-plus-sign");
  detail::Agreement minus_rejected("cumulant-expansion-minus-sign-rejected");
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = random::uniform_size(rng, 2, 5);
    const auto labels = random::make_labels("x", n);
    const auto p = random::random_distribution(rng, labels, 0.0, 0.05);
    const auto u = random::random_utilities(rng, labels, -1.0, 1.0);
    plus.add(cumulant_ratio_test(p, u, +1.0));
    minus_rejected.add(cumulant_growth(p, u, -1.0) > 2.0);
  }
  return {plus.cert, minus_rejected.cert};
}

/// Largest k such that risk_sensitive_argmax at mu = -2^j picks `target` for
/// every j >= k up to 2^60, or -1 if no such k exists.
inline int minimax_threshold_exponent(const TwoStageProblem& problem, std::size_t target) {
  int threshold = -1;
  for (int k = 60; k >= 0; --k) {
    if (risk_sensitive_argmax(problem, -std::ldexp(1.0, k)).index != target) break;
    threshold = k;
  }
  return threshold;
}

/// On 100 random instances with a unique minimax action, risk-averse
/// rational choice settles on that action for every mu below some finite
/// threshold.
inline std::vector<Certificate> minimax_convergence(const Options& opt) {
  auto rng = random::make_rng(opt.seed, detail::kMinimax);
  detail::Agreement converged("risk-aversion-minimax-convergence");
  for (int found = 0; found < 100;) {
    random::TwoStageOptions o;
    o.actions = random::uniform_size(rng, 2, 5);
    o.outcomes = random::uniform_size(rng, 2, 5);
    o.channel_zero_rate = 0.2;
    const auto problem = random::random_two_stage(rng, o);
    std::vector<double> worst(o.actions, std::numeric_limits<double>::infinity());
    for (std::size_t a = 0; a < o.actions; ++a) {
      for (std::size_t x = 0; x < o.outcomes; ++x) {
        if (problem.channel(a)[x] > 0.0) {
          worst[a] = std::min(worst[a], problem.outcome_utility(a)[x]);
        }
      }
      worst[a] += problem.action_utility()[a];
    }
    if (!detail::has_unique_top(worst, 1e-6)) continue;
    ++found;
    const auto truth = oracle::enumerate_minimax(problem);
    converged.add(minimax_threshold_exponent(problem, truth.index) >= 0);
  }
  return {converged.cert};
}

struct Suite {
  std::string_view name;
  std::vector<Certificate> (*run)(const Options&);
};

inline const std::vector<Suite>& suites() {
  static const std::vector<Suite> all{
      {"gibbs-optimality", gibbs_optimality},   {"control-optimality", control_optimality},
      {"limits", limit_recovery},               {"two-stage", two_stage_optimality},
      {"telescoping", telescoping},             {"ce-monotonicity", ce_monotonicity},
      {"cumulant", cumulant_expansion},         {"minimax-convergence", minimax_convergence},
  };
  return all;
}

/// Runs one named suite, or every suite for "all". Throws DomainError for an
/// unknown name.
inline std::vector<Certificate> run_suite(std::string_view name, const Options& opt) {
  std::vector<Certificate> out;
  bool matched = false;
  for (const auto& s : suites()) {
    if (name == "all" || name == s.name) {
      matched = true;
      auto certs = s.run(opt);
      out.insert(out.end(), certs.begin(), certs.end());
    }
  }
  if (!matched) throw Error(ErrorCode::DomainError, "unknown suite '" + std::string(name) + "'");
  return out;
}

}  // namespace freeutil::verify

#endif  // FREEUTIL_VERIFY_HPP
