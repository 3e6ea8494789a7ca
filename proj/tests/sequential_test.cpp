#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "freeutil/oracle.hpp"
#include "freeutil/random.hpp"
#include "freeutil/sequential.hpp"
#include "freeutil/verify.hpp"

namespace freeutil {
namespace {

const Labels kAB{"a", "b"};
const Labels kXY{"x", "y"};
const double kLog2 = std::log(2.0);

using Rows = std::vector<std::vector<double>>;

TwoStageProblem make_problem(const std::vector<double>& prior, const Rows& channel,
                             const std::vector<double>& action_utility, const Rows& outcome_utility) {
  const auto actions = random::make_labels("a", prior.size());
  const auto outcomes = random::make_labels("o", channel.front().size());
  std::vector<FiniteDistribution> rows;
  std::vector<UtilityTable> utils;
  for (std::size_t a = 0; a < prior.size(); ++a) {
    rows.emplace_back(outcomes, channel[a]);
    utils.emplace_back(outcomes, outcome_utility[a]);
  }
  return TwoStageProblem(FiniteDistribution(actions, prior), std::move(rows),
                         UtilityTable(actions, action_utility), utils);
}

TemperatureSpec spec(Temperature lambda, Temperature mu) { return {lambda, mu}; }

// --- certainty equivalent -------------------------------------------------

TEST(CertaintyEquivalent, ConstantUtility) {
  const FiniteDistribution p({"a", "b", "c"}, {0.2, 0.3, 0.5});
  const auto u = UtilityTable::constant(p.labels(), 1.75);
  for (auto mu : {Temperature::neg_inf(), Temperature::finite(-3.0), Temperature::zero(),
                  Temperature::finite(0.5), Temperature::pos_inf()}) {
    EXPECT_NEAR(certainty_equivalent(p, u, mu), 1.75, 1e-15);
  }
}

TEST(CertaintyEquivalent, UniformOverOneAndThree) {
  const auto p = FiniteDistribution::uniform(kAB);
  const UtilityTable u(kAB, {1.0, 3.0});
  EXPECT_EQ(certainty_equivalent(p, u, Temperature::zero()), 2.0);
  EXPECT_EQ(certainty_equivalent(p, u, Temperature::neg_inf()), 1.0);
  EXPECT_EQ(certainty_equivalent(p, u, Temperature::pos_inf()), 3.0);
  const long double e = std::exp(1.0L);
  const double reference = static_cast<double>(std::log((e + e * e * e) / 2.0L));
  EXPECT_NEAR(certainty_equivalent(p, u, 1.0), reference, 1e-14);
}

TEST(CertaintyEquivalent, LimitsUseSupportOnly) {
  const FiniteDistribution p({"a", "b", "c"}, {0.5, 0.5, 0.0});
  const UtilityTable u({"a", "b", "c"}, {1.0, 3.0, -100.0});
  EXPECT_EQ(certainty_equivalent(p, u, Temperature::neg_inf()), 1.0);
  EXPECT_NEAR(certainty_equivalent(p, u, -1e3), 1.0 + kLog2 / 1e3, 1e-12);
}

TEST(CertaintyEquivalent, SmallMuApproachesMean) {
  const FiniteDistribution p(kAB, {0.3, 0.7});
  const UtilityTable u(kAB, {-2.0, 5.0});
  const double mean = 0.3 * -2.0 + 0.7 * 5.0;
  EXPECT_NEAR(certainty_equivalent(p, u, 1e-12), mean, 1e-10);
  EXPECT_NEAR(certainty_equivalent(p, u, -1e-12), mean, 1e-10);
}

TEST(CertaintyEquivalent, LabelMismatch) {
  try {
    certainty_equivalent(FiniteDistribution::uniform(kAB), UtilityTable(kXY, {0, 1}), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LabelMismatch);
  }
}

TEST(CertaintyEquivalent, MonotoneAndBounded) {
  auto rng = random::make_rng(21, 0);
  const std::vector<Temperature> mus{
      Temperature::neg_inf(),       Temperature::finite(-10), Temperature::finite(-5),
      Temperature::finite(-1),      Temperature::finite(-0.1), Temperature::zero(),
      Temperature::finite(0.1),     Temperature::finite(1),  Temperature::finite(5),
      Temperature::finite(10),      Temperature::pos_inf()};
  for (int t = 0; t < 300; ++t) {
    const auto labels = random::make_labels("x", random::uniform_size(rng, 1, 6));
    const auto p = random::random_distribution(rng, labels, 0.3);
    const auto u = random::random_utilities(rng, labels);
    double lo = INFINITY;
    double hi = -INFINITY;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] > 0.0) {
        lo = std::min(lo, u[i]);
        hi = std::max(hi, u[i]);
      }
    }
    double prev = -INFINITY;
    for (const auto& mu : mus) {
      const double ce = certainty_equivalent(p, u, mu);
      EXPECT_GE(ce, prev - 1e-12);
      EXPECT_GE(ce, lo - 1e-12);
      EXPECT_LE(ce, hi + 1e-12);
      prev = ce;
    }
    EXPECT_EQ(certainty_equivalent(p, u, Temperature::neg_inf()), lo);
    EXPECT_EQ(certainty_equivalent(p, u, Temperature::pos_inf()), hi);
  }
}

// --- cumulant expansion -----------------------------------------------------

TEST(TaylorApprox, Examples) {
  const auto p = FiniteDistribution::uniform(kAB);
  EXPECT_EQ(taylor_ce_approx(p, UtilityTable::constant(kAB, 3.0), 0.7), 3.0);
  const UtilityTable u(kAB, {0.0, 1.0});
  EXPECT_EQ(taylor_ce_approx(p, u, 0.0), 0.5);
  EXPECT_LE(std::abs(taylor_ce_approx(p, u, 0.01) - certainty_equivalent(p, u, 0.01)), 1e-4);
}

TEST(TaylorApprox, PlusSignIsSecondOrderAccurate) {
  const auto p = FiniteDistribution::uniform(kAB);
  const UtilityTable u(kAB, {0.0, 1.0});
  // Var = 1/4. With E + (mu/2) Var the residual is O(mu^3); with the opposite
  // sign it would be |mu| Var / 2, linear in mu.
  for (double mu : {0.04, 0.02, 0.01, -0.01, -0.02, -0.04}) {
    const double ce = certainty_equivalent(p, u, mu);
    EXPECT_LE(std::abs(ce - taylor_ce_approx(p, u, mu)), mu * mu);
    const double flipped = 0.5 - 0.5 * mu * 0.25;
    EXPECT_GT(std::abs(ce - flipped), 0.2 * std::abs(mu));
  }
}

TEST(TaylorApprox, GrowthSeparatesTheSigns) {
  const FiniteDistribution p({"a", "b", "c"}, {0.2, 0.5, 0.3});
  const UtilityTable u({"a", "b", "c"}, {-1.0, 0.25, 0.9});
  EXPECT_LT(verify::cumulant_growth(p, u, +1.0), 4.0);
  EXPECT_TRUE(verify::cumulant_ratio_test(p, u, +1.0));
  EXPECT_GT(verify::cumulant_growth(p, u, -1.0), 2.0);
}

// --- inner and outer stages -------------------------------------------------

TEST(InnerPolicy, Examples) {
  const auto problem = make_problem({0.5, 0.5}, {{0.5, 0.5}, {0.5, 0.5}}, {0, 0},
                                    {{0.0, kLog2}, {1.0, 2.0}});
  const auto zero = inner_policy(problem, "a0", Temperature::zero());
  EXPECT_EQ(zero.belief, problem.channel(0));
  EXPECT_EQ(zero.log_z2, 0.0);

  const auto plus = inner_policy(problem, "a0", Temperature::finite(1.0));
  EXPECT_NEAR(plus.belief[0], 1. / 3, 1e-15);
  EXPECT_NEAR(plus.belief[1], 2. / 3, 1e-15);
  EXPECT_NEAR(*plus.log_z2, std::log(1.5), 1e-15);

  const auto minus = inner_policy(problem, "a0", Temperature::finite(-1.0));
  EXPECT_NEAR(minus.belief[0], 2. / 3, 1e-15);
  EXPECT_NEAR(minus.belief[1], 1. / 3, 1e-15);
  EXPECT_NEAR(*minus.log_z2, std::log(0.75), 1e-15);

  EXPECT_FALSE(inner_policy(problem, "a1", Temperature::neg_inf()).log_z2.has_value());
}

TEST(InnerPolicy, UnknownAction) {
  const auto problem = make_problem({1.0}, {{1.0}}, {0}, {{0}});
  try {
    inner_policy(problem, "zz", Temperature::finite(1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownAction);
  }
}

TEST(OuterPolicy, TwoThirdsOneThird) {
  // Action 0 has certainty equivalent log 2 at mu = 1, action 1 has 0.
  const auto problem = make_problem({0.5, 0.5}, {{1.0, 0.0}, {1.0, 0.0}}, {0, 0},
                                    {{kLog2, 0.0}, {0.0, 0.0}});
  const auto s = outer_policy(problem, Temperature::finite(1.0), Temperature::finite(1.0));
  EXPECT_NEAR(s.values[0], kLog2, 1e-15);
  EXPECT_EQ(s.values[1], 0.0);
  EXPECT_NEAR(s.action_policy[0], 2. / 3, 1e-15);
  EXPECT_NEAR(s.action_policy[1], 1. / 3, 1e-15);
}

TEST(OuterPolicy, ZeroUtilitiesReturnPriors) {
  const auto problem = make_problem({0.2, 0.8}, {{0.1, 0.9}, {0.6, 0.4}}, {0, 0}, {{0, 0}, {0, 0}});
  for (auto lambda : {Temperature::finite(0.3), Temperature::finite(4.0), Temperature::pos_inf()}) {
    for (auto mu : {Temperature::neg_inf(), Temperature::finite(-2.0), Temperature::zero(),
                    Temperature::finite(2.0)}) {
      const auto s = outer_policy(problem, lambda, mu);
      if (lambda.is_finite()) {
        EXPECT_EQ(s.action_policy, problem.prior_action());
      }
      // Infinite limits split ties uniformly over the support instead.
      if (!mu.is_infinite()) {
        EXPECT_EQ(s.outcome_beliefs[0], problem.channel(0));
        EXPECT_EQ(s.outcome_beliefs[1], problem.channel(1));
        EXPECT_EQ(s.achieved_c2, 0.0);
      }
      EXPECT_EQ(s.value, 0.0);
    }
  }
}

TEST(OuterPolicy, RiskNeutralRationalIsExpectedUtilityArgmax) {
  const auto problem = make_problem({0.5, 0.5}, {{0.5, 0.5}, {0.9, 0.1}}, {0, 0},
                                    {{0.0, 3.0}, {2.0, -1.0}});
  const auto s = outer_policy(problem, Temperature::pos_inf(), Temperature::zero());
  EXPECT_EQ(s.action_policy, FiniteDistribution::point_mass(problem.actions(), 1));
  EXPECT_NEAR(s.value, 1.7, 1e-15);
}

TEST(OuterPolicy, AchievedCostsMatchRecomputation) {
  auto rng = random::make_rng(22, 0);
  for (int t = 0; t < 100; ++t) {
    const auto problem = random::random_two_stage(rng, {3, 4, false, 0.2});
    const double lambda = random::uniform_real(rng, 0.1, 3.0);
    const double mu = random::uniform_real(rng, -3.0, 3.0);
    const auto s = outer_policy(problem, Temperature::finite(lambda), Temperature::finite(mu));
    EXPECT_NEAR(s.achieved_c1, kl_divergence(s.action_policy, problem.prior_action()), 1e-9);
    double c2 = 0.0;
    for (std::size_t a = 0; a < problem.num_actions(); ++a) {
      c2 += s.action_policy[a] * kl_divergence(s.outcome_beliefs[a], problem.channel(a));
    }
    EXPECT_NEAR(s.achieved_c2, c2, 1e-9);
    EXPECT_GE(s.achieved_c1, 0.0);
    EXPECT_GE(s.achieved_c2, 0.0);
  }
}

TEST(OuterPolicy, PartitionIdentity) {
  auto rng = random::make_rng(23, 0);
  for (int t = 0; t < 100; ++t) {
    const auto problem = random::random_two_stage(rng, {3, 3});
    const double lambda = random::uniform_real(rng, 0.1, 3.0);
    const double mu = random::uniform_real(rng, -3.0, 3.0);
    const auto s = outer_policy(problem, Temperature::finite(lambda), Temperature::finite(mu));
    // log Z1 = log sum p0(x1) exp(lambda (U(x1) + log Z2(x1) / mu)).
    long double z1 = 0.0L;
    for (std::size_t a = 0; a < problem.num_actions(); ++a) {
      long double z2 = 0.0L;
      for (std::size_t o = 0; o < problem.num_outcomes(); ++o) {
        z2 += problem.channel(a)[o] * std::exp(static_cast<long double>(mu) * problem.outcome_utility(a)[o]);
      }
      EXPECT_NEAR(*s.log_z2[a], static_cast<double>(std::log(z2)), 1e-9);
      z1 += problem.prior_action()[a] *
            std::exp(lambda * (problem.action_utility()[a] + std::log(z2) / mu));
    }
    EXPECT_NEAR(*s.log_z1, static_cast<double>(std::log(z1)), 1e-9);
    EXPECT_NEAR(s.value, *s.log_z1 / lambda, 1e-9);
  }
}

TEST(OuterPolicy, NestingConsistencyAgainstGrid) {
  auto rng = random::make_rng(24, 0);
  for (int t = 0; t < 5; ++t) {
    const auto problem = random::random_two_stage(rng, {2, 2});
    const double lambda = random::uniform_real(rng, 0.5, 2.0);
    const double mu = random::uniform_real(rng, 0.5, 2.0);
    const auto s = outer_policy(problem, Temperature::finite(lambda), Temperature::finite(mu));
    const double analytic = oracle::two_stage_objective(problem, s.action_policy, s.outcome_beliefs,
                                                        lambda, mu);
    EXPECT_NEAR(analytic, s.value, 1e-9);
    const auto grid = oracle::exhaustive_two_stage(problem, lambda, mu, 1e-3);
    EXPECT_LE(grid.best_value, analytic + 1e-5);
  }
}

// --- regimes ----------------------------------------------------------------

TEST(Regimes, Labels) {
  const auto inf = Temperature::pos_inf();
  EXPECT_EQ(classify(spec(Temperature::finite(1), Temperature::finite(1))), Regime::RiskSeekingBounded);
  EXPECT_EQ(classify(spec(inf, Temperature::zero())), Regime::RiskNeutral);
  EXPECT_EQ(classify(spec(inf, Temperature::finite(-2))), Regime::RiskAverse);
  EXPECT_EQ(classify(spec(inf, Temperature::neg_inf())), Regime::Robust);
  EXPECT_EQ(classify(spec(Temperature::finite(1), Temperature::finite(-2))), Regime::BoundedRiskAverse);
  EXPECT_EQ(classify(spec(Temperature::finite(1), Temperature::zero())), Regime::BoundedRiskNeutral);
  EXPECT_EQ(classify(spec(Temperature::finite(1), Temperature::neg_inf())), Regime::BoundedRobust);
  EXPECT_EQ(classify(spec(inf, Temperature::finite(1))), Regime::RationalRiskSeeking);
  EXPECT_EQ(to_string(Regime::RiskSeekingBounded), "risk-seeking-bounded");
}

TEST(Regimes, ZeroLambdaUnsupported) {
  const auto problem = make_problem({0.5, 0.5}, {{1.0}, {1.0}}, {0, 1}, {{0}, {0}});
  try {
    solve_regime(problem, spec(Temperature::zero(), Temperature::finite(1)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedRegime);
  }
}

TEST(Regimes, RobustPicksMaxMin) {
  // Action 0: mean 2, worst 1. Action 1: mean 2, worst 2 (rows {3,1}, {2,2}).
  const auto problem = make_problem({0.5, 0.5}, {{0.5, 0.5}, {0.5, 0.5}}, {0, 0},
                                    {{3.0, 1.0}, {2.0, 2.0}});
  const auto s = solve_regime(problem, spec(Temperature::pos_inf(), Temperature::neg_inf()));
  EXPECT_EQ(s.regime, Regime::Robust);
  EXPECT_EQ(s.action_policy, FiniteDistribution::point_mass(problem.actions(), 1));
  EXPECT_EQ(s.value, 2.0);
}

TEST(Regimes, RiskNeutralMatchesBruteForce) {
  auto rng = random::make_rng(25, 0);
  int checked = 0;
  for (int t = 0; t < 300; ++t) {
    const auto problem = random::random_two_stage(rng, {4, 3, true});
    std::vector<double> eu(problem.num_actions(), 0.0);
    for (std::size_t a = 0; a < eu.size(); ++a) {
      for (std::size_t o = 0; o < problem.num_outcomes(); ++o) {
        eu[a] += problem.channel(a)[o] * problem.outcome_utility(a)[o];
      }
    }
    const std::size_t best = static_cast<std::size_t>(std::max_element(eu.begin(), eu.end()) - eu.begin());
    const auto s = solve_regime(problem, spec(Temperature::pos_inf(), Temperature::zero()));
    EXPECT_EQ(s.action_policy[best], 1.0);
    ++checked;
  }
  EXPECT_EQ(checked, 300);
}

TEST(Regimes, MatchesValueRecursionOnEquivalentTree) {
  auto rng = random::make_rng(26, 0);
  for (int t = 0; t < 50; ++t) {
    const auto problem = random::random_two_stage(rng, {3, 3});
    const auto temps = spec(Temperature::finite(1), Temperature::finite(1));
    const auto s = solve_regime(problem, temps);
    const auto tree = to_tree(problem);
    const auto v = value_recursion(tree, temps);
    EXPECT_NEAR(v.root_value(tree), s.value, 1e-12);
    const auto& root_policy = *v.policies[tree.root()];
    for (std::size_t a = 0; a < problem.num_actions(); ++a) {
      EXPECT_NEAR(root_policy[a], s.action_policy[a], 1e-12);
      const auto& inner = *v.policies[tree.node(tree.root()).edges[a].child];
      for (std::size_t o = 0; o < problem.num_outcomes(); ++o) {
        EXPECT_NEAR(inner[o], s.outcome_beliefs[a][o], 1e-12);
      }
    }
  }
}

// --- scalar choices ---------------------------------------------------------

TEST(Minimax, Examples) {
  const auto problem = make_problem({0.5, 0.5}, {{0.5, 0.5}, {0.5, 0.5}}, {0, 0},
                                    {{3.0, 1.0}, {2.0, 2.0}});
  const auto c = minimax_solve(problem);
  EXPECT_EQ(c.index, 1u);
  EXPECT_EQ(c.label, "a1");
  EXPECT_EQ(c.value, 2.0);

  const auto flat = make_problem({0.5, 0.5}, {{0.5, 0.5}, {0.5, 0.5}}, {0, 0}, {{4, 4}, {4, 4}});
  EXPECT_EQ(minimax_solve(flat).index, 0u);
  EXPECT_EQ(minimax_solve(flat).value, 4.0);
}

TEST(Minimax, ZeroProbabilityOutcomeExcluded) {
  const auto problem = make_problem({0.5, 0.5}, {{1.0, 0.0}, {0.5, 0.5}}, {0, 0},
                                    {{3.0, -50.0}, {2.0, 2.0}});
  const auto c = minimax_solve(problem);
  EXPECT_EQ(c.index, 0u);
  EXPECT_EQ(c.value, 3.0);
  const auto e = oracle::enumerate_minimax(problem);
  EXPECT_EQ(e.index, c.index);
  EXPECT_EQ(e.value, c.value);
}

TEST(RiskSensitive, NearZeroMatchesRiskNeutral) {
  const auto problem = make_problem({0.5, 0.5}, {{0.5, 0.5}, {0.9, 0.1}}, {0, 0},
                                    {{0.0, 3.0}, {2.0, -1.0}});
  EXPECT_EQ(risk_sensitive_argmax(problem, -1e-8).index, 1u);
}

TEST(RiskSensitive, StrongAversionMatchesMinimax) {
  // Action 0 has the higher mean (2.5 vs 1.5) but the worse minimum.
  const auto problem = make_problem({0.5, 0.5}, {{0.5, 0.5}, {0.5, 0.5}}, {0, 0},
                                    {{6.0, -1.0}, {1.0, 2.0}});
  EXPECT_EQ(risk_sensitive_argmax(problem, 1e-3).index, 0u);
  EXPECT_EQ(risk_sensitive_argmax(problem, -100.0).index, minimax_solve(problem).index);
  EXPECT_EQ(minimax_solve(problem).index, 1u);
}

TEST(RiskSensitive, DeterministicChannelsIgnoreMu) {
  const auto problem = make_problem({0.3, 0.3, 0.4}, {{1, 0}, {0, 1}, {1, 0}}, {0.5, 0, -1},
                                    {{1.0, 9.0}, {-9.0, 2.0}, {2.0, 0.0}});
  for (double mu : {-100.0, -1.0, -1e-6, 1e-6, 1.0, 100.0}) {
    EXPECT_EQ(risk_sensitive_argmax(problem, mu).index, 1u);
  }
}

TEST(RiskSensitive, RejectsZeroAndNonFinite) {
  const auto problem = make_problem({1.0}, {{1.0}}, {0}, {{0}});
  EXPECT_THROW(risk_sensitive_argmax(problem, 0.0), Error);
  EXPECT_THROW(risk_sensitive_argmax(problem, -INFINITY), Error);
}

TEST(RiskSensitive, LimitChainStabilizesToMinimax) {
  auto rng = random::make_rng(27, 0);
  for (int t = 0; t < 200; ++t) {
    const auto problem = random::random_two_stage(rng, {4, 4});
    const auto mm = oracle::enumerate_minimax(problem);
    EXPECT_EQ(minimax_solve(problem).index, mm.index);
    // Only instances whose minimax action wins by a visible margin.
    bool unique = true;
    for (std::size_t a = 0; a < problem.num_actions(); ++a) {
      if (a == mm.index) continue;
      double worst = INFINITY;
      for (std::size_t o = 0; o < problem.num_outcomes(); ++o) {
        worst = std::min(worst, problem.outcome_utility(a)[o]);
      }
      if (problem.action_utility()[a] + worst > mm.value - 0.05) unique = false;
    }
    if (!unique) continue;
    EXPECT_EQ(risk_sensitive_argmax(problem, -1e4).index, mm.index);
  }
}

// --- trees --------------------------------------------------------------------

DecisionTree chain(const std::vector<double>& utilities) {
  std::vector<TreeNode> nodes;
  for (std::size_t i = 0; i < utilities.size(); ++i) {
    nodes.push_back({"n" + std::to_string(i), StageTag::Lambda, {{i + 1, 1.0, utilities[i]}}});
  }
  nodes.push_back({"leaf", StageTag::Lambda, {}});
  return DecisionTree(std::move(nodes), 0);
}

DecisionTree binary_tree(double p_left, const std::vector<double>& leaf_utilities) {
  std::vector<TreeNode> nodes{
      {"r", StageTag::Lambda, {{1, p_left, 0.0}, {2, 1.0 - p_left, 0.0}}},
      {"L", StageTag::Lambda, {{3, 0.5, leaf_utilities[0]}, {4, 0.5, leaf_utilities[1]}}},
      {"R", StageTag::Lambda, {{5, 0.5, leaf_utilities[2]}, {6, 0.5, leaf_utilities[3]}}},
      {"LL", StageTag::Lambda, {}},
      {"LR", StageTag::Lambda, {}},
      {"RL", StageTag::Lambda, {}},
      {"RR", StageTag::Lambda, {}}};
  return DecisionTree(std::move(nodes), 0);
}

TEST(Bellman, ChainSumsUtilities) {
  const auto tree = chain({1.0, 2.0, 3.0});
  EXPECT_EQ(bellman_backup(tree).root_value(tree), 6.0);
  EXPECT_NEAR(value_recursion(tree, spec(Temperature::finite(0.37), Temperature::finite(2))).root_value(tree),
              6.0, 1e-12);
}

TEST(Bellman, BinaryTreeMaximum) {
  const auto tree = binary_tree(0.5, {4.0, 1.0, 2.0, 3.0});
  const auto v = bellman_backup(tree);
  EXPECT_EQ(v.root_value(tree), 4.0);
  EXPECT_EQ(*v.policies[0], FiniteDistribution::point_mass(tree.prior(0).labels(), 0));
  EXPECT_EQ(oracle::max_path_utility(tree), 4.0);
  const auto inf = value_recursion(tree, spec(Temperature::pos_inf(), Temperature::pos_inf()));
  EXPECT_EQ(inf.values, v.values);
}

TEST(Bellman, TiesSplitUniformly) {
  const auto tree = binary_tree(0.9, {4.0, 1.0, 4.0, 3.0});
  const auto v = bellman_backup(tree);
  EXPECT_EQ(v.policies[0]->probs()[0], 0.5);
  EXPECT_EQ(v.policies[0]->probs()[1], 0.5);
}

TEST(Bellman, LargeLambdaApproachesBackup) {
  auto rng = random::make_rng(28, 0);
  for (int t = 0; t < 50; ++t) {
    const auto tree = random::random_tree(rng, 3, 4);
    const auto temps = spec(Temperature::finite(1e4), Temperature::finite(1e4));
    EXPECT_NEAR(value_recursion(tree, temps).root_value(tree), bellman_backup(tree).root_value(tree),
                1e-2);
  }
}

TEST(ValueRecursion, DepthOneIsCertaintyEquivalent) {
  std::vector<TreeNode> nodes{{"r", StageTag::Lambda, {{1, 0.25, 1.0}, {2, 0.75, -2.0}}},
                              {"x", StageTag::Lambda, {}},
                              {"y", StageTag::Lambda, {}}};
  const DecisionTree tree(std::move(nodes), 0);
  const auto v = value_recursion(tree, spec(Temperature::finite(2.0), Temperature::finite(1.0)));
  const double expected = std::log(0.25 * std::exp(2.0) + 0.75 * std::exp(-4.0)) / 2.0;
  EXPECT_NEAR(v.root_value(tree), expected, 1e-15);
  EXPECT_EQ(v.values[1], 0.0);
  EXPECT_FALSE(v.policies[1].has_value());
}

TEST(ValueRecursion, PathSumIdentity) {
  auto rng = random::make_rng(29, 0);
  for (int t = 0; t < 50; ++t) {
    const auto tree = random::random_tree(rng, 3, 4);
    for (double lambda : {0.5, 1.0, 5.0}) {
      const auto l = Temperature::finite(lambda);
      EXPECT_NEAR(value_recursion(tree, spec(l, l)).root_value(tree),
                  oracle::path_enumeration(tree, lambda), 1e-9);
    }
  }
}

TEST(ValueRecursion, PriorRecoveryWithZeroUtilities) {
  auto rng = random::make_rng(30, 0);
  for (int t = 0; t < 30; ++t) {
    auto tree = random::random_tree(rng, 3, 3, 0.0, 0.0);
    const auto v = value_recursion(tree, spec(Temperature::finite(2.0), Temperature::finite(-3.0)));
    for (std::size_t i = 0; i < tree.size(); ++i) {
      EXPECT_EQ(v.values[i], 0.0);
      if (!tree.is_leaf(i)) {
        EXPECT_EQ(*v.policies[i], tree.prior(i));
      }
    }
  }
}

TEST(ValueRecursion, MixedTagsUseTheirTemperature) {
  std::vector<TreeNode> nodes{{"r", StageTag::Lambda, {{1, 1.0, 0.0}}},
                              {"m", StageTag::Mu, {{2, 0.5, 1.0}, {3, 0.5, 3.0}}},
                              {"x", StageTag::Lambda, {}},
                              {"y", StageTag::Lambda, {}}};
  const DecisionTree tree(std::move(nodes), 0);
  EXPECT_EQ(value_recursion(tree, spec(Temperature::finite(1), Temperature::neg_inf())).root_value(tree),
            1.0);
  EXPECT_EQ(value_recursion(tree, spec(Temperature::finite(1), Temperature::zero())).root_value(tree),
            2.0);
}

TEST(DecisionTree, RejectsCyclesAndSharedChildren) {
  std::vector<TreeNode> cyclic{{"a", StageTag::Lambda, {{1, 1.0, 0.0}}},
                               {"b", StageTag::Lambda, {{0, 1.0, 0.0}}}};
  try {
    DecisionTree(cyclic, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CyclicTree);
  }
  std::vector<TreeNode> shared{{"a", StageTag::Lambda, {{1, 0.5, 0.0}, {2, 0.5, 0.0}}},
                               {"b", StageTag::Lambda, {{3, 1.0, 0.0}}},
                               {"c", StageTag::Lambda, {{3, 1.0, 0.0}}},
                               {"d", StageTag::Lambda, {}}};
  EXPECT_THROW(DecisionTree(shared, 0), Error);
  EXPECT_THROW(parse_stage_tag("nu"), Error);
}

}  // namespace
}  // namespace freeutil
