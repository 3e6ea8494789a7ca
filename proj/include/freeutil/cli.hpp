#ifndef FREEUTIL_CLI_HPP
#define FREEUTIL_CLI_HPP

// Command-line front end. `run` is the whole program minus process plumbing,
// so tests can drive it in-process.
//
//   freeutil [--units nats|bits] [--output PATH] solve <file> [--lambda V] [--mu V] [--alpha V]
//   freeutil sweep <file> --param lambda|mu|alpha --grid v1,v2,...
//   freeutil regimes <file> [--mu V]
//   freeutil verify <file> | --suite NAME [--perturb EPS]
//
// Exit codes: 0 success, 2 input error, 3 solver error, 4 verification failure.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "freeutil/core.hpp"
#include "freeutil/free_utility.hpp"
#include "freeutil/io.hpp"
#include "freeutil/oracle.hpp"
#include "freeutil/problem.hpp"
#include "freeutil/sequential.hpp"
#include "freeutil/verify.hpp"

namespace freeutil::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitVerify = 4;

inline constexpr const char* kSeedVariable = "FREEUTIL_SEED";

using io::Json;

/// Thrown for malformed input; maps to exit code 2.
struct InputError : Error {
  using Error::Error;
  explicit InputError(const Error& e) : Error(e) {}
};

struct GlobalOptions {
  bool bits = false;
  std::string output;
};

namespace detail {

inline double information(double nats, const GlobalOptions& g) {
  return g.bits ? nats / std::log(2.0) : nats;
}

inline Json distribution_json(const FiniteDistribution& p) {
  Json j = Json::object();
  for (std::size_t i = 0; i < p.size(); ++i) j[p.labels()[i]] = io::number(p[i]);
  return j;
}

inline io::ProblemFile load(const std::string& path) {
  try {
    return io::load_problem(path);
  } catch (const Error& e) {
    throw InputError(e);
  }
}

inline Temperature parse_override(const std::string& text) {
  try {
    return io::parse_temperature(text);
  } catch (const Error& e) {
    throw InputError(e);
  }
}

inline std::size_t mode_index(const FiniteDistribution& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return best;
}

struct ControlSolution {
  Temperature alpha = Temperature::finite(1.0);
  FiniteDistribution policy;
  double expected_utility = 0.0;
  double information_cost = 0.0;
  double value = 0.0;
  double achieved_kl = 0.0;
  std::optional<double> log_z;
};

inline ControlSolution solve_control(const ControlProblem& p, const Temperature& alpha) {
  ControlSolution s;
  s.alpha = alpha;
  s.policy = bounded_control(p.prior, p.utility, alpha);
  s.achieved_kl = kl_divergence(s.policy, p.prior);
  s.expected_utility = expectation(s.policy, p.utility);
  if (alpha.is_finite()) {
    s.information_cost = alpha.value() * s.achieved_kl;
    // log sum prior exp(u / alpha) = value / alpha at the optimum.
    s.log_z = certainty_equivalent(p.prior, p.utility, Temperature::finite(1.0 / alpha.value())) /
              alpha.value();
  }
  s.value = s.expected_utility - s.information_cost;
  return s;
}

inline Json control_json(const ControlSolution& s, const GlobalOptions& g) {
  Json j;
  j["kind"] = "control";
  j["units"] = g.bits ? "bits" : "nats";
  j["alpha"] = io::temperature_output(s.alpha);
  j["policy"] = distribution_json(s.policy);
  j["expected_utility"] = io::number(s.expected_utility);
  j["information_cost"] = io::number(s.information_cost);
  j["value"] = io::number(s.value);
  j["achieved_kl"] = io::number(information(s.achieved_kl, g));
  j["log_z"] = io::number(s.log_z);
  return j;
}

inline Json two_stage_json(const TwoStageProblem& p, const TwoStageSolution& s,
                           const GlobalOptions& g) {
  Json j;
  j["kind"] = "two_stage";
  j["units"] = g.bits ? "bits" : "nats";
  j["lambda"] = io::temperature_output(s.temps.lambda);
  j["mu"] = io::temperature_output(s.temps.mu);
  j["regime"] = s.regime ? std::string(to_string(*s.regime)) : std::string();
  j["action_policy"] = distribution_json(s.action_policy);
  Json beliefs = Json::object();
  Json values = Json::object();
  Json action_values = Json::object();
  Json log_z2 = Json::object();
  for (std::size_t a = 0; a < p.num_actions(); ++a) {
    const auto& label = p.actions()[a];
    beliefs[label] = distribution_json(s.outcome_beliefs[a]);
    values[label] = io::number(s.values[a]);
    action_values[label] = io::number(s.action_values[a]);
    log_z2[label] = io::number(s.log_z2[a]);
  }
  j["outcome_beliefs"] = std::move(beliefs);
  j["values"] = std::move(values);
  j["action_values"] = std::move(action_values);
  j["log_z1"] = io::number(s.log_z1);
  j["log_z2"] = std::move(log_z2);
  j["value"] = io::number(s.value);
  j["achieved_c1"] = io::number(information(s.achieved_c1, g));
  j["achieved_c2"] = io::number(information(s.achieved_c2, g));
  return j;
}

inline Json tree_json(const DecisionTree& t, const TemperatureSpec& temps, const TreeValue& v,
                      const GlobalOptions& g) {
  Json j;
  j["kind"] = "tree";
  j["units"] = g.bits ? "bits" : "nats";
  j["lambda"] = io::temperature_output(temps.lambda);
  j["mu"] = io::temperature_output(temps.mu);
  j["root_value"] = io::number(v.root_value(t));
  j["root_kl"] = io::number(information(kl_divergence(*v.policies[t.root()], t.prior(t.root())), g));
  Json values = Json::object();
  Json policies = Json::object();
  for (std::size_t i : t.post_order()) {
    values[t.node(i).id] = io::number(v.values[i]);
    if (v.policies[i]) policies[t.node(i).id] = distribution_json(*v.policies[i]);
  }
  j["values"] = std::move(values);
  j["policies"] = std::move(policies);
  return j;
}

struct Overrides {
  std::optional<Temperature> alpha;
  std::optional<Temperature> lambda;
  std::optional<Temperature> mu;
};

inline Temperature resolve_alpha(const io::ProblemFile& f, const Overrides& o) {
  if (o.lambda || o.mu) throw InputError(ErrorCode::ParseError, "control problems take --alpha only");
  return o.alpha ? *o.alpha : f.temperatures.alpha.value_or(Temperature::finite(1.0));
}

inline TemperatureSpec resolve_spec(const io::ProblemFile& f, const Overrides& o) {
  if (o.alpha) throw InputError(ErrorCode::ParseError, "--alpha applies to control problems only");
  TemperatureSpec t;
  t.lambda = o.lambda ? *o.lambda : f.temperatures.lambda.value_or(Temperature::finite(1.0));
  t.mu = o.mu ? *o.mu : f.temperatures.mu.value_or(Temperature::finite(1.0));
  return t;
}

inline Json solve_document(const io::ProblemFile& f, const Overrides& o, const GlobalOptions& g) {
  switch (f.kind()) {
    case io::ProblemKind::Control: {
      const auto alpha = resolve_alpha(f, o);
      return control_json(solve_control(std::get<ControlProblem>(f.payload), alpha), g);
    }
    case io::ProblemKind::TwoStage: {
      const auto& p = std::get<TwoStageProblem>(f.payload);
      return two_stage_json(p, solve_regime(p, resolve_spec(f, o)), g);
    }
    case io::ProblemKind::Tree: {
      const auto& t = std::get<DecisionTree>(f.payload);
      const auto temps = resolve_spec(f, o);
      return tree_json(t, temps, value_recursion(t, temps), g);
    }
  }
  return {};
}

inline std::vector<Temperature> parse_grid(const std::string& text) {
  std::vector<Temperature> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) grid.push_back(parse_override(item));
  if (grid.empty()) throw InputError(ErrorCode::ParseError, "--grid needs at least one value");
  return grid;
}

/// One CSV table: parameter, policy entries, value, achieved KL (and c2 for
/// two-stage problems), one row per grid value in grid order.
inline std::string sweep_table(const io::ProblemFile& f, const std::string& param,
                               const std::vector<Temperature>& grid, const GlobalOptions& g) {
  const bool control = f.kind() == io::ProblemKind::Control;
  if (control != (param == "alpha")) {
    throw InputError(ErrorCode::ParseError, "parameter '" + param + "' does not apply to " +
                                                std::string(io::to_string(f.kind())) + " problems");
  }
  if (param != "alpha" && param != "lambda" && param != "mu") {
    throw InputError(ErrorCode::ParseError, "unknown sweep parameter '" + param + "'");
  }
  auto override_for = [&](const Temperature& t) {
    Overrides o;
    if (param == "alpha") o.alpha = t;
    if (param == "lambda") o.lambda = t;
    if (param == "mu") o.mu = t;
    return o;
  };

  std::ostringstream out;
  Labels labels;
  switch (f.kind()) {
    case io::ProblemKind::Control: labels = std::get<ControlProblem>(f.payload).prior.labels(); break;
    case io::ProblemKind::TwoStage: labels = std::get<TwoStageProblem>(f.payload).actions(); break;
    case io::ProblemKind::Tree: {
      const auto& t = std::get<DecisionTree>(f.payload);
      labels = t.prior(t.root()).labels();
      break;
    }
  }
  out << param;
  for (const auto& l : labels) out << ",p:" << l;
  out << ",value,achieved_kl";
  if (f.kind() == io::ProblemKind::TwoStage) out << ",achieved_c2";
  out << "\n";

  for (const auto& point : grid) {
    const auto o = override_for(point);
    FiniteDistribution policy;
    double value = 0.0;
    double kl = 0.0;
    std::optional<double> c2;
    switch (f.kind()) {
      case io::ProblemKind::Control: {
        const auto s = solve_control(std::get<ControlProblem>(f.payload), resolve_alpha(f, o));
        policy = s.policy;
        value = s.value;
        kl = s.achieved_kl;
        break;
      }
      case io::ProblemKind::TwoStage: {
        const auto s = solve_regime(std::get<TwoStageProblem>(f.payload), resolve_spec(f, o));
        policy = s.action_policy;
        value = s.value;
        kl = s.achieved_c1;
        c2 = s.achieved_c2;
        break;
      }
      case io::ProblemKind::Tree: {
        const auto& t = std::get<DecisionTree>(f.payload);
        const auto v = value_recursion(t, resolve_spec(f, o));
        policy = *v.policies[t.root()];
        value = v.root_value(t);
        kl = kl_divergence(policy, t.prior(t.root()));
        break;
      }
    }
    out << io::format_temperature(point);
    for (double p : policy.probs()) out << ',' << io::format_number(p);
    out << ',' << io::format_number(value) << ',' << io::format_number(information(kl, g));
    if (c2) out << ',' << io::format_number(information(*c2, g));
    out << "\n";
  }
  return out.str();
}

inline Json regimes_document(const TwoStageProblem& p, double mu_for_risk, const GlobalOptions& g) {
  struct Section {
    const char* name;
    TemperatureSpec temps;
  };
  const Section sections[] = {
      {"risk-seeking-bounded", {Temperature::finite(1.0), Temperature::finite(1.0)}},
      {"risk-neutral", {Temperature::pos_inf(), Temperature::zero()}},
      {"risk-averse", {Temperature::pos_inf(), Temperature::finite(mu_for_risk)}},
      {"robust", {Temperature::pos_inf(), Temperature::neg_inf()}},
  };
  Json j;
  j["kind"] = "regimes";
  j["units"] = g.bits ? "bits" : "nats";
  j["mu_for_risk"] = io::number(mu_for_risk);
  Json list = Json::array();
  for (const auto& sec : sections) {
    const auto s = solve_regime(p, sec.temps);
    Json js;
    js["regime"] = sec.name;
    js["lambda"] = io::temperature_output(sec.temps.lambda);
    js["mu"] = io::temperature_output(sec.temps.mu);
    js["action"] = p.actions()[mode_index(s.action_policy)];
    js["policy"] = distribution_json(s.action_policy);
    js["value"] = io::number(s.value);
    list.push_back(std::move(js));
  }
  j["sections"] = std::move(list);
  return j;
}

inline Json certificate_json(const verify::Certificate& c) {
  Json j;
  j["name"] = c.name;
  j["cases"] = c.cases;
  j["analytic"] = io::number(c.analytic);
  j["oracle"] = io::number(c.oracle);
  j["gap"] = io::number(c.gap);
  j["tolerance"] = io::number(c.tolerance);
  j["pass"] = c.pass;
  return j;
}

/// Certificates for a single problem file, within the oracle size caps.
inline std::vector<verify::Certificate> verify_file(const io::ProblemFile& f,
                                                    const verify::Options& opt) {
  std::vector<verify::Certificate> out;
  auto gap_cert = [](std::string name, double analytic, double oracle, double gap, double tol) {
    verify::Certificate c{std::move(name), 1, analytic, oracle, gap, tol, gap <= tol};
    return c;
  };
  switch (f.kind()) {
    case io::ProblemKind::Control: {
      const auto& p = std::get<ControlProblem>(f.payload);
      if (p.prior.size() > oracle::kMaxGridOutcomes) {
        throw InputError(ErrorCode::TooManyOutcomes,
                         std::to_string(p.prior.size()) + " outcomes exceed the grid cap of " +
                             std::to_string(oracle::kMaxGridOutcomes));
      }
      const auto alpha = f.temperatures.alpha.value_or(Temperature::finite(1.0));
      if (!alpha.is_finite()) throw InputError(ErrorCode::DomainError, "verify needs a finite alpha");
      const auto policy =
          verify::detail::perturbed(bounded_control(p.prior, p.utility, alpha), opt.perturbation);
      const double analytic = oracle::control_objective(policy, p.prior, p.utility, alpha.value());
      const auto grid = oracle::simplex_grid_search(p.prior, p.utility, alpha.value());
      out.push_back(gap_cert("control-optimality", analytic, grid.best_value,
                             grid.best_value - analytic, verify::kObjectiveGap));
      break;
    }
    case io::ProblemKind::TwoStage: {
      const auto& p = std::get<TwoStageProblem>(f.payload);
      if (p.num_actions() != 2 || p.num_outcomes() != 2) {
        throw InputError(ErrorCode::TooLarge, "file verification supports 2x2 problems only");
      }
      const auto temps = resolve_spec(f, {});
      if (!temps.lambda.is_finite() || !temps.mu.is_finite() || temps.mu.value() <= 0.0) {
        throw InputError(ErrorCode::DomainError, "verify needs finite positive lambda and mu");
      }
      const auto s = solve_regime(p, temps);
      std::vector<FiniteDistribution> beliefs;
      for (const auto& b : s.outcome_beliefs) {
        beliefs.push_back(verify::detail::perturbed(b, opt.perturbation));
      }
      const double analytic = oracle::two_stage_objective(
          p, verify::detail::perturbed(s.action_policy, opt.perturbation), beliefs,
          temps.lambda.value(), temps.mu.value());
      const auto grid = oracle::exhaustive_two_stage(p, temps.lambda.value(), temps.mu.value());
      out.push_back(gap_cert("two-stage-optimality", analytic, grid.best_value,
                             grid.best_value - analytic, verify::kObjectiveGap));
      const auto mm = minimax_solve(p);
      const auto truth = oracle::enumerate_minimax(p);
      out.push_back(gap_cert("minimax-enumeration", mm.value, truth.value,
                             mm.index == truth.index ? std::abs(mm.value - truth.value) : INFINITY,
                             verify::kIdentityTolerance));
      break;
    }
    case io::ProblemKind::Tree: {
      const auto& t = std::get<DecisionTree>(f.payload);
      const auto lambda = f.temperatures.lambda.value_or(Temperature::finite(1.0));
      if (!lambda.is_finite()) throw InputError(ErrorCode::DomainError, "verify needs a finite lambda");
      double paths = 0.0;
      double max_path = 0.0;
      try {
        paths = oracle::path_enumeration(t, lambda.value());
        max_path = oracle::max_path_utility(t);
      } catch (const Error& e) {
        throw InputError(e);
      }
      const double recursive = value_recursion(t, {lambda, lambda}).root_value(t);
      out.push_back(gap_cert("value-recursion-telescoping", recursive, paths,
                             std::abs(recursive - paths), verify::kIdentityTolerance));
      const double bellman = bellman_backup(t).root_value(t);
      out.push_back(gap_cert("bellman-max-path", bellman, max_path, std::abs(bellman - max_path),
                             verify::kIdentityTolerance));
      break;
    }
  }
  return out;
}

/// Seed from the environment, returned with its verbatim spelling.
inline std::pair<std::uint64_t, std::string> seed_from_environment() {
  const char* raw = std::getenv(kSeedVariable);
  if (raw == nullptr) return {verify::kDefaultSeed, std::to_string(verify::kDefaultSeed)};
  const std::string text(raw);
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE || text[0] == '-') {
    throw InputError(ErrorCode::ParseError,
                     std::string(kSeedVariable) + " must be a non-negative integer, got '" + text + "'");
  }
  return {v, text};
}

inline void emit(const std::string& text, const GlobalOptions& g, std::ostream& out) {
  if (g.output.empty()) {
    out << text;
    return;
  }
  std::ofstream file(g.output, std::ios::binary);
  if (!file) throw InputError(ErrorCode::ParseError, "cannot write '" + g.output + "'");
  file << text;
}

}  // namespace detail

/// Runs the program on `args` (without the program name).
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bounded-rational decision solver: free utility, nested two-stage control, "
               "soft value recursion"};
  app.require_subcommand(1);
  GlobalOptions global;
  std::string units = "nats";
  app.add_option("--units", units, "Display unit for information quantities")
      ->check(CLI::IsMember({"nats", "bits"}));
  app.add_option("--output", global.output, "Write the result to this file instead of stdout");

  std::string file;
  std::string lambda_text;
  std::string mu_text;
  std::string alpha_text;
  auto* solve = app.add_subcommand("solve", "Solve a problem file");
  solve->fallthrough();
  solve->add_option("file", file, "Problem file")->required();
  solve->add_option("--lambda", lambda_text, "Agent inverse temperature (number, inf, zero)");
  solve->add_option("--mu", mu_text, "Environment inverse temperature (number, inf, -inf, zero)");
  solve->add_option("--alpha", alpha_text, "Conversion factor for control problems");

  std::string param;
  std::string grid_text;
  auto* sweep = app.add_subcommand("sweep", "Solve along a grid of one temperature");
  sweep->fallthrough();
  sweep->add_option("file", file, "Problem file")->required();
  sweep->add_option("--param", param, "lambda, mu or alpha")->required();
  sweep->add_option("--grid", grid_text, "Comma-separated values")->required();

  double regimes_mu = -1.0;
  auto* regimes = app.add_subcommand("regimes", "Compare the four decision regimes");
  regimes->fallthrough();
  regimes->add_option("file", file, "Two-stage problem file")->required();
  regimes->add_option("--mu", regimes_mu, "Risk sensitivity of the risk-averse section (< 0)");

  std::string suite;
  double perturbation = 0.0;
  auto* verify_cmd = app.add_subcommand("verify", "Certify solvers against brute-force oracles");
  verify_cmd->fallthrough();
  verify_cmd->add_option("file", file, "Problem file");
  verify_cmd->add_option("--suite", suite, "Built-in suite name, or 'all'");
  verify_cmd->add_option("--perturb", perturbation, "Harness self-test: corrupt analytic policies");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  global.bits = units == "bits";

  try {
    if (solve->parsed()) {
      const auto f = detail::load(file);
      detail::Overrides o;
      if (!lambda_text.empty()) o.lambda = detail::parse_override(lambda_text);
      if (!mu_text.empty()) o.mu = detail::parse_override(mu_text);
      if (!alpha_text.empty()) o.alpha = detail::parse_override(alpha_text);
      detail::emit(detail::solve_document(f, o, global).dump(2) + "\n", global, out);
      return kExitOk;
    }
    if (sweep->parsed()) {
      const auto f = detail::load(file);
      detail::emit(detail::sweep_table(f, param, detail::parse_grid(grid_text), global), global, out);
      return kExitOk;
    }
    if (regimes->parsed()) {
      const auto f = detail::load(file);
      if (f.kind() != io::ProblemKind::TwoStage) {
        throw InputError(ErrorCode::ParseError, "regimes needs a two_stage problem");
      }
      if (!(std::isfinite(regimes_mu) && regimes_mu < 0.0)) {
        throw InputError(ErrorCode::ParseError, "--mu must be a finite negative number");
      }
      detail::emit(
          detail::regimes_document(std::get<TwoStageProblem>(f.payload), regimes_mu, global).dump(2) + "\n",
          global, out);
      return kExitOk;
    }
    // verify
    if (file.empty() == suite.empty()) {
      throw InputError(ErrorCode::ParseError, "verify takes either a file or --suite NAME");
    }
    const auto [seed, seed_text] = detail::seed_from_environment();
    verify::Options opt{seed, perturbation};
    std::vector<verify::Certificate> certs;
    Json report;
    report["kind"] = "verify";
    if (!suite.empty()) {
      report["suite"] = suite;
      try {
        certs = verify::run_suite(suite, opt);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::DomainError) throw InputError(e);
        throw;
      }
    } else {
      report["file"] = file;
      certs = detail::verify_file(detail::load(file), opt);
    }
    report["seed"] = seed_text;
    report["perturbation"] = io::number(perturbation);
    bool pass = true;
    Json list = Json::array();
    for (const auto& c : certs) {
      pass = pass && c.pass;
      list.push_back(detail::certificate_json(c));
    }
    report["certificates"] = std::move(list);
    report["pass"] = pass;
    detail::emit(report.dump(2) + "\n", global, out);
    return pass ? kExitOk : kExitVerify;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitSolver;
  }
}

}  // namespace freeutil::cli

#endif  // FREEUTIL_CLI_HPP
