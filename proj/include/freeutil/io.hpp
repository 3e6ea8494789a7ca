#ifndef FREEUTIL_IO_HPP
#define FREEUTIL_IO_HPP

// JSON problem files and number formatting for command-line output.
//
// A problem file looks like
//
//   {
//     "schema_version": "1.0",
//     "kind": "control" | "two_stage" | "tree",
//     "payload": { ... },
//     "temperatures": { "alpha": 0.5 }            // optional
//   }
//
// Temperature limits are spelled "inf", "-inf" and "zero". Unknown fields are
// rejected at every level.

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "freeutil/core.hpp"
#include "freeutil/problem.hpp"

namespace freeutil::io {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kSchemaVersion = "1.0";
inline constexpr int kSignificantDigits = 12;

enum class ProblemKind { Control, TwoStage, Tree };

constexpr std::string_view to_string(ProblemKind k) noexcept {
  switch (k) {
    case ProblemKind::Control: return "control";
    case ProblemKind::TwoStage: return "two_stage";
    case ProblemKind::Tree: return "tree";
  }
  return "unknown";
}

struct FileTemperatures {
  std::optional<Temperature> alpha;
  std::optional<Temperature> lambda;
  std::optional<Temperature> mu;

  friend bool operator==(const FileTemperatures&, const FileTemperatures&) = default;
};

struct ProblemFile {
  std::string schema_version{kSchemaVersion};
  std::variant<ControlProblem, TwoStageProblem, DecisionTree> payload;
  FileTemperatures temperatures;

  ProblemKind kind() const noexcept { return static_cast<ProblemKind>(payload.index()); }

  friend bool operator==(const ProblemFile&, const ProblemFile&) = default;
};

// ---------------------------------------------------------------------------
// Numbers and temperatures

/// x rounded to 12 significant digits, so that JSON output prints at most
/// that many.
inline double round_significant(double x) {
  if (!std::isfinite(x) || x == 0.0) return x == 0.0 ? 0.0 : x;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", kSignificantDigits, x);
  return std::strtod(buf, nullptr);
}

inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", kSignificantDigits, x == 0.0 ? 0.0 : x);
  return buf;
}

/// Output number: rounded to 12 significant digits; non-finite values as the
/// strings "inf", "-inf", "nan".
inline Json number(double x) {
  if (!std::isfinite(x)) return format_number(x);
  return round_significant(x);
}

inline Json number(const std::optional<double>& x) { return x ? number(*x) : Json(nullptr); }

/// Parses "inf", "-inf", "zero" or a finite nonzero real.
inline Temperature parse_temperature(std::string_view text) {
  if (text == "inf" || text == "+inf") return Temperature::pos_inf();
  if (text == "-inf") return Temperature::neg_inf();
  if (text == "zero") return Temperature::zero();
  const std::string s(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
    throw Error(ErrorCode::ParseError, "'" + s + "' is not a number, 'inf', '-inf' or 'zero'");
  }
  if (v == 0.0) throw Error(ErrorCode::ParseError, "write the zero limit as 'zero'");
  return Temperature::finite(v);
}

inline std::string format_temperature(const Temperature& t) {
  switch (t.kind()) {
    case Temperature::Kind::Zero: return "zero";
    case Temperature::Kind::PosInf: return "inf";
    case Temperature::Kind::NegInf: return "-inf";
    case Temperature::Kind::Finite: break;
  }
  return format_number(t.value());
}

/// Exact representation for problem files: finite values keep full precision.
inline Json temperature_to_json(const Temperature& t) {
  if (t.is_finite()) return t.value();
  return format_temperature(t);
}

/// Rounded representation for solver output.
inline Json temperature_output(const Temperature& t) {
  if (t.is_finite()) return number(t.value());
  return format_temperature(t);
}

// ---------------------------------------------------------------------------
// Strict JSON readers

namespace detail {

[[noreturn]] inline void fail(const std::string& context, const std::string& what) {
  throw Error(ErrorCode::ParseError, context + ": " + what);
}

inline void check_keys(const Json& j, const std::string& context,
                       std::initializer_list<std::string_view> required,
                       std::initializer_list<std::string_view> optional = {}) {
  if (!j.is_object()) fail(context, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (auto k : required) known = known || it.key() == k;
    for (auto k : optional) known = known || it.key() == k;
    if (!known) fail(context, "unknown field '" + it.key() + "'");
  }
  for (auto k : required) {
    if (!j.contains(k)) fail(context, "missing field '" + std::string(k) + "'");
  }
}

inline double read_number(const Json& j, const std::string& context) {
  if (!j.is_number()) fail(context, "expected a number");
  return j.get<double>();
}

inline std::string read_string(const Json& j, const std::string& context) {
  if (!j.is_string()) fail(context, "expected a string");
  return j.get<std::string>();
}

inline std::vector<double> read_numbers(const Json& j, const std::string& context) {
  if (!j.is_array()) fail(context, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(read_number(j[i], context + "[" + std::to_string(i) + "]"));
  }
  return out;
}

inline Labels read_labels(const Json& j, const std::string& context) {
  if (!j.is_array()) fail(context, "expected an array of labels");
  Labels out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(read_string(j[i], context + "[" + std::to_string(i) + "]"));
  }
  return out;
}

inline std::vector<std::vector<double>> read_matrix(const Json& j, const std::string& context) {
  if (!j.is_array()) fail(context, "expected an array of rows");
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(read_numbers(j[i], context + "[" + std::to_string(i) + "]"));
  }
  return out;
}

inline Temperature read_temperature(const Json& j, const std::string& context) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s != "inf" && s != "-inf" && s != "zero") {
      fail(context, "limit must be \"inf\", \"-inf\" or \"zero\"");
    }
    return parse_temperature(s);
  }
  const double v = read_number(j, context);
  if (v == 0.0) fail(context, "write the zero limit as \"zero\"");
  return Temperature::finite(v);
}

inline ControlProblem read_control(const Json& j) {
  check_keys(j, "payload", {"outcomes", "prior", "utility"});
  auto labels = read_labels(j["outcomes"], "payload.outcomes");
  FiniteDistribution prior(labels, read_numbers(j["prior"], "payload.prior"));
  UtilityTable utility(labels, read_numbers(j["utility"], "payload.utility"));
  return ControlProblem(std::move(prior), utility);
}

inline TwoStageProblem read_two_stage(const Json& j) {
  check_keys(j, "payload",
             {"actions", "outcomes", "prior_action", "channel", "action_utility", "outcome_utility"});
  const auto actions = read_labels(j["actions"], "payload.actions");
  const auto outcomes = read_labels(j["outcomes"], "payload.outcomes");
  const auto channel = read_matrix(j["channel"], "payload.channel");
  const auto utility = read_matrix(j["outcome_utility"], "payload.outcome_utility");
  if (channel.size() != actions.size() || utility.size() != actions.size()) {
    throw Error(ErrorCode::LabelMismatch, "payload: one channel and utility row per action required");
  }
  std::vector<FiniteDistribution> rows;
  std::vector<UtilityTable> utility_rows;
  for (std::size_t a = 0; a < actions.size(); ++a) {
    rows.emplace_back(outcomes, channel[a]);
    utility_rows.emplace_back(outcomes, utility[a]);
  }
  return TwoStageProblem(FiniteDistribution(actions, read_numbers(j["prior_action"], "payload.prior_action")),
                         std::move(rows),
                         UtilityTable(actions, read_numbers(j["action_utility"], "payload.action_utility")),
                         utility_rows);
}

inline DecisionTree read_tree(const Json& j) {
  check_keys(j, "payload", {"root", "nodes"});
  const auto root = read_string(j["root"], "payload.root");
  const Json& jn = j["nodes"];
  if (!jn.is_array()) fail("payload.nodes", "expected an array of nodes");

  std::vector<TreeNode> nodes;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < jn.size(); ++i) {
    const std::string ctx = "payload.nodes[" + std::to_string(i) + "]";
    check_keys(jn[i], ctx, {"id"}, {"tag", "children"});
    ids.push_back(read_string(jn[i]["id"], ctx + ".id"));
  }
  auto index_of = [&](const std::string& id, const std::string& ctx) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] == id) return i;
    }
    fail(ctx, "unknown node '" + id + "'");
  };
  for (std::size_t i = 0; i < jn.size(); ++i) {
    const std::string ctx = "payload.nodes[" + std::to_string(i) + "]";
    TreeNode node{ids[i], StageTag::Lambda, {}};
    if (jn[i].contains("tag")) node.tag = parse_stage_tag(read_string(jn[i]["tag"], ctx + ".tag"));
    if (jn[i].contains("children")) {
      const Json& jc = jn[i]["children"];
      if (!jc.is_array()) fail(ctx + ".children", "expected an array");
      for (std::size_t k = 0; k < jc.size(); ++k) {
        const std::string cctx = ctx + ".children[" + std::to_string(k) + "]";
        check_keys(jc[k], cctx, {"node", "prior", "utility"});
        node.edges.push_back(TreeEdge{index_of(read_string(jc[k]["node"], cctx + ".node"), cctx),
                                      read_number(jc[k]["prior"], cctx + ".prior"),
                                      read_number(jc[k]["utility"], cctx + ".utility")});
      }
    }
    nodes.push_back(std::move(node));
  }
  const std::size_t root_index = index_of(root, "payload.root");
  return DecisionTree(std::move(nodes), root_index);
}

inline FileTemperatures read_temperatures(const Json& j, ProblemKind kind) {
  FileTemperatures t;
  if (kind == ProblemKind::Control) {
    check_keys(j, "temperatures", {}, {"alpha"});
  } else {
    check_keys(j, "temperatures", {}, {"lambda", "mu"});
  }
  if (j.contains("alpha")) t.alpha = read_temperature(j["alpha"], "temperatures.alpha");
  if (j.contains("lambda")) t.lambda = read_temperature(j["lambda"], "temperatures.lambda");
  if (j.contains("mu")) t.mu = read_temperature(j["mu"], "temperatures.mu");
  return t;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Problem files

inline ProblemFile from_json(const Json& j) {
  detail::check_keys(j, "problem", {"schema_version", "kind", "payload"}, {"temperatures"});
  ProblemFile file;
  file.schema_version = detail::read_string(j["schema_version"], "schema_version");
  if (file.schema_version != kSchemaVersion) {
    detail::fail("schema_version", "unsupported version '" + file.schema_version + "'");
  }
  const auto kind = detail::read_string(j["kind"], "kind");
  ProblemKind k{};
  if (kind == "control") {
    k = ProblemKind::Control;
    file.payload = detail::read_control(j["payload"]);
  } else if (kind == "two_stage") {
    k = ProblemKind::TwoStage;
    file.payload = detail::read_two_stage(j["payload"]);
  } else if (kind == "tree") {
    k = ProblemKind::Tree;
    file.payload = detail::read_tree(j["payload"]);
  } else {
    detail::fail("kind", "unknown kind '" + kind + "'");
  }
  if (j.contains("temperatures")) file.temperatures = detail::read_temperatures(j["temperatures"], k);
  return file;
}

inline ProblemFile parse_problem(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return from_json(j);
}

inline ProblemFile load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

inline Json payload_to_json(const ControlProblem& p) {
  Json j;
  j["outcomes"] = p.prior.labels();
  j["prior"] = std::vector<double>(p.prior.probs().begin(), p.prior.probs().end());
  j["utility"] = std::vector<double>(p.utility.values().begin(), p.utility.values().end());
  return j;
}

inline Json payload_to_json(const TwoStageProblem& p) {
  Json j;
  j["actions"] = p.actions();
  j["outcomes"] = p.outcomes();
  const auto& prior = p.prior_action().probs();
  j["prior_action"] = std::vector<double>(prior.begin(), prior.end());
  Json channel = Json::array();
  Json utility = Json::array();
  for (std::size_t a = 0; a < p.num_actions(); ++a) {
    const auto row = p.channel(a).probs();
    channel.push_back(std::vector<double>(row.begin(), row.end()));
    const auto u = p.outcome_utility(a).values();
    utility.push_back(std::vector<double>(u.begin(), u.end()));
  }
  j["channel"] = std::move(channel);
  const auto au = p.action_utility().values();
  j["action_utility"] = std::vector<double>(au.begin(), au.end());
  j["outcome_utility"] = std::move(utility);
  return j;
}

inline Json payload_to_json(const DecisionTree& t) {
  Json j;
  j["root"] = t.node(t.root()).id;
  Json nodes = Json::array();
  for (const auto& n : t.nodes()) {
    Json jn;
    jn["id"] = n.id;
    if (!n.edges.empty() || n.tag != StageTag::Lambda) jn["tag"] = std::string(to_string(n.tag));
    if (!n.edges.empty()) {
      Json children = Json::array();
      for (const auto& e : n.edges) {
        children.push_back(Json{{"node", t.node(e.child).id}, {"prior", e.prior}, {"utility", e.utility}});
      }
      jn["children"] = std::move(children);
    }
    nodes.push_back(std::move(jn));
  }
  j["nodes"] = std::move(nodes);
  return j;
}

inline Json to_json(const ProblemFile& file) {
  Json j;
  j["schema_version"] = file.schema_version;
  j["kind"] = std::string(to_string(file.kind()));
  j["payload"] = std::visit([](const auto& p) { return payload_to_json(p); }, file.payload);
  const auto& t = file.temperatures;
  if (t.alpha || t.lambda || t.mu) {
    Json jt = Json::object();
    if (t.alpha) jt["alpha"] = temperature_to_json(*t.alpha);
    if (t.lambda) jt["lambda"] = temperature_to_json(*t.lambda);
    if (t.mu) jt["mu"] = temperature_to_json(*t.mu);
    j["temperatures"] = std::move(jt);
  }
  return j;
}

inline std::string serialize(const ProblemFile& file) { return to_json(file).dump(2) + "\n"; }

}  // namespace freeutil::io

#endif  // FREEUTIL_IO_HPP
