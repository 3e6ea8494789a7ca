#ifndef FREEUTIL_CORE_HPP
#define FREEUTIL_CORE_HPP

// Finite probability vocabulary shared by every solver: labeled
// distributions, utility tables, temperatures, and the elementary
// information measures (KL divergence, entropy, expectation). All
// quantities are in nats.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "freeutil/error.hpp"

namespace freeutil {

using Labels = std::vector<std::string>;

namespace tolerance {
/// Allowed deviation of a probability vector's sum from one at ingestion.
inline constexpr double kNormalization = 1e-9;
/// Two utilities closer than this count as tied for argmax/argmin limits.
inline constexpr double kTie = 1e-12;
}  // namespace tolerance

namespace detail {

inline std::optional<std::size_t> first_duplicate(std::span<const std::string> labels) {
  std::unordered_map<std::string_view, std::size_t> seen;
  seen.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!seen.emplace(labels[i], i).second) return i;
  }
  return std::nullopt;
}

}  // namespace detail

/// Checks the invariants of a probability vector without constructing it.
/// Returns the first violation found, checked in the order: finiteness,
/// sign, label uniqueness, normalization.
inline std::optional<Error> validate(std::span<const std::string> labels,
                                     std::span<const double> probs) {
  if (labels.size() != probs.size()) {
    return Error(ErrorCode::LabelMismatch, "expected " + std::to_string(labels.size()) +
                                              " probabilities, got " + std::to_string(probs.size()));
  }
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!std::isfinite(probs[i])) {
      return Error(ErrorCode::NonFinite, "probability of '" + labels[i] + "' is not finite");
    }
    if (probs[i] < 0.0) {
      return Error(ErrorCode::NegativeProbability,
                   "probability of '" + labels[i] + "' is " + std::to_string(probs[i]));
    }
  }
  if (auto dup = detail::first_duplicate(labels)) {
    return Error(ErrorCode::DuplicateLabel, "label '" + labels[*dup] + "' appears twice");
  }
  double sum = 0.0;
  for (double p : probs) sum += p;
  if (std::abs(sum - 1.0) > tolerance::kNormalization) {
    return Error(ErrorCode::NotNormalized, "probabilities sum to " + std::to_string(sum));
  }
  return std::nullopt;
}

/// Normalized probability vector over uniquely labeled outcomes. Immutable
/// after construction. Inputs within the normalization tolerance are
/// renormalized once here and treated as exact afterwards.
class FiniteDistribution {
 public:
  FiniteDistribution() = default;

  FiniteDistribution(Labels labels, std::vector<double> probs)
      : labels_(std::move(labels)), probs_(std::move(probs)) {
    if (auto err = validate(labels_, probs_)) throw *err;
    double sum = 0.0;
    for (double p : probs_) sum += p;
    // Already exact up to summation rounding: leave untouched so that a
    // serialized distribution reloads bit-for-bit.
    const double exact_band =
        8.0 * static_cast<double>(probs_.size()) * std::numeric_limits<double>::epsilon();
    if (std::abs(sum - 1.0) > exact_band) {
      for (double& p : probs_) p /= sum;
    }
  }

  static FiniteDistribution uniform(Labels labels) {
    const std::size_t n = labels.size();
    if (n == 0) throw Error(ErrorCode::EmptySupport, "uniform distribution over no outcomes");
    return FiniteDistribution(std::move(labels),
                              std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  static FiniteDistribution point_mass(Labels labels, std::size_t index) {
    std::vector<double> probs(labels.size(), 0.0);
    probs.at(index) = 1.0;
    return FiniteDistribution(std::move(labels), std::move(probs));
  }

  const Labels& labels() const noexcept { return labels_; }
  std::span<const double> probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

  std::optional<std::size_t> index_of(std::string_view label) const {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i] == label) return i;
    }
    return std::nullopt;
  }

  bool in_support(std::size_t i) const { return probs_[i] > 0.0; }

  friend bool operator==(const FiniteDistribution&, const FiniteDistribution&) = default;

 private:
  Labels labels_;
  std::vector<double> probs_;
};

/// Real-valued utility per labeled outcome. Only differences between values
/// carry meaning.
class UtilityTable {
 public:
  UtilityTable() = default;

  UtilityTable(Labels labels, std::vector<double> values)
      : labels_(std::move(labels)), values_(std::move(values)) {
    if (labels_.size() != values_.size()) {
      throw Error(ErrorCode::LabelMismatch, "expected " + std::to_string(labels_.size()) +
                                                " utilities, got " + std::to_string(values_.size()));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw Error(ErrorCode::NonFinite, "utility of '" + labels_[i] + "' is not finite");
      }
    }
    if (auto dup = detail::first_duplicate(labels_)) {
      throw Error(ErrorCode::DuplicateLabel, "label '" + labels_[*dup] + "' appears twice");
    }
  }

  static UtilityTable constant(Labels labels, double value) {
    const std::size_t n = labels.size();
    return UtilityTable(std::move(labels), std::vector<double>(n, value));
  }

  const Labels& labels() const noexcept { return labels_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  UtilityTable shifted(double offset) const {
    std::vector<double> v = values_;
    for (double& x : v) x += offset;
    return UtilityTable(labels_, std::move(v));
  }

  friend bool operator==(const UtilityTable&, const UtilityTable&) = default;

 private:
  Labels labels_;
  std::vector<double> values_;
};

/// Maps each position of `target` to the position of the same label in
/// `source`. Throws LabelMismatch unless both are the same label set.
inline std::vector<std::size_t> align_labels(const Labels& source, const Labels& target) {
  std::vector<std::size_t> map(target.size());
  if (source == target) {
    for (std::size_t i = 0; i < map.size(); ++i) map[i] = i;
    return map;
  }
  if (source.size() != target.size()) {
    throw Error(ErrorCode::LabelMismatch, "outcome sets have different sizes");
  }
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < source.size(); ++i) index.emplace(source[i], i);
  for (std::size_t i = 0; i < target.size(); ++i) {
    auto it = index.find(target[i]);
    if (it == index.end()) {
      throw Error(ErrorCode::LabelMismatch, "label '" + target[i] + "' missing");
    }
    map[i] = it->second;
  }
  return map;
}

/// Utility values reordered to follow the distribution's label order.
inline std::vector<double> aligned_values(const FiniteDistribution& p, const UtilityTable& u) {
  const auto map = align_labels(u.labels(), p.labels());
  std::vector<double> out(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) out[i] = u[map[i]];
  return out;
}

/// Numerically stable log(sum(exp(x))). Entries equal to -inf are skipped;
/// returns -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) {
    if (x != -std::numeric_limits<double>::infinity()) s += std::exp(x - m);
  }
  return m + std::log(s);
}

/// KL(p || q) in nats with 0 log(0/q) = 0.
inline double kl_divergence(const FiniteDistribution& p, const FiniteDistribution& q) {
  const auto map = align_labels(q.labels(), p.labels());
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = p[i];
    if (pi == 0.0) continue;
    const double qi = q[map[i]];
    if (qi == 0.0) {
      throw Error(ErrorCode::SupportMismatch,
                  "outcome '" + p.labels()[i] + "' has mass under p but none under q");
    }
    kl += pi * std::log(pi / qi);
  }
  return std::max(kl, 0.0);
}

/// Shannon entropy in nats with 0 log 0 = 0.
inline double entropy(const FiniteDistribution& p) {
  double h = 0.0;
  for (double pi : p.probs()) {
    if (pi > 0.0) h -= pi * std::log(pi);
  }
  return std::max(h, 0.0);
}

inline double expectation(const FiniteDistribution& p, const UtilityTable& u) {
  const auto values = aligned_values(p, u);
  double e = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) e += p[i] * values[i];
  return e;
}

/// A temperature-like parameter: either a finite real or one of the limits
/// 0, +inf, -inf. Limits are exact cases, never stand-in floats.
class Temperature {
 public:
  enum class Kind { Finite, Zero, PosInf, NegInf };

  static Temperature finite(double value) {
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::InvalidTemperature, "finite temperature must be a finite real");
    }
    if (value == 0.0) {
      throw Error(ErrorCode::InvalidTemperature, "use the zero limit instead of 0");
    }
    return Temperature(Kind::Finite, value);
  }
  static Temperature zero() { return Temperature(Kind::Zero, 0.0); }
  static Temperature pos_inf() {
    return Temperature(Kind::PosInf, std::numeric_limits<double>::infinity());
  }
  static Temperature neg_inf() {
    return Temperature(Kind::NegInf, -std::numeric_limits<double>::infinity());
  }

  Kind kind() const noexcept { return kind_; }
  bool is_finite() const noexcept { return kind_ == Kind::Finite; }
  bool is_zero() const noexcept { return kind_ == Kind::Zero; }
  bool is_pos_inf() const noexcept { return kind_ == Kind::PosInf; }
  bool is_neg_inf() const noexcept { return kind_ == Kind::NegInf; }
  bool is_infinite() const noexcept { return is_pos_inf() || is_neg_inf(); }

  /// Finite value, 0 for the zero limit, +-infinity for the infinite limits.
  double value() const noexcept { return value_; }

  friend bool operator==(const Temperature&, const Temperature&) = default;

 private:
  Temperature(Kind kind, double value) : kind_(kind), value_(value) {}

  Kind kind_ = Kind::Zero;
  double value_ = 0.0;
};

/// Inverse temperatures of a two-stage or sequential problem: lambda governs
/// the agent's own choices, mu the environment's move.
struct TemperatureSpec {
  Temperature lambda = Temperature::finite(1.0);
  Temperature mu = Temperature::finite(1.0);

  /// Finite lambda must be strictly positive. Limits are accepted here and
  /// rejected by solvers that do not support them.
  void validate() const {
    if (lambda.is_finite() && lambda.value() <= 0.0) {
      throw Error(ErrorCode::InvalidTemperature, "finite lambda must be > 0");
    }
  }

  friend bool operator==(const TemperatureSpec&, const TemperatureSpec&) = default;
};

}  // namespace freeutil

#endif  // FREEUTIL_CORE_HPP
