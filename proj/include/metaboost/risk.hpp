/**
 * @file risk.hpp
 * @brief Prior prevalence, per-factor likelihood P(flag | positive), evidence
 * P(flag) and posterior P(positive | flag) over clinical cutoffs.
 *
 * All ratios are kept as exact fractions of integer counts; doubles appear
 * only in reports.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "metaboost/ingest.hpp"

namespace metaboost {

enum class Comparator { at_least, below };

struct RiskFactor {
  std::string name;
  std::string feature;
  Comparator comparator = Comparator::at_least;
  double cutoff = 0.0;
  /// Sex-specific cutoffs; when present they override `cutoff` (Sex code 0 = male, 1 = female).
  std::optional<double> male_cutoff;
  std::optional<double> female_cutoff;
  /// False for factors reported only in the "additional factors" section.
  bool tabulated = true;

  bool sex_specific() const { return male_cutoff.has_value() || female_cutoff.has_value(); }
  double cutoff_for(int sex_code) const;
  bool flagged(double value, int sex_code) const;
};

struct ThresholdSpec {
  std::vector<RiskFactor> factors;

  /// glucose >= 100, BMI >= 30, triglycerides >= 150, waist >= 94/80 (m/f),
  /// HDL < 40/50 (m/f), UrAlbCr >= 30, albuminuria code >= 1, age >= 40/51 (m/f).
  static ThresholdSpec standard();
  /// JSON: {"factors": [{"name", "feature", "comparator": ">=" | "<", "cutoff" | "male"/"female", "tabulated"}]}
  static ThresholdSpec from_json(std::string_view text);
  static ThresholdSpec load(const std::filesystem::path& path);
  std::string to_json() const;

  const RiskFactor& factor(std::string_view name) const;
  /// Throws SchemaError if a factor names a missing feature or needs Sex without it.
  void validate(const FeatureSchema& schema) const;
};

struct RiskFlags {
  std::vector<std::string> factors;
  /// flags[factor][row]
  std::vector<std::vector<bool>> flags;

  const std::vector<bool>& of(std::string_view factor) const;
  bool operator==(const RiskFlags&) const = default;
};

/// Non-negative fraction in lowest terms.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  Rational operator*(const Rational& o) const;
  Rational operator/(const Rational& o) const;
  bool operator==(const Rational&) const = default;
};

struct FactorReport {
  std::string name;
  std::string feature;
  bool tabulated = true;
  std::size_t total = 0;
  std::size_t positives = 0;
  std::size_t flagged = 0;
  std::size_t flagged_positive = 0;
  Rational likelihood;
  Rational evidence;
  Rational posterior;
};

struct ProbReport {
  std::size_t total = 0;
  std::size_t positives = 0;
  Rational prior;
  std::vector<FactorReport> factors;
  ThresholdSpec spec;

  const FactorReport& factor(std::string_view name) const;
};

/// Share of rows with label 1. Throws RiskError on an empty dataset.
double compute_prior(const Dataset& ds);

/// Evaluated on raw clinical units.
RiskFlags flag_rows(const Dataset& ds, const ThresholdSpec& spec);

/// (#flag and positive) / (#positive). Throws RiskError with no positive rows.
double compute_likelihood(const Dataset& ds, const RiskFlags& flags, std::string_view factor);

/// likelihood * prior / evidence, cross-checked exactly against
/// (#flag and positive) / (#flag). Throws RiskError naming the factor when nothing is flagged.
double compute_posterior(const Dataset& ds, const RiskFlags& flags, std::string_view factor);

ProbReport risk_report(const Dataset& ds, const ThresholdSpec& spec);

void write_risk_csv(const ProbReport& report, const std::filesystem::path& path, const std::string& header_comment = {});
std::string format_risk_text(const ProbReport& report);

}  // namespace metaboost
