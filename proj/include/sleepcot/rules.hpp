#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sleepcot/hrv.hpp"
#include "sleepcot/util.hpp"

namespace sleepcot {

/// Report quantities the physiological rule set speaks about. Nightly arrays
/// are bounded per value; consistency rules act on multi-night means.
enum class ReportVar { Sdnn, Rmssd, LfHf, Pnn50, SleepHours, Apnea };

const char* var_key(ReportVar v) noexcept;  // config spelling, e.g. "lf_hf"
std::optional<ReportVar> parse_var(std::string_view key);
inline constexpr ReportVar kAllVars[] = {ReportVar::Sdnn,  ReportVar::Rmssd,      ReportVar::LfHf,
                                         ReportVar::Pnn50, ReportVar::SleepHours, ReportVar::Apnea};

struct MetricBounds {
  double general_min = 0.0;
  double general_max = 0.0;
  std::optional<double> drift_max;  // night-to-night relative change cap
};

enum class CmpOp { Lt, Le, Gt, Ge };

struct Condition {
  ReportVar var;
  CmpOp op;
  double value;

  bool holds(double x) const;
  std::string to_string() const;
};

/// "if `when` holds on the report means then `then` must hold".
struct ConsistencyRule {
  std::string name;
  Condition when;
  Condition then;
};

/// The physiological rule set R: per-metric bounds, cross-metric rules and
/// the section headings every rendered report must carry.
struct PhysioRuleSet {
  std::map<ReportVar, MetricBounds> bounds;
  std::vector<ConsistencyRule> rules;
  std::vector<std::string> required_sections;

  static PhysioRuleSet defaults();

  /// Reads `<var>.general_min/general_max/drift_max`, `rule.<name> = A op x => B op y`
  /// and `sections = a|b|c`. Missing keys fall back to defaults(). The result
  /// is checked before returning.
  static PhysioRuleSet from_config(const KeyValueConfig& cfg);

  /// Throws ConfigError for ill-ordered bounds and RuleConflict for a rule
  /// whose consequent cannot be met inside the general bounds, or for a pair
  /// of rules that can fire together yet demand disjoint ranges.
  void check() const;

  const MetricBounds& bound(ReportVar v) const;

  /// HRV reference ranges with general bands taken from this rule set.
  hrv::ReferenceRanges reference_ranges() const;

  /// Plain-text listing used inside synthesis prompts.
  std::string describe() const;
};

/// Parses one rule expression such as `rmssd < 20 => pnn50 <= 12`.
ConsistencyRule parse_rule(const std::string& name, std::string_view expr);

}  // namespace sleepcot
