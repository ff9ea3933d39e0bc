#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sleepcot/report.hpp"
#include "sleepcot/util.hpp"

namespace sleepcot {

enum class Grade { Good, Moderate, Poor };
enum class StressLevel { Low, Moderate, High };
enum class Severity { None, Mild, Moderate, Severe };

const char* to_string(Grade g) noexcept;
const char* to_string(StressLevel s) noexcept;
const char* to_string(Severity s) noexcept;

/// Band edges for the assessment. Every band is half-open with the edge
/// belonging to the more severe side, e.g. stress is Low for LF/HF < 2.0 and
/// Moderate from 2.0 up to (excluding) 3.0.
struct AssessmentThresholds {
  double stress_moderate_lf_hf = 2.0;
  double stress_high_lf_hf = 3.0;

  double sdnn_good = 34.0;  // healthy-typical lower edge of 50±16
  double sdnn_moderate = 20.0;
  double rmssd_good = 27.0;  // lower edge of 42±15
  double rmssd_moderate = 15.0;
  double pnn50_good = 10.0;
  double pnn50_moderate = 3.0;

  // Sympathovagal balance: LF/HF inside [good_lo, good_hi) is Good, inside
  // [moderate_lo, moderate_hi) but outside the good band is Moderate.
  double balance_good_lo = 0.5;
  double balance_good_hi = 2.0;
  double balance_moderate_lo = 0.3;
  double balance_moderate_hi = 3.0;

  double apnea_mild = 5.0;  // mean events per night
  double apnea_moderate = 15.0;
  double apnea_severe = 30.0;

  double short_sleep_hours = 6.0;
  double very_short_sleep_hours = 5.0;

  static AssessmentThresholds defaults() { return {}; }
  /// Reads `assess.<field>` keys; absent keys keep their defaults.
  static AssessmentThresholds from_config(const KeyValueConfig& cfg);
  void check() const;
};

struct SleepAssessment {
  Grade stress_resilience = Grade::Good;
  StressLevel stress_level = StressLevel::Low;
  Severity fatigue_level = Severity::None;
  Grade ans_activity = Grade::Good;
  Grade cardiac_health = Grade::Good;
  Severity apnea_severity = Severity::None;
  std::vector<std::string> narrative_notes;

  bool operator==(const SleepAssessment&) const = default;
};

void to_json(nlohmann::json& j, const SleepAssessment& a);

/// D_A: labels from the report's multi-night means.
SleepAssessment assess(const SleepReport& rep, const AssessmentThresholds& t = AssessmentThresholds::defaults());

/// Narrative sleep description in the report's section layout, closing with
/// the label bullet list.
std::string render_description(const SleepAssessment& a, const SleepReport& rep);

}  // namespace sleepcot
