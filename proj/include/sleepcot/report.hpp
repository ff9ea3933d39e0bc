#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sleepcot/rules.hpp"

namespace sleepcot {

inline constexpr std::string_view kReportHeader = "Sleep Quality Report:";
/// Length of the per-night RR window each nightly HRV value is computed over.
inline constexpr double kNightWindowS = 300.0;

enum class Archetype { HealthyAdult, HighStress, PoorSleepHygiene, ApneaProne, ElderlyLowHRV, AthleteHighHRV };
inline constexpr Archetype kAllArchetypes[] = {Archetype::HealthyAdult,     Archetype::HighStress,
                                               Archetype::PoorSleepHygiene, Archetype::ApneaProne,
                                               Archetype::ElderlyLowHRV,    Archetype::AthleteHighHRV};
const char* archetype_name(Archetype a) noexcept;

struct TargetMeans {
  double mean_rr_ms = 950.0;
  double sdnn_ms = 50.0;
  double rmssd_ms = 40.0;
  double lf_hf = 1.3;
  double sleep_hours = 7.5;
  double deep_share = 0.18;  // of total sleep time
  double rem_share = 0.22;
  double apnea_per_night = 3.0;
};

struct SleepProfile {
  std::string profile_id;
  Archetype archetype = Archetype::HealthyAdult;
  TargetMeans targets;
  int nights = 6;
  std::uint64_t seed = 0;
};

struct StageMinutes {
  int light = 0;
  int deep = 0;
  int rem = 0;
  int total() const { return light + deep + rem; }
  bool operator==(const StageMinutes&) const = default;
};

/// One subject's multi-night wearable summary. Numeric fields are stored at
/// display precision (SDNN/RMSSD integers, LF/HF 2 decimals, PNN50 and sleep
/// hours 1 decimal) so the rendered text parses back exactly.
struct SleepReport {
  std::string report_id;
  int nights = 0;
  std::vector<double> sdnn;
  std::vector<double> rmssd;
  std::vector<double> lf_hf;
  std::vector<double> pnn50;
  std::vector<double> sleep_hours;
  double avg_sleep_hours = 0.0;
  std::vector<StageMinutes> stages;
  std::vector<int> apnea_events;
  std::string rendered_text;

  double mean_of(ReportVar v) const;
  const std::vector<double>* series(ReportVar v) const;  // nullptr for Apnea

  bool operator==(const SleepReport&) const = default;
};

void to_json(nlohmann::json& j, const SleepReport& r);
void from_json(const nlohmann::json& j, SleepReport& r);
void to_json(nlohmann::json& j, const SleepProfile& p);

struct Violation {
  std::string rule;
  std::string field;
  double value = 0.0;
  std::string detail;

  std::string to_string() const;
};

/// `n` profiles; with n >= 6 every archetype appears (at least floor(n/6)
/// times each). Deterministic in seed.
std::vector<SleepProfile> sample_profiles(std::size_t n, std::uint64_t seed);

/// Nominal targets for an archetype before per-profile jitter.
TargetMeans archetype_targets(Archetype a);

/// Offline rule-constrained generator. Each night's HRV values come from a
/// synthesized 5-minute RR series. Throws RuleConflict when the profile's own
/// targets break a rule or no draw satisfies the rule set.
SleepReport generate_report(const SleepProfile& p, const PhysioRuleSet& rules);

/// Empty iff every structural invariant and every rule holds.
std::vector<Violation> validate_report(const SleepReport& rep, const PhysioRuleSet& rules);

std::string render_report_text(const SleepReport& rep, const PhysioRuleSet& rules = PhysioRuleSet::defaults());

/// Inverse of render_report_text for the numeric fields. Tolerates markdown
/// emphasis and leading chatter before the header. Throws ParseFailure when
/// the header or any of the four HRV arrays is missing.
SleepReport parse_report_text(std::string_view text);

/// The six-night exemplar used to seed synthesis prompts. Its LF/HF array has
/// five entries and its RMSSD values sit above the general range; both are
/// kept as-is and validate_report flags them.
SleepReport exemplar_report();

}  // namespace sleepcot
