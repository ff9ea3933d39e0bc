#include "sleepcot/assessor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sleepcot/error.hpp"

namespace sleepcot {

const char* to_string(Grade g) noexcept {
  switch (g) {
    case Grade::Good: return "Good";
    case Grade::Moderate: return "Moderate";
    case Grade::Poor: return "Poor";
  }
  return "?";
}

const char* to_string(StressLevel s) noexcept {
  switch (s) {
    case StressLevel::Low: return "Low";
    case StressLevel::Moderate: return "Moderate";
    case StressLevel::High: return "High";
  }
  return "?";
}

const char* to_string(Severity s) noexcept {
  switch (s) {
    case Severity::None: return "None";
    case Severity::Mild: return "Mild";
    case Severity::Moderate: return "Moderate";
    case Severity::Severe: return "Severe";
  }
  return "?";
}

AssessmentThresholds AssessmentThresholds::from_config(const KeyValueConfig& cfg) {
  AssessmentThresholds t;
  auto rd = [&](const char* key, double& field) { field = cfg.get_double(std::string("assess.") + key, field); };
  rd("stress_moderate_lf_hf", t.stress_moderate_lf_hf);
  rd("stress_high_lf_hf", t.stress_high_lf_hf);
  rd("sdnn_good", t.sdnn_good);
  rd("sdnn_moderate", t.sdnn_moderate);
  rd("rmssd_good", t.rmssd_good);
  rd("rmssd_moderate", t.rmssd_moderate);
  rd("pnn50_good", t.pnn50_good);
  rd("pnn50_moderate", t.pnn50_moderate);
  rd("balance_good_lo", t.balance_good_lo);
  rd("balance_good_hi", t.balance_good_hi);
  rd("balance_moderate_lo", t.balance_moderate_lo);
  rd("balance_moderate_hi", t.balance_moderate_hi);
  rd("apnea_mild", t.apnea_mild);
  rd("apnea_moderate", t.apnea_moderate);
  rd("apnea_severe", t.apnea_severe);
  rd("short_sleep_hours", t.short_sleep_hours);
  rd("very_short_sleep_hours", t.very_short_sleep_hours);
  t.check();
  return t;
}

void AssessmentThresholds::check() const {
  auto ordered = [](double a, double b, const char* what) {
    if (!(a < b)) throw Error(ErrorCode::ConfigError, std::string("assessment thresholds out of order: ") + what);
  };
  ordered(stress_moderate_lf_hf, stress_high_lf_hf, "stress");
  ordered(sdnn_moderate, sdnn_good, "sdnn");
  ordered(rmssd_moderate, rmssd_good, "rmssd");
  ordered(pnn50_moderate, pnn50_good, "pnn50");
  ordered(balance_moderate_lo, balance_good_lo, "balance low side");
  ordered(balance_good_lo, balance_good_hi, "balance good band");
  ordered(balance_good_hi, balance_moderate_hi, "balance high side");
  ordered(apnea_mild, apnea_moderate, "apnea mild/moderate");
  ordered(apnea_moderate, apnea_severe, "apnea moderate/severe");
  ordered(very_short_sleep_hours, short_sleep_hours, "sleep hours");
}

void to_json(nlohmann::json& j, const SleepAssessment& a) {
  j = {{"stress_resilience", to_string(a.stress_resilience)},
       {"stress_level", to_string(a.stress_level)},
       {"fatigue_level", to_string(a.fatigue_level)},
       {"ans_activity", to_string(a.ans_activity)},
       {"cardiac_health", to_string(a.cardiac_health)},
       {"apnea_severity", to_string(a.apnea_severity)},
       {"narrative_notes", a.narrative_notes}};
}

namespace {

Grade higher_is_better(double x, double good, double moderate) {
  if (x >= good) return Grade::Good;
  if (x >= moderate) return Grade::Moderate;
  return Grade::Poor;
}

Grade worse(Grade a, Grade b) { return static_cast<Grade>(std::max(static_cast<int>(a), static_cast<int>(b))); }

Grade balance_grade(double lf_hf, const AssessmentThresholds& t) {
  if (lf_hf >= t.balance_good_lo && lf_hf < t.balance_good_hi) return Grade::Good;
  if (lf_hf >= t.balance_moderate_lo && lf_hf < t.balance_moderate_hi) return Grade::Moderate;
  return Grade::Poor;
}

std::string fmt(double x, int d) { return std::isnan(x) ? std::string("n/a") : format_fixed(x, d); }

}  // namespace

SleepAssessment assess(const SleepReport& rep, const AssessmentThresholds& t) {
  const double sdnn = rep.mean_of(ReportVar::Sdnn);
  const double rmssd = rep.mean_of(ReportVar::Rmssd);
  const double lf_hf = rep.mean_of(ReportVar::LfHf);
  const double pnn50 = rep.mean_of(ReportVar::Pnn50);
  const double apnea = rep.mean_of(ReportVar::Apnea);
  const double hours = rep.avg_sleep_hours;

  SleepAssessment a;
  auto& notes = a.narrative_notes;

  if (lf_hf < t.stress_moderate_lf_hf) {
    a.stress_level = StressLevel::Low;
  } else if (lf_hf < t.stress_high_lf_hf) {
    a.stress_level = StressLevel::Moderate;
  } else {
    a.stress_level = StressLevel::High;
  }
  notes.push_back(std::string("stress_level=") + to_string(a.stress_level) + ": mean LF/HF " + fmt(lf_hf, 2) +
                  " against edges " + fmt(t.stress_moderate_lf_hf, 2) + "/" + fmt(t.stress_high_lf_hf, 2));

  const Grade sdnn_g = higher_is_better(sdnn, t.sdnn_good, t.sdnn_moderate);
  const Grade rmssd_g = higher_is_better(rmssd, t.rmssd_good, t.rmssd_moderate);
  const Grade pnn50_g = higher_is_better(pnn50, t.pnn50_good, t.pnn50_moderate);
  const Grade balance_g = balance_grade(lf_hf, t);

  a.cardiac_health = worse(sdnn_g, rmssd_g);
  notes.push_back(std::string("cardiac_health=") + to_string(a.cardiac_health) + ": mean SDNN " + fmt(sdnn, 1) +
                  " ms (" + to_string(sdnn_g) + "), mean RMSSD " + fmt(rmssd, 1) + " ms (" + to_string(rmssd_g) + ")");

  a.stress_resilience = worse(rmssd_g, pnn50_g);
  notes.push_back(std::string("stress_resilience=") + to_string(a.stress_resilience) + ": mean RMSSD " +
                  fmt(rmssd, 1) + " ms, mean PNN50 " + fmt(pnn50, 1) + "% (" + to_string(pnn50_g) + ")");

  a.ans_activity = worse(sdnn_g, balance_g);
  notes.push_back(std::string("ans_activity=") + to_string(a.ans_activity) + ": mean SDNN " + fmt(sdnn, 1) +
                  " ms, LF/HF balance " + fmt(lf_hf, 2) + " (" + to_string(balance_g) + ")");

  if (apnea >= t.apnea_severe) {
    a.apnea_severity = Severity::Severe;
  } else if (apnea >= t.apnea_moderate) {
    a.apnea_severity = Severity::Moderate;
  } else if (apnea >= t.apnea_mild) {
    a.apnea_severity = Severity::Mild;
  } else {
    a.apnea_severity = Severity::None;
  }
  notes.push_back(std::string("apnea_severity=") + to_string(a.apnea_severity) + ": mean " + fmt(apnea, 1) +
                  " events per night");

  // Fragmented breathing drives fatigue; short sleep adds one or two steps.
  int fatigue = static_cast<int>(a.apnea_severity);
  if (hours < t.very_short_sleep_hours) {
    fatigue += 2;
  } else if (hours < t.short_sleep_hours) {
    fatigue += 1;
  }
  a.fatigue_level = static_cast<Severity>(std::min(fatigue, static_cast<int>(Severity::Severe)));
  notes.push_back(std::string("fatigue_level=") + to_string(a.fatigue_level) + ": apnea " +
                  to_string(a.apnea_severity) + ", average sleep " + fmt(hours, 1) + " h");
  return a;
}

std::string render_description(const SleepAssessment& a, const SleepReport& rep) {
  const double hours = rep.avg_sleep_hours;
  const double sdnn = rep.mean_of(ReportVar::Sdnn);
  const double rmssd = rep.mean_of(ReportVar::Rmssd);
  const double lf_hf = rep.mean_of(ReportVar::LfHf);
  const double pnn50 = rep.mean_of(ReportVar::Pnn50);
  const double apnea = rep.mean_of(ReportVar::Apnea);

  std::string duration_note;
  if (hours < 7.0) {
    duration_note = "below the recommended 7-9 hours of sleep for adults";
  } else if (hours > 9.0) {
    duration_note = "above the recommended 7-9 hours of sleep for adults";
  } else {
    duration_note = "meeting the recommended 7-9 hours of sleep for adults";
  }

  std::ostringstream os;
  os << "1. Sleep Quality Overview\n";
  os << "   - The subject's average sleep duration was " << fmt(hours, 1) << " hours, " << duration_note << ".\n\n";
  os << "2. Cardiac Health\n";
  os << "   - Cardiac health is rated " << to_string(a.cardiac_health) << " (mean SDNN " << fmt(sdnn, 1)
     << " ms, mean RMSSD " << fmt(rmssd, 1) << " ms); autonomic nervous system activity is rated "
     << to_string(a.ans_activity) << ".\n\n";
  os << "3. Stress and Stress Resilience\n";
  os << "   - Stress level was " << to_string(a.stress_level) << " (mean LF/HF " << fmt(lf_hf, 2)
     << ") and stress resilience is " << to_string(a.stress_resilience) << " (mean PNN50 " << fmt(pnn50, 1)
     << "%).\n\n";
  os << "4. Sleep Apnea and Sleep Interruptions\n";
  os << "   - An average of " << fmt(apnea, 1) << " sleep apnea events per night corresponds to "
     << to_string(a.apnea_severity) << " severity; fatigue level is " << to_string(a.fatigue_level) << ".\n\n";
  os << "Comprehensive Impact Analysis\n";
  for (const auto& note : a.narrative_notes) os << "   - " << note << "\n";
  os << "\n";
  os << "- **Stress Resilience**: " << to_string(a.stress_resilience) << "\n";
  os << "- **Stress Level**: " << to_string(a.stress_level) << "\n";
  os << "- **Fatigue Level**: " << to_string(a.fatigue_level) << "\n";
  os << "- **Autonomic Nervous System Activity**: " << to_string(a.ans_activity) << "\n";
  os << "- **Cardiac Health**: " << to_string(a.cardiac_health) << "\n";
  os << "- **Sleep Apnea Severity**: " << to_string(a.apnea_severity) << "\n";
  return os.str();
}

}  // namespace sleepcot
