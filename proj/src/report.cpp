#include "sleepcot/report.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sleepcot/error.hpp"
#include "sleepcot/rng.hpp"

namespace sleepcot {

const char* archetype_name(Archetype a) noexcept {
  switch (a) {
    case Archetype::HealthyAdult: return "HealthyAdult";
    case Archetype::HighStress: return "HighStress";
    case Archetype::PoorSleepHygiene: return "PoorSleepHygiene";
    case Archetype::ApneaProne: return "ApneaProne";
    case Archetype::ElderlyLowHRV: return "ElderlyLowHRV";
    case Archetype::AthleteHighHRV: return "AthleteHighHRV";
  }
  return "?";
}

namespace {

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double round_to(double x, int decimals) {
  const double s = std::pow(10.0, decimals);
  return std::round(x * s) / s;
}

// LF/HF keeps up to two decimals but drops a trailing zero ("1.2", "1.25").
std::string fmt_lfhf(double v) {
  std::string s = format_fixed(v, 2);
  if (s.size() > 3 && s.back() == '0') s.pop_back();
  return s;
}

template <typename T, typename F>
std::string fmt_array(const std::vector<T>& v, F&& fmt) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += fmt(v[i]);
  }
  return s + "]";
}

std::string fmt_mean(const std::vector<double>& v, int decimals) {
  const double m = mean(v);
  return std::isnan(m) ? std::string("n/a") : format_fixed(m, decimals);
}

}  // namespace

double SleepReport::mean_of(ReportVar v) const {
  if (v == ReportVar::Apnea) {
    if (apnea_events.empty()) return std::nan("");
    return std::accumulate(apnea_events.begin(), apnea_events.end(), 0.0) /
           static_cast<double>(apnea_events.size());
  }
  if (v == ReportVar::SleepHours) return avg_sleep_hours;
  return mean(*series(v));
}

const std::vector<double>* SleepReport::series(ReportVar v) const {
  switch (v) {
    case ReportVar::Sdnn: return &sdnn;
    case ReportVar::Rmssd: return &rmssd;
    case ReportVar::LfHf: return &lf_hf;
    case ReportVar::Pnn50: return &pnn50;
    case ReportVar::SleepHours: return &sleep_hours;
    case ReportVar::Apnea: return nullptr;
  }
  return nullptr;
}

void to_json(nlohmann::json& j, const SleepReport& r) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : r.stages) stages.push_back({{"light", s.light}, {"deep", s.deep}, {"rem", s.rem}});
  j = {{"report_id", r.report_id},
       {"nights", r.nights},
       {"sdnn", r.sdnn},
       {"rmssd", r.rmssd},
       {"lf_hf", r.lf_hf},
       {"pnn50", r.pnn50},
       {"sleep_hours", r.sleep_hours},
       {"avg_sleep_hours", r.avg_sleep_hours},
       {"stage_minutes", stages},
       {"apnea_events_per_night", r.apnea_events},
       {"rendered_text", r.rendered_text}};
}

void from_json(const nlohmann::json& j, SleepReport& r) {
  j.at("report_id").get_to(r.report_id);
  j.at("nights").get_to(r.nights);
  j.at("sdnn").get_to(r.sdnn);
  j.at("rmssd").get_to(r.rmssd);
  j.at("lf_hf").get_to(r.lf_hf);
  j.at("pnn50").get_to(r.pnn50);
  r.sleep_hours = j.value("sleep_hours", std::vector<double>{});
  j.at("avg_sleep_hours").get_to(r.avg_sleep_hours);
  r.stages.clear();
  for (const auto& s : j.at("stage_minutes")) {
    r.stages.push_back({s.at("light").get<int>(), s.at("deep").get<int>(), s.at("rem").get<int>()});
  }
  j.at("apnea_events_per_night").get_to(r.apnea_events);
  r.rendered_text = j.value("rendered_text", std::string{});
}

void to_json(nlohmann::json& j, const SleepProfile& p) {
  const auto& t = p.targets;
  j = {{"profile_id", p.profile_id},
       {"archetype", archetype_name(p.archetype)},
       {"nights", p.nights},
       {"seed", p.seed},
       {"targets",
        {{"mean_rr_ms", t.mean_rr_ms},
         {"sdnn_ms", t.sdnn_ms},
         {"rmssd_ms", t.rmssd_ms},
         {"lf_hf", t.lf_hf},
         {"sleep_hours", t.sleep_hours},
         {"deep_share", t.deep_share},
         {"rem_share", t.rem_share},
         {"apnea_per_night", t.apnea_per_night}}}};
}

std::string Violation::to_string() const {
  return rule + " [" + field + " = " + format_fixed(value, 2) + "]: " + detail;
}

// ---------------------------------------------------------------------------
// Profiles

TargetMeans archetype_targets(Archetype a) {
  //       mean_rr  sdnn  rmssd lf_hf sleep deep  rem   apnea
  switch (a) {
    case Archetype::HealthyAdult: return {950, 50, 40, 1.3, 7.6, 0.19, 0.22, 3};
    case Archetype::HighStress: return {780, 32, 22, 3.3, 6.2, 0.13, 0.18, 4};
    case Archetype::PoorSleepHygiene: return {850, 38, 28, 2.3, 5.5, 0.14, 0.17, 6};
    case Archetype::ApneaProne: return {880, 42, 30, 2.1, 6.8, 0.12, 0.18, 24};
    case Archetype::ElderlyLowHRV: return {900, 26, 16, 1.8, 6.4, 0.10, 0.18, 12};
    case Archetype::AthleteHighHRV: return {1150, 75, 44, 0.9, 8.3, 0.22, 0.24, 1};
  }
  return {};
}

std::vector<SleepProfile> sample_profiles(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "sample_profiles needs n >= 1");
  Rng order_rng(derive_seed(seed, "archetypes"));
  std::vector<Archetype> order(std::begin(kAllArchetypes), std::end(kAllArchetypes));
  order_rng.shuffle(order);
  std::vector<Archetype> schedule(n);
  for (std::size_t i = 0; i < n; ++i) schedule[i] = order[i % order.size()];
  order_rng.shuffle(schedule);

  const auto bounds = PhysioRuleSet::defaults();
  auto clamp_into = [&](double v, ReportVar var) {
    const auto& b = bounds.bound(var);
    return std::clamp(v, b.general_min * 1.1, b.general_max * 0.92);
  };

  std::vector<SleepProfile> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SleepProfile p;
    char id[32];
    std::snprintf(id, sizeof id, "r%04zu", i + 1);
    p.profile_id = id;
    p.archetype = schedule[i];
    p.seed = derive_seed(seed, "profile", i);
    Rng rng(derive_seed(p.seed, "targets"));
    TargetMeans t = archetype_targets(p.archetype);
    t.mean_rr_ms *= rng.uniform(0.92, 1.08);
    t.sdnn_ms = clamp_into(t.sdnn_ms * rng.uniform(0.9, 1.1), ReportVar::Sdnn);
    t.rmssd_ms = clamp_into(t.rmssd_ms * rng.uniform(0.9, 1.1), ReportVar::Rmssd);
    t.lf_hf = clamp_into(t.lf_hf * rng.uniform(0.9, 1.1), ReportVar::LfHf);
    t.sleep_hours = std::clamp(t.sleep_hours * rng.uniform(0.93, 1.07), 3.5, 11.0);
    t.deep_share *= rng.uniform(0.9, 1.1);
    t.rem_share *= rng.uniform(0.9, 1.1);
    t.apnea_per_night *= rng.uniform(0.85, 1.15);
    p.targets = t;
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generation

namespace {

double target_of(const TargetMeans& t, ReportVar v) {
  switch (v) {
    case ReportVar::Sdnn: return t.sdnn_ms;
    case ReportVar::Rmssd: return t.rmssd_ms;
    case ReportVar::LfHf: return t.lf_hf;
    case ReportVar::SleepHours: return t.sleep_hours;
    case ReportVar::Apnea: return t.apnea_per_night;
    case ReportVar::Pnn50: return std::nan("");  // emerges from the RR series
  }
  return std::nan("");
}

std::optional<SleepReport> draw_report(const SleepProfile& p, const PhysioRuleSet& rules, Rng& rng) {
  SleepReport r;
  r.report_id = p.profile_id;
  r.nights = p.nights;
  const auto ranges = rules.reference_ranges();
  const auto& t = p.targets;
  for (int night = 0; night < p.nights; ++night) {
    hrv::SynthesisTargets st;
    st.mean_rr_ms = t.mean_rr_ms * rng.uniform(0.97, 1.03);
    st.sdnn_ms = t.sdnn_ms * rng.uniform(0.96, 1.04);
    st.rmssd_ms = t.rmssd_ms * rng.uniform(0.96, 1.04);
    st.lf_hf = t.lf_hf * rng.uniform(0.96, 1.04);
    const std::uint64_t night_seed = rng.next_u64();
    hrv::HrvMetrics m;
    try {
      m = hrv::compute_metrics(hrv::synthesize_rr(st, kNightWindowS, night_seed, ranges));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::InfeasibleTargets) return std::nullopt;
      throw;
    }
    if (!m.frequency || !m.frequency->lf_hf) return std::nullopt;
    r.sdnn.push_back(std::round(m.time.sdnn_ms));
    r.rmssd.push_back(std::round(m.time.rmssd_ms));
    r.lf_hf.push_back(round_to(*m.frequency->lf_hf, 2));
    r.pnn50.push_back(round_to(m.time.pnn50_pct, 1));

    const double hours = round_to(t.sleep_hours * rng.uniform(0.95, 1.05), 1);
    r.sleep_hours.push_back(hours);
    const double total_min = hours * 60.0;
    const double wake_share = rng.uniform(0.04, 0.09);
    StageMinutes s;
    s.deep = static_cast<int>(std::floor(total_min * t.deep_share * rng.uniform(0.9, 1.1)));
    s.rem = static_cast<int>(std::floor(total_min * t.rem_share * rng.uniform(0.9, 1.1)));
    s.light = static_cast<int>(std::floor(total_min * (1.0 - wake_share))) - s.deep - s.rem;
    r.stages.push_back(s);
    const double apnea = t.apnea_per_night * rng.uniform(0.7, 1.3);
    r.apnea_events.push_back(static_cast<int>(std::lround(std::max(0.0, apnea))));
  }
  r.avg_sleep_hours = round_to(mean(r.sleep_hours), 1);
  r.rendered_text = render_report_text(r, rules);
  return r;
}

}  // namespace

SleepReport generate_report(const SleepProfile& p, const PhysioRuleSet& rules) {
  if (p.nights < 1) throw Error(ErrorCode::InvalidArgument, "profile needs at least one night");
  // A profile whose own targets contradict the rule set is never relaxed.
  for (const auto& rule : rules.rules) {
    const double a = target_of(p.targets, rule.when.var);
    const double b = target_of(p.targets, rule.then.var);
    if (std::isnan(a) || std::isnan(b)) continue;
    if (rule.when.holds(a) && !rule.then.holds(b)) {
      throw Error(ErrorCode::RuleConflict,
                  p.profile_id + ": targets violate rule " + rule.name + " (" + rule.then.to_string() + ")");
    }
  }
  for (ReportVar v : {ReportVar::Sdnn, ReportVar::Rmssd, ReportVar::LfHf, ReportVar::SleepHours}) {
    const auto& b = rules.bound(v);
    const double x = target_of(p.targets, v);
    if (x < b.general_min || x > b.general_max) {
      throw Error(ErrorCode::RuleConflict,
                  p.profile_id + ": target " + var_key(v) + " outside its general bounds");
    }
  }

  constexpr int kMaxAttempts = 12;
  std::vector<Violation> last;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(derive_seed(p.seed, "attempt", static_cast<std::uint64_t>(attempt)));
    auto rep = draw_report(p, rules, rng);
    if (!rep) continue;
    last = validate_report(*rep, rules);
    if (last.empty()) return *rep;
  }
  std::string why = last.empty() ? std::string("synthesis infeasible") : last.front().to_string();
  throw Error(ErrorCode::RuleConflict, p.profile_id + ": no draw satisfies the rule set: " + why);
}

// ---------------------------------------------------------------------------
// Validation

std::vector<Violation> validate_report(const SleepReport& rep, const PhysioRuleSet& rules) {
  std::vector<Violation> out;
  auto add = [&](std::string rule, std::string field, double value, std::string detail) {
    out.push_back({std::move(rule), std::move(field), value, std::move(detail)});
  };

  if (rep.nights < 1) add("nights", "nights", rep.nights, "report must cover at least one night");
  const auto expected = static_cast<std::size_t>(std::max(rep.nights, 0));
  auto arity = [&](const char* field, std::size_t n) {
    if (n != expected) {
      add("arity", field, static_cast<double>(n),
          "expected " + std::to_string(expected) + " nightly values, found " + std::to_string(n));
    }
  };
  arity("sdnn", rep.sdnn.size());
  arity("rmssd", rep.rmssd.size());
  arity("lf_hf", rep.lf_hf.size());
  arity("pnn50", rep.pnn50.size());
  arity("sleep_hours", rep.sleep_hours.size());
  arity("stage_minutes", rep.stages.size());
  arity("apnea_events_per_night", rep.apnea_events.size());

  for (std::size_t i = 0; i < rep.stages.size(); ++i) {
    const auto& s = rep.stages[i];
    if (s.light < 0 || s.deep < 0 || s.rem < 0) {
      add("stage_total", "stage_minutes[" + std::to_string(i) + "]", s.total(), "negative stage minutes");
    }
    const double hours = i < rep.sleep_hours.size() ? rep.sleep_hours[i] : rep.avg_sleep_hours;
    if (s.total() > hours * 60.0 + 1e-9) {
      add("stage_total", "stage_minutes[" + std::to_string(i) + "]", s.total(),
          "stage minutes exceed the night's sleep duration of " + format_fixed(hours * 60.0, 0) + " min");
    }
  }

  if (rep.rendered_text.rfind(kReportHeader, 0) != 0) {
    add("header", "rendered_text", 0.0, "text must start with \"Sleep Quality Report:\"");
  } else {
    for (const auto& section : rules.required_sections) {
      if (rep.rendered_text.find(section) == std::string::npos) {
        add("sections", "rendered_text", 0.0, "missing section \"" + section + "\"");
      }
    }
  }

  const auto ranges = rules.reference_ranges();
  auto check_values = [&](ReportVar var, const std::vector<double>& values) {
    const auto& b = rules.bound(var);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double x = values[i];
      if (!(x >= b.general_min && x <= b.general_max)) {
        add("general_range", std::string(var_key(var)) + "[" + std::to_string(i) + "]", x,
            "outside [" + format_fixed(b.general_min, 2) + ", " + format_fixed(b.general_max, 2) + "]");
      }
      if (b.drift_max && i > 0 && values[i - 1] > 0.0) {
        const double drift = std::abs(x - values[i - 1]) / values[i - 1];
        if (drift > *b.drift_max + 1e-12) {
          add("drift", std::string(var_key(var)) + "[" + std::to_string(i) + "]", x,
              "night-to-night change of " + format_fixed(drift * 100.0, 1) + "% exceeds " +
                  format_fixed(*b.drift_max * 100.0, 0) + "%");
        }
      }
    }
  };
  for (ReportVar v : {ReportVar::Sdnn, ReportVar::Rmssd, ReportVar::LfHf, ReportVar::Pnn50, ReportVar::SleepHours}) {
    check_values(v, *rep.series(v));
  }
  std::vector<double> apnea(rep.apnea_events.begin(), rep.apnea_events.end());
  check_values(ReportVar::Apnea, apnea);

  const auto& sb = rules.bound(ReportVar::SleepHours);
  if (!(rep.avg_sleep_hours >= sb.general_min && rep.avg_sleep_hours <= sb.general_max)) {
    add("general_range", "avg_sleep_hours", rep.avg_sleep_hours, "average sleep duration out of bounds");
  }
  if (!rep.sleep_hours.empty()) {
    const double m = mean(rep.sleep_hours);
    if (std::abs(m - rep.avg_sleep_hours) > 0.05 + 1e-9) {
      add("avg_consistency", "avg_sleep_hours", rep.avg_sleep_hours,
          "differs from the nightly mean " + format_fixed(m, 2));
    }
  }

  for (const auto& rule : rules.rules) {
    const double a = rep.mean_of(rule.when.var);
    const double b = rep.mean_of(rule.then.var);
    if (std::isnan(a) || std::isnan(b)) continue;
    if (rule.when.holds(a) && !rule.then.holds(b)) {
      add(rule.name, std::string(var_key(rule.then.var)) + "_mean", b,
          "mean " + rule.when.to_string() + " requires mean " + rule.then.to_string());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rendering / parsing

std::string render_report_text(const SleepReport& r, const PhysioRuleSet& rules) {
  const auto ranges = rules.reference_ranges();
  auto ints = [](int v) { return std::to_string(v); };
  auto d0 = [](double v) { return format_fixed(v, 0); };
  auto d1 = [](double v) { return format_fixed(v, 1); };
  std::vector<int> light, deep, rem;
  for (const auto& s : r.stages) {
    light.push_back(s.light);
    deep.push_back(s.deep);
    rem.push_back(s.rem);
  }
  std::vector<double> deep_d(deep.begin(), deep.end());
  std::vector<double> rem_d(rem.begin(), rem.end());
  std::vector<double> apnea_d(r.apnea_events.begin(), r.apnea_events.end());
  const double lfhf_mean = mean(r.lf_hf);
  const std::string lfhf_mean_s = std::isnan(lfhf_mean) ? "n/a" : format_fixed(lfhf_mean, 2);

  std::ostringstream os;
  os << kReportHeader << "\n\n";
  os << "Report ID: " << r.report_id << "\n";
  os << "Monitoring period: " << r.nights << " nights\n\n";
  os << "1. Sleep Quality Overview\n";
  os << "   - During the observation period, the subject's average sleep duration was "
     << format_fixed(r.avg_sleep_hours, 1) << " hours.\n";
  os << "   - Nightly sleep duration (hours): " << fmt_array(r.sleep_hours, d1) << "\n";
  os << "   - Light sleep (minutes): " << fmt_array(light, ints) << "\n";
  os << "   - Deep sleep (minutes): " << fmt_array(deep, ints) << "\n";
  os << "   - REM sleep (minutes): " << fmt_array(rem, ints) << "\n\n";
  os << "2. Cardiac Health\n";
  os << "   - Heart rate variability was summarised each night from a 5-minute RR window "
        "(SDNN, RMSSD, LF/HF, PNN50).\n";
  os << "   - Mean SDNN: " << fmt_mean(r.sdnn, 1) << " ms; mean RMSSD: " << fmt_mean(r.rmssd, 1) << " ms.\n\n";
  os << "3. Stress and Stress Resilience\n";
  os << "   - Mean LF/HF ratio: " << lfhf_mean_s << "; mean PNN50: " << fmt_mean(r.pnn50, 1) << "%.\n\n";
  os << "4. Sleep Apnea and Sleep Interruptions\n";
  os << "   - The subject experienced an average of " << fmt_mean(apnea_d, 0)
     << " sleep apnea events per night.\n";
  os << "   - Sleep apnea events per night: " << fmt_array(r.apnea_events, ints) << "\n\n";
  os << "Comprehensive Impact Analysis\n";
  os << "   - Multi-night means: sleep " << format_fixed(r.avg_sleep_hours, 1) << " h, deep sleep "
     << fmt_mean(deep_d, 0) << " min, REM sleep " << fmt_mean(rem_d, 0) << " min, SDNN " << fmt_mean(r.sdnn, 1)
     << " ms, RMSSD " << fmt_mean(r.rmssd, 1) << " ms, LF/HF " << lfhf_mean_s << ", PNN50 "
     << fmt_mean(r.pnn50, 1) << "%, apnea " << fmt_mean(apnea_d, 1) << " events/night.\n\n";
  os << "HRV Parameters Calculation:\n\n";
  os << "- SDNN: " << fmt_array(r.sdnn, d0) << "\n  - Description: " << ranges.sdnn.healthy_note << "\n\n";
  os << "- RMSSD: " << fmt_array(r.rmssd, d0) << "\n  - Description: " << ranges.rmssd.healthy_note << "\n\n";
  os << "- LF/HF: " << fmt_array(r.lf_hf, fmt_lfhf) << "\n  - Description: " << ranges.lf_hf.healthy_note
     << "\n\n";
  os << "- PNN50: " << fmt_array(r.pnn50, d1) << "\n  - Description: " << ranges.pnn50.healthy_note << "\n";
  return os.str();
}

namespace {

std::string strip_markup(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '*' ) continue;
    if (text[i] == '\r') continue;
    out.push_back(text[i]);
  }
  return out;
}

std::vector<double> parse_number_list(std::string_view body, const std::string& label) {
  std::vector<double> out;
  const std::string inner = trim(body);
  if (inner.empty()) return out;
  for (const auto& part : split(inner, ',')) {
    const std::string tok = trim(part);
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || end != tok.c_str() + tok.size() || !std::isfinite(v)) {
      throw Error(ErrorCode::ParseFailure, label + ": not a number '" + tok + "'");
    }
    out.push_back(v);
  }
  return out;
}

// Finds a line of the form "<label>: [a, b, c]" (after list markers).
std::optional<std::vector<double>> find_array(const std::vector<std::string>& lines, std::string_view label) {
  for (const auto& raw : lines) {
    std::string line = trim(raw);
    while (!line.empty() && (line[0] == '-' || line[0] == ' ')) line.erase(0, 1);
    if (line.rfind(label, 0) != 0) continue;
    std::string_view rest = std::string_view(line).substr(label.size());
    const auto colon = rest.find(':');
    if (colon == std::string_view::npos || trim(rest.substr(0, colon)).size() != 0) continue;
    rest = rest.substr(colon + 1);
    const auto open = rest.find('[');
    const auto close = rest.find(']');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) continue;
    return parse_number_list(rest.substr(open + 1, close - open - 1), std::string(label));
  }
  return std::nullopt;
}

std::optional<double> number_after(std::string_view text, std::string_view marker) {
  const auto pos = text.find(marker);
  if (pos == std::string_view::npos) return std::nullopt;
  const std::string tail(text.substr(pos + marker.size(), 32));
  char* end = nullptr;
  const double v = std::strtod(tail.c_str(), &end);
  if (end == tail.c_str()) return std::nullopt;
  return v;
}

}  // namespace

SleepReport parse_report_text(std::string_view raw) {
  const std::string text = strip_markup(raw);
  const auto start = text.find(kReportHeader);
  if (start == std::string::npos) {
    throw Error(ErrorCode::ParseFailure, "missing \"Sleep Quality Report:\" header");
  }
  const std::string body = text.substr(start);
  const auto lines = split(body, '\n');

  SleepReport r;
  auto require = [&](std::string_view label) {
    auto v = find_array(lines, label);
    if (!v) throw Error(ErrorCode::ParseFailure, "HRV parameter block missing: " + std::string(label));
    return *v;
  };
  r.sdnn = require("SDNN");
  r.rmssd = require("RMSSD");
  r.lf_hf = require("LF/HF");
  r.pnn50 = require("PNN50");
  // Quantise to storage precision so render/parse is a fixed point.
  for (double& v : r.sdnn) v = std::round(v);
  for (double& v : r.rmssd) v = std::round(v);
  for (double& v : r.lf_hf) v = round_to(v, 2);
  for (double& v : r.pnn50) v = round_to(v, 1);

  for (const auto& line : lines) {
    const std::string t = trim(line);
    if (t.rfind("Report ID:", 0) == 0) r.report_id = trim(std::string_view(t).substr(10));
  }
  if (auto n = number_after(body, "Monitoring period:")) {
    r.nights = static_cast<int>(*n);
  } else {
    r.nights = static_cast<int>(r.sdnn.size());
  }
  if (auto v = find_array(lines, "Nightly sleep duration (hours)")) {
    r.sleep_hours = *v;
    for (double& x : r.sleep_hours) x = round_to(x, 1);
  }
  auto ints = [&](std::string_view label) {
    std::vector<int> out;
    if (auto v = find_array(lines, label))
      for (double x : *v) out.push_back(static_cast<int>(std::lround(x)));
    return out;
  };
  const auto light = ints("Light sleep (minutes)");
  const auto deep = ints("Deep sleep (minutes)");
  const auto rem = ints("REM sleep (minutes)");
  if (light.size() == deep.size() && deep.size() == rem.size()) {
    for (std::size_t i = 0; i < light.size(); ++i) r.stages.push_back({light[i], deep[i], rem[i]});
  }
  r.apnea_events = ints("Sleep apnea events per night");
  if (auto v = number_after(body, "average sleep duration was")) {
    r.avg_sleep_hours = round_to(*v, 1);
  } else if (!r.sleep_hours.empty()) {
    r.avg_sleep_hours = round_to(mean(r.sleep_hours), 1);
  }
  r.rendered_text = std::string(raw.substr(raw.find(kReportHeader) == std::string_view::npos
                                               ? 0
                                               : raw.find(kReportHeader)));
  return r;
}

SleepReport exemplar_report() {
  SleepReport r;
  r.report_id = "exemplar";
  r.nights = 6;
  r.sdnn = {53, 55, 54, 56, 53, 54};
  r.rmssd = {66, 68, 67, 69, 70, 68};
  r.lf_hf = {1.2, 1.3, 1.1, 1.4, 1.2};
  r.pnn50 = {38.0, 40.5, 39.0, 41.0, 39.5, 40.0};
  r.sleep_hours = {7.6, 7.8, 7.7, 7.9, 7.5, 7.7};
  r.avg_sleep_hours = 7.7;
  r.stages = std::vector<StageMinutes>(6, StageMinutes{250, 90, 100});
  r.apnea_events = {9, 8, 10, 9, 9, 9};
  r.rendered_text = render_report_text(r);
  return r;
}

}  // namespace sleepcot
