#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "sleepcot/assessor.hpp"
#include "sleepcot/error.hpp"
#include "sleepcot/hrv.hpp"
#include "sleepcot/report.hpp"
#include "sleepcot/rules.hpp"

using namespace sleepcot;

namespace {

// Report with every night equal, so means are the given values.
SleepReport flat_report(double sdnn, double rmssd, double lf_hf, double pnn50, double hours, int apnea, int nights = 6) {
  SleepReport r;
  r.report_id = "flat";
  r.nights = nights;
  r.sdnn.assign(nights, sdnn);
  r.rmssd.assign(nights, rmssd);
  r.lf_hf.assign(nights, lf_hf);
  r.pnn50.assign(nights, pnn50);
  r.sleep_hours.assign(nights, hours);
  r.avg_sleep_hours = hours;
  const int total = static_cast<int>(hours * 60.0 * 0.9);
  r.stages.assign(nights, StageMinutes{total - total / 5 - total / 4, total / 5, total / 4});
  r.apnea_events.assign(nights, apnea);
  r.rendered_text = render_report_text(r);
  return r;
}

bool has_rule(const std::vector<Violation>& v, const std::string& rule) {
  for (const auto& x : v)
    if (x.rule == rule) return true;
  return false;
}

}  // namespace

TEST_CASE("time-domain examples") {
  const auto a = hrv::compute_time_domain(hrv::RRSeries({800, 810, 790, 805, 795}));
  const auto oa = oracle::time_domain({800, 810, 790, 805, 795});
  CHECK(a.sdnn_ms == doctest::Approx(static_cast<double>(oa.sdnn)).epsilon(1e-12));
  CHECK(a.sdnn_ms == doctest::Approx(7.906).epsilon(1e-4));
  CHECK(a.rmssd_ms == doctest::Approx(14.361).epsilon(1e-4));
  CHECK(a.pnn50_pct == 0.0);
  const auto b = hrv::compute_time_domain(hrv::RRSeries({800, 860}));
  CHECK(b.sdnn_ms == doctest::Approx(42.426).epsilon(1e-4));
  CHECK(b.rmssd_ms == 60.0);
  CHECK(b.pnn50_pct == 100.0);
}

TEST_CASE("zero SDNN target gives a constant series") {
  const auto rr = hrv::synthesize_rr({900.0, 0.0, 0.0, 1.0}, 300.0, 7);
  for (double v : rr.intervals_ms()) CHECK(v == 900.0);
}

TEST_CASE("default rule set is consistent and parses back") {
  const auto rules = PhysioRuleSet::defaults();
  CHECK_NOTHROW(rules.check());
  CHECK(rules.rules.size() == 3);
  CHECK(rules.bound(ReportVar::Sdnn).general_min == 20.0);
  CHECK(rules.bound(ReportVar::Sdnn).general_max == 220.0);
  CHECK(rules.bound(ReportVar::Rmssd).general_max == 50.0);

  const auto r = parse_rule("x", "rmssd < 20 => pnn50 <= 12");
  CHECK(r.when.var == ReportVar::Rmssd);
  CHECK(r.when.op == CmpOp::Lt);
  CHECK(r.then.var == ReportVar::Pnn50);
  CHECK(r.then.holds(12.0));
  CHECK_FALSE(r.then.holds(12.5));
  CHECK_THROWS_AS(parse_rule("x", "rmssd << 20 => pnn50 < 1"), Error);
  CHECK_THROWS_AS(parse_rule("x", "heart < 20 => pnn50 < 1"), Error);
}

TEST_CASE("conflicting rules are rejected at load") {
  auto code_of = [](const std::string& text) {
    try {
      PhysioRuleSet::from_config(KeyValueConfig::parse(text));
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  // consequent outside the general band
  CHECK(code_of("rule.bad = sdnn > 30 => rmssd > 80\n") == ErrorCode::RuleConflict);
  // two rules that fire together with disjoint demands
  CHECK(code_of("rule.a = sdnn > 25 => pnn50 < 5\nrule.b = sdnn > 30 => pnn50 > 20\n") == ErrorCode::RuleConflict);
  CHECK(code_of("sdnn.general_min = 300\n") == ErrorCode::ConfigError);

  const auto ok = PhysioRuleSet::from_config(KeyValueConfig::parse("sdnn.general_max = 200\n"));
  CHECK(ok.bound(ReportVar::Sdnn).general_max == 200.0);
  CHECK(ok.rules.size() == 3);
}

TEST_CASE("profile sampling covers archetypes and is deterministic") {
  const auto a = sample_profiles(100, 1);
  const auto b = sample_profiles(100, 1);
  CHECK(a.size() == 100);
  std::set<Archetype> seen;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < a.size(); ++i) {
    seen.insert(a[i].archetype);
    ids.insert(a[i].profile_id);
    CHECK(a[i].profile_id == b[i].profile_id);
    CHECK(a[i].seed == b[i].seed);
    CHECK(a[i].targets.sdnn_ms == b[i].targets.sdnn_ms);
  }
  CHECK(seen.size() == 6);
  CHECK(ids.size() == 100);
  CHECK(sample_profiles(1, 3).size() == 1);
  CHECK(sample_profiles(100, 2)[0].seed != a[0].seed);
}

TEST_CASE("generated reports satisfy every invariant") {
  const auto rules = PhysioRuleSet::defaults();
  const auto ranges = rules.reference_ranges();
  const auto profiles = sample_profiles(24, 5);
  for (const auto& p : profiles) {
    const auto rep = generate_report(p, rules);
    INFO(p.profile_id);
    CHECK(validate_report(rep, rules).empty());
    CHECK(rep.rendered_text.rfind("Sleep Quality Report:", 0) == 0);
    CHECK(rep.nights == p.nights);
    for (auto v : kAllVars) {
      if (const auto* s = rep.series(v)) CHECK(s->size() == static_cast<std::size_t>(rep.nights));
    }
    for (int i = 0; i < rep.nights; ++i) {
      CHECK(rep.stages[i].total() <= rep.sleep_hours[i] * 60.0 + 1e-9);
      CHECK(hrv::classify(hrv::Metric::Sdnn, rep.sdnn[i], ranges) != hrv::RangeStatus::OutOfGeneral);
      CHECK(hrv::classify(hrv::Metric::Rmssd, rep.rmssd[i], ranges) != hrv::RangeStatus::OutOfGeneral);
      CHECK(hrv::classify(hrv::Metric::LfHf, rep.lf_hf[i], ranges) != hrv::RangeStatus::OutOfGeneral);
      CHECK(hrv::classify(hrv::Metric::Pnn50, rep.pnn50[i], ranges) != hrv::RangeStatus::OutOfGeneral);
    }
    // render/parse round trip is exact
    const auto back = parse_report_text(rep.rendered_text);
    CHECK(back == rep);
    CHECK(render_report_text(rep) == rep.rendered_text);
  }
  CHECK(generate_report(profiles[0], rules) == generate_report(profiles[0], rules));
}

TEST_CASE("healthy adult profile gives a six-night report") {
  SleepProfile p;
  p.profile_id = "healthy";
  p.archetype = Archetype::HealthyAdult;
  p.targets = archetype_targets(Archetype::HealthyAdult);
  p.seed = 17;
  const auto rep = generate_report(p, PhysioRuleSet::defaults());
  CHECK(rep.nights == 6);
  CHECK(rep.sdnn.size() == 6);
  CHECK(rep.rendered_text.find("- SDNN: [") != std::string::npos);
}

TEST_CASE("profile targets that break a rule are refused") {
  SleepProfile p;
  p.profile_id = "bad";
  p.targets = archetype_targets(Archetype::HealthyAdult);
  p.targets.sdnn_ms = 400.0;  // above the 220 ms general maximum
  CHECK_THROWS_AS(generate_report(p, PhysioRuleSet::defaults()), Error);
  p.targets = archetype_targets(Archetype::HighStress);
  p.targets.lf_hf = 4.0;  // sympathetic dominance caps RMSSD at 35
  p.targets.rmssd_ms = 45.0;
  p.targets.sdnn_ms = 60.0;
  CHECK_THROWS_AS(generate_report(p, PhysioRuleSet::defaults()), Error);
}

TEST_CASE("exemplar defects are flagged, not hidden") {
  const auto e = exemplar_report();
  const auto v = validate_report(e, PhysioRuleSet::defaults());
  CHECK(has_rule(v, "arity"));
  CHECK(has_rule(v, "general_range"));
  CHECK(e.rendered_text.find("SDNN: [53, 55, 54, 56, 53, 54]") != std::string::npos);
  CHECK(e.rendered_text.find("LF/HF: [1.2, 1.3, 1.1, 1.4, 1.2]") != std::string::npos);
  CHECK(e.rendered_text.find("average sleep duration was 7.7 hours") != std::string::npos);
  CHECK(e.rendered_text.find("average of 9 sleep apnea events per night") != std::string::npos);
}

TEST_CASE("validation counterexamples") {
  const auto rules = PhysioRuleSet::defaults();
  auto ok = flat_report(50, 40, 1.3, 20, 7.5, 3);
  CHECK(validate_report(ok, rules).empty());

  auto stages = ok;
  stages.stages[2].light += 200;
  CHECK(has_rule(validate_report(stages, rules), "stage_total"));

  auto high = ok;
  high.sdnn[1] = 300;
  CHECK(has_rule(validate_report(high, rules), "general_range"));

  auto drift = ok;
  drift.sdnn = {50, 50, 60, 60, 60, 60};  // +20% in one night
  CHECK(has_rule(validate_report(drift, rules), "drift"));

  auto rule = flat_report(40, 15, 1.3, 20, 7.5, 3);  // rmssd < 20 with pnn50 20
  CHECK(has_rule(validate_report(rule, rules), "low_rmssd_low_pnn50"));

  auto avg = ok;
  avg.avg_sleep_hours = 8.5;
  CHECK_FALSE(validate_report(avg, rules).empty());

  auto header = ok;
  header.rendered_text = header.rendered_text.substr(1);
  CHECK_FALSE(validate_report(header, rules).empty());
}

TEST_CASE("report text parsing") {
  const auto ok = flat_report(50, 40, 1.3, 20, 7.5, 3);
  // markdown emphasis and chatter before the header are tolerated
  std::string noisy = "Here you go:\n\n**" + ok.rendered_text;
  const auto parsed = parse_report_text(noisy);
  CHECK(parsed.sdnn == ok.sdnn);
  CHECK(parsed.rendered_text.rfind("Sleep Quality Report:", 0) == 0);

  std::string no_hrv = ok.rendered_text.substr(0, ok.rendered_text.find("HRV Parameters Calculation:"));
  CHECK_THROWS_AS(parse_report_text(no_hrv), Error);
  CHECK_THROWS_AS(parse_report_text("nothing here"), Error);
}

TEST_CASE("report JSON round trip") {
  const auto ok = flat_report(50, 40, 1.3, 20, 7.5, 3);
  nlohmann::json j = ok;
  CHECK(j.get<SleepReport>() == ok);
}

// ---------------------------------------------------------------------------

TEST_CASE("exemplar assessment matches its label bullets") {
  const auto a = assess(exemplar_report());
  CHECK(a.stress_resilience == Grade::Good);
  CHECK(a.stress_level == StressLevel::Low);
  CHECK(a.fatigue_level == Severity::Mild);
  CHECK(a.ans_activity == Grade::Good);
  CHECK(a.apnea_severity == Severity::Mild);
  CHECK(assess(exemplar_report()) == a);

  const auto text = render_description(a, exemplar_report());
  CHECK(text.find("Comprehensive Impact Analysis") != std::string::npos);
  for (const char* bullet : {"- **Stress Resilience**: Good", "- **Stress Level**: Low", "- **Fatigue Level**: Mild",
                             "- **Autonomic Nervous System Activity**: Good", "- **Cardiac Health**:",
                             "- **Sleep Apnea Severity**: Mild"}) {
    CHECK(text.find(bullet) != std::string::npos);
  }
  CHECK(render_description(a, exemplar_report()) == text);
}

TEST_CASE("nominal healthy means give the best labels") {
  const auto a = assess(flat_report(50, 42, 1.0, 20, 7.5, 1));
  CHECK(a.stress_resilience == Grade::Good);
  CHECK(a.stress_level == StressLevel::Low);
  CHECK(a.fatigue_level == Severity::None);
  CHECK(a.ans_activity == Grade::Good);
  CHECK(a.cardiac_health == Grade::Good);
  CHECK(a.apnea_severity == Severity::None);
}

TEST_CASE("threshold edges belong to the more severe band") {
  CHECK(assess(flat_report(50, 42, 1.99, 20, 7.5, 1)).stress_level == StressLevel::Low);
  CHECK(assess(flat_report(50, 42, 2.0, 20, 7.5, 1)).stress_level == StressLevel::Moderate);
  CHECK(assess(flat_report(50, 42, 3.0, 20, 7.5, 1)).stress_level == StressLevel::High);
  CHECK(assess(flat_report(50, 42, 1.0, 20, 7.5, 5)).apnea_severity == Severity::Mild);
  CHECK(assess(flat_report(50, 42, 1.0, 20, 7.5, 15)).apnea_severity == Severity::Moderate);
  CHECK(assess(flat_report(50, 42, 1.0, 20, 7.5, 30)).apnea_severity == Severity::Severe);
  CHECK(assess(flat_report(50, 42, 1.0, 20, 7.5, 4)).apnea_severity == Severity::None);
}

TEST_CASE("fatigue combines apnea and short sleep") {
  CHECK(assess(flat_report(50, 42, 1.0, 20, 5.5, 1)).fatigue_level == Severity::Mild);
  CHECK(assess(flat_report(50, 42, 1.0, 20, 4.5, 1)).fatigue_level == Severity::Moderate);
  CHECK(assess(flat_report(50, 42, 1.0, 20, 4.5, 20)).fatigue_level == Severity::Severe);
  CHECK(assess(flat_report(50, 42, 1.0, 20, 4.5, 40)).fatigue_level == Severity::Severe);
}

TEST_CASE("low variability lowers cardiac and resilience grades") {
  const auto a = assess(flat_report(22, 16, 1.0, 5, 7.5, 1));
  CHECK(a.cardiac_health == Grade::Moderate);
  CHECK(a.stress_resilience == Grade::Moderate);
  const auto b = assess(flat_report(21, 12, 1.0, 2, 7.5, 1));
  CHECK(b.cardiac_health == Grade::Poor);
  CHECK(b.stress_resilience == Grade::Poor);
}

TEST_CASE("thresholds come from config and are checked") {
  const auto t = AssessmentThresholds::from_config(KeyValueConfig::parse("assess.stress_moderate_lf_hf = 1.5\n"));
  CHECK(assess(flat_report(50, 42, 1.6, 20, 7.5, 1), t).stress_level == StressLevel::Moderate);
  CHECK_THROWS_AS(
      AssessmentThresholds::from_config(KeyValueConfig::parse("assess.stress_moderate_lf_hf = 4.0\n")), Error);
}
