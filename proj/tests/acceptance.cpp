// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.
// Runs fully offline with the network tripwire armed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "scripted_judge.hpp"
#include "sleepcot/assessor.hpp"
#include "sleepcot/cli.hpp"
#include "sleepcot/dataset.hpp"
#include "sleepcot/error.hpp"
#include "sleepcot/hrv.hpp"
#include "sleepcot/judge.hpp"
#include "sleepcot/mock_pipeline.hpp"
#include "sleepcot/rng.hpp"
#include "sleepcot/util.hpp"
#include "sleepcot/workflow.hpp"

using namespace sleepcot;
namespace fs = std::filesystem;

namespace {

constexpr double kTimeDomainRelTol = 1e-9;
constexpr double kTimeDomainBudgetS = 1.0;
constexpr double kLfToneMinRatio = 5.0;
constexpr double kHfToneMaxRatio = 0.2;
constexpr double kToneBudgetS = 5.0;
constexpr double kClosedLoopTimeTol = 0.05;
constexpr double kClosedLoopLfHfTol = 0.15;
constexpr double kSynthBudgetS = 10.0;
constexpr double kPrintedTolerance = 0.1;
constexpr double kAblationTol = 1e-9;
constexpr double kEmBudgetS = 1.0;
constexpr double kTotalBudgetS = 120.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int n, const std::string& title, const std::function<Outcome()>& fn) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("threw ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("[%s] %2d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", n, title.c_str(), o.detail.c_str(),
              seconds_since(t0));
  std::fflush(stdout);
}

std::string fmt(double v, int p = 3) { return format_fixed(v, p); }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1e", v);
  return buf;
}

std::unique_ptr<Gateway> make_gw() {
  GatewayOptions o;
  o.base_delay = std::chrono::milliseconds(1);
  auto gw = std::make_unique<Gateway>(o);
  gw->register_backend(std::make_shared<TripwireBackend>("network"), "none");
  gw->register_backend(make_pipeline_mock(), "mock-model");
  gw->register_backend(make_pipeline_mock("mock-alt", true), "mock-alt-model");
  return gw;
}

std::vector<double> tone(double hz, double mean_ms, double amp_ms, double seconds) {
  std::vector<double> x;
  double t = 0.0;
  while (t < seconds) {
    const double v = mean_ms + amp_ms * std::sin(2.0 * std::numbers::pi * hz * t);
    x.push_back(v);
    t += v / 1000.0;
  }
  return x;
}

// -- 1 ----------------------------------------------------------------------
Outcome time_domain_oracle() {
  std::mt19937_64 gen(20240101);
  std::uniform_int_distribution<int> len(20, 600);
  std::uniform_real_distribution<double> base(650.0, 1050.0), step(-40.0, 40.0);
  std::vector<std::vector<double>> series;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x(static_cast<std::size_t>(len(gen)));
    double level = base(gen);
    for (auto& v : x) v = std::clamp(level += step(gen) * 0.2, 400.0, 1600.0) + step(gen);
    series.push_back(std::move(x));
  }
  double worst = 0.0;
  const auto t0 = Clock::now();
  std::vector<hrv::TimeDomainMetrics> got;
  for (const auto& x : series) got.push_back(hrv::compute_time_domain(hrv::RRSeries(x)));
  const double elapsed = seconds_since(t0);
  auto rel = [](double a, long double b) {
    return b == 0 ? std::abs(a) : static_cast<double>(std::abs(a - b) / std::abs(b));
  };
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto o = oracle::time_domain(series[i]);
    worst = std::max({worst, rel(got[i].sdnn_ms, o.sdnn), rel(got[i].rmssd_ms, o.rmssd), rel(got[i].pnn50_pct, o.pnn50)});
  }
  bool zeros = true;
  for (double v : {700.0, 812.3, 1333.3}) {
    const auto m = hrv::compute_time_domain(hrv::RRSeries(std::vector<double>(300, v)));
    zeros = zeros && m.sdnn_ms == 0.0 && m.rmssd_ms == 0.0 && m.pnn50_pct == 0.0;
  }
  return {worst <= kTimeDomainRelTol && zeros && elapsed < kTimeDomainBudgetS,
          "100 series, max rel err " + sci(worst) + " (tol " + sci(kTimeDomainRelTol) + "), constant series zero: " +
              (zeros ? "yes" : "no") + ", compute " + fmt(elapsed) + " s (limit 1 s)"};
}

// -- 2 ----------------------------------------------------------------------
Outcome tone_bands() {
  const auto t0 = Clock::now();
  const auto lf = hrv::compute_frequency_domain(hrv::RRSeries(tone(0.10, 1000.0, 50.0, 300.0)));
  const auto hf = hrv::compute_frequency_domain(hrv::RRSeries(tone(0.30, 1000.0, 50.0, 300.0)));
  const double elapsed = seconds_since(t0);
  const double l = lf.lf_hf.value_or(0.0), h = hf.lf_hf.value_or(1e9);
  return {l >= kLfToneMinRatio && h <= kHfToneMaxRatio && elapsed < kToneBudgetS,
          "0.10 Hz LF/HF " + fmt(l, 1) + " (>= 5), 0.30 Hz LF/HF " + fmt(h, 4) + " (<= 0.2)"};
}

// -- 3 ----------------------------------------------------------------------
Outcome closed_loop() {
  std::mt19937_64 gen(77);
  const auto ranges = hrv::ReferenceRanges::defaults();
  // Healthy short-term bands: SDNN 50±16, RMSSD above its healthy floor, LF/HF 0.5-2.0.
  std::uniform_real_distribution<double> mean_rr(750.0, 1050.0), sdnn(34.0, 66.0), lfhf(0.5, 2.0), share(0.55, 0.95);
  double worst_time = 0.0, worst_lfhf = 0.0;
  int infeasible = 0;
  for (int i = 0; i < 50; ++i) {
    hrv::SynthesisTargets t;
    t.mean_rr_ms = mean_rr(gen);
    t.sdnn_ms = sdnn(gen);
    t.rmssd_ms = std::clamp(t.sdnn_ms * share(gen), ranges.rmssd.healthy_min.value(), ranges.rmssd.general_max - 1.0);
    t.lf_hf = lfhf(gen);
    try {
      const auto m = hrv::compute_metrics(hrv::synthesize_rr(t, 300.0, 1000 + static_cast<std::uint64_t>(i)));
      worst_time = std::max({worst_time, std::abs(m.time.sdnn_ms - t.sdnn_ms) / t.sdnn_ms,
                             std::abs(m.time.rmssd_ms - t.rmssd_ms) / t.rmssd_ms});
      worst_lfhf = std::max(worst_lfhf, std::abs(m.frequency.value().lf_hf.value() - t.lf_hf) / t.lf_hf);
    } catch (const Error&) {
      ++infeasible;
    }
  }
  return {infeasible == 0 && worst_time <= kClosedLoopTimeTol && worst_lfhf <= kClosedLoopLfHfTol,
          "50 targets, worst SDNN/RMSSD err " + fmt(100 * worst_time, 2) + "% (<= 5%), worst LF/HF err " +
              fmt(100 * worst_lfhf, 2) + "% (<= 15%), infeasible " + std::to_string(infeasible)};
}

// -- 4 ----------------------------------------------------------------------
std::map<std::string, std::string> dir_contents(const fs::path& d) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(d)) out[e.path().filename().string()] = read_file(e.path());
  return out;
}

Outcome synth_cli(const fs::path& scratch) {
  std::ostringstream out, err;
  const auto t0 = Clock::now();
  const int a = run_cli({"synth", "--count", "100", "--out", (scratch / "a").string()}, out, err);
  const double elapsed = seconds_since(t0);
  const int b = run_cli({"synth", "--count", "100", "--out", (scratch / "b").string()}, out, err);
  if (a != 0 || b != 0) return {false, "synth exited " + std::to_string(a) + "/" + std::to_string(b) + ": " + err.str()};
  const auto first = dir_contents(scratch / "a" / "reports");
  const bool identical = first == dir_contents(scratch / "b" / "reports");
  std::size_t reports = 0, violations = 0, prefixed = 0;
  const auto rules = PhysioRuleSet::defaults();
  for (const auto& [name, body] : first) {
    if (name == "manifest.json" || name.size() < 5 || name.substr(name.size() - 5) != ".json") continue;
    ++reports;
    const SleepReport r = nlohmann::json::parse(body);
    violations += validate_report(r, rules).size();
    if (first.at(r.report_id + ".txt").rfind("Sleep Quality Report:", 0) == 0) ++prefixed;
  }
  return {reports == 100 && violations == 0 && prefixed == 100 && identical && elapsed < kSynthBudgetS,
          std::to_string(reports) + " reports, " + std::to_string(violations) + " violations (rules and general ranges), " +
              std::to_string(prefixed) + " with header, rerun byte-identical: " + (identical ? "yes" : "no") + ", " +
              fmt(elapsed, 2) + " s (limit 10 s)"};
}

// -- 5 ----------------------------------------------------------------------
Outcome exemplar_labels() {
  const auto a = assess(exemplar_report());
  const std::string got = std::string(to_string(a.stress_resilience)) + "/" + to_string(a.stress_level) + "/" +
                          to_string(a.fatigue_level) + "/" + to_string(a.ans_activity);
  return {got == "Good/Low/Mild/Good", "resilience/stress/fatigue/ANS = " + got + " (want Good/Low/Mild/Good)"};
}

// -- 6, 7 -------------------------------------------------------------------
struct CorpusFixture {
  CorpusInputs inputs;
  std::string error;
};

CorpusFixture make_corpus() {
  CorpusFixture f;
  auto gw = make_gw();
  CollectOptions o;
  o.holdout_writer = {"mock-alt", "mock-alt-model"};
  o.timestamp = "1970-01-01T00:00:00Z";
  f.inputs = collect_corpus_inputs(synthesize_reports(100, derive_seed(42, "reports")), *gw,
                                   AssessmentThresholds::defaults(), o);
  return f;
}

std::size_t lines_in(const fs::path& p) {
  std::ifstream f(p);
  std::size_t n = 0;
  for (std::string line; std::getline(f, line);) ++n;
  return n;
}

std::size_t count_task(const std::vector<InstructionRecord>& v, TaskType t) {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [&](const auto& r) { return r.task_type == t; }));
}

Outcome standard_split(const CorpusInputs& in, const fs::path& scratch) {
  const auto s = build_corpus(in, SplitPlan::standard(42));
  emit_artifacts(s, scratch / "standard");
  auto triple = [&](const std::vector<InstructionRecord>& v) {
    return std::to_string(count_task(v, TaskType::SuggestionGeneration)) + "/" +
           std::to_string(count_task(v, TaskType::PersonalQA)) + "/" + std::to_string(count_task(v, TaskType::KnowledgeQA));
  };
  // independent leakage audit: ids and raw report text
  std::size_t leaks = 0;
  for (const auto& r : s.train) {
    if (s.test_reports.count(r.source_report_id)) ++leaks;
    for (const auto& id : s.test_reports)
      if (r.input.find(in.report_texts.at(id)) != std::string::npos) ++leaks;
  }
  const std::size_t lines = lines_in(scratch / "standard" / "train.jsonl");
  const std::size_t holdout = s.holdouts.count("external") ? s.holdouts.at("external").size() : 0;
  const bool ok = triple(s.train) == "80/12000/600" && triple(s.test) == "20/3000/200" && holdout == 100 &&
                  lines == 12680 && leaks == 0;
  return {ok, "train " + triple(s.train) + ", test " + triple(s.test) + ", holdout " + std::to_string(holdout) +
                  ", train.jsonl " + std::to_string(lines) + " lines, leaks " + std::to_string(leaks)};
}

Outcome sweep(const CorpusInputs& in) {
  const std::vector<std::size_t> counts{4000, 6000, 8000, 10000, 12000};
  const auto plans = sweep_plans(SplitPlan::standard(42), counts);
  std::vector<std::set<std::string>> personal;
  for (const auto& p : plans) {
    const auto s = build_corpus(in, p);
    std::set<std::string> ids;
    for (const auto& r : s.train)
      if (r.task_type == TaskType::PersonalQA) ids.insert(r.record_id);
    personal.push_back(std::move(ids));
  }
  bool nested = plans.size() == 5;
  std::string sizes;
  for (std::size_t i = 0; i < personal.size(); ++i) {
    sizes += (i ? "," : "") + std::to_string(personal[i].size());
    nested = nested && personal[i].size() == counts[i];
    if (i) nested = nested && std::includes(personal[i].begin(), personal[i].end(), personal[i - 1].begin(),
                                            personal[i - 1].end());
  }
  return {nested, std::to_string(plans.size()) + " plans, personal train " + sizes + ", each contains the previous: " +
                      (nested ? "yes" : "no")};
}

// -- 8 ----------------------------------------------------------------------
Outcome model_table() {
  struct Row {
    const char* name;
    std::array<double, 4> means;
    double printed;
    int decimals;
  };
  const Row rows[] = {
      {"Qwen-max", {4.8, 4.9, 4.7, 4.9}, 4.8, 1},      {"Qwen2.5-7B", {4.0, 4.2, 4.3, 4.5}, 4.25, 2},
      {"Qwen2.5-1.5B", {3.5, 3.7, 3.5, 3.5}, 3.5, 1},  {"GPT-4o", {5, 5, 5, 5}, 5.0, 1},
      {"Claude", {4.6, 4.7, 4.5, 4.8}, 4.7, 1},        {"Baichuan4", {4.7, 4.7, 4.6, 4.8}, 4.7, 1},
      {"GLM-4", {4.8, 4.6, 4.6, 4.9}, 4.8, 1},         {"Gemini", {4.6, 4.7, 4.5, 4.8}, 4.6, 1},
      {"sleepCoT-0.5B", {4.3, 4.4, 4.3, 4.2}, 4.3, 1}, {"SleepCoT-1.5B", {4.8, 4.7, 4.7, 4.7}, 4.7, 1},
  };
  bool all_within = true;
  std::string flagged;
  for (const auto& r : rows) {
    const auto c = check_printed_average(aggregate_means(r.name, r.means), r.printed, r.decimals);
    all_within = all_within && std::abs(round_half_away(c.full, 1) - r.printed) <= kPrintedTolerance + 1e-9;
    if (!c.explained)
      flagged += std::string(flagged.empty() ? "" : "; ") + r.name + " mean " + fmt(c.full) + " printed " +
                 fmt(r.printed, r.decimals);
  }
  return {all_within, "10 rows within +/-0.1 after display rounding; not explained by rounding: " + flagged};
}

// -- 9 ----------------------------------------------------------------------
Outcome ablation() {
  const std::map<scripted::Style, std::array<double, 4>> means{{scripted::Style::Plain, {3.4, 3.6, 3.4, 3.3}},
                                                               {scripted::Style::Cot, {4.4, 4.2, 4.1, 4.3}},
                                                               {scripted::Style::FewShot, {4.8, 4.7, 4.7, 4.7}}};
  auto gw = make_gw();
  gw->register_backend(scripted::make_judge(means), "scripted");
  const auto reports = synthesize_reports(10, 5);
  std::vector<EvalItem> items;
  for (std::size_t i = 0; i < reports.size(); ++i)
    items.push_back({"item-" + std::to_string(i), reports[i].rendered_text,
                     "Is my SDNN value normal? #" + std::to_string(i)});
  const auto res = run_ablation(items, {TemplateId::PlainQA, TemplateId::CoTOnly, TemplateId::FewShotCoT}, *gw, {},
                                {"scripted-judge", "scripted"});
  const double p = res.at(0).row.overall, c = res.at(1).row.overall, f = res.at(2).row.overall;
  const bool ok = std::abs(p - 3.425) <= kAblationTol && std::abs(c - 4.25) <= kAblationTol &&
                  std::abs(f - 4.725) <= kAblationTol && p < c && c < f;
  return {ok, "plain " + fmt(p) + ", CoT " + fmt(c) + ", few-shot CoT " + fmt(f) + " (want 3.425 < 4.250 < 4.725)"};
}

// -- 10 ---------------------------------------------------------------------
Outcome exact_match_goldens() {
  const bool goldens = exact_match("REM sleep", "rem sleep") == 1 && exact_match("deep sleep", "deep sleep") == 1 &&
                       exact_match("deep sleep", "light sleep") == 0;
  std::vector<std::string> preds, golds;
  std::mt19937_64 gen(9);
  const std::vector<std::string> pool{"REM sleep", "the deep sleep", "Light sleep.", "an apnea event", "N3"};
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (int i = 0; i < 1000; ++i) {
    preds.push_back(pool[pick(gen)]);
    golds.push_back(pool[pick(gen)]);
  }
  const auto t0 = Clock::now();
  const auto r = score_em(preds, golds);
  const double elapsed = seconds_since(t0);
  std::size_t expected = 0;
  for (int i = 0; i < 1000; ++i) expected += preds[static_cast<std::size_t>(i)] == golds[static_cast<std::size_t>(i)];
  return {goldens && r.matches == expected && elapsed < kEmBudgetS,
          std::string("goldens ") + (goldens ? "ok" : "wrong") + ", 1000 pairs EM " + fmt(r.em) + " in " +
              fmt(elapsed, 4) + " s (limit 1 s)"};
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  NetworkTripwire::reset();
  NetworkTripwire::arm();
  const fs::path scratch = fs::temp_directory_path() / "sleepcot_acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  report(1, "time-domain metrics vs oracle", time_domain_oracle);
  report(2, "pure tones land in LF and HF", tone_bands);
  report(3, "closed-loop RR synthesis", closed_loop);
  report(4, "synth --count 100", [&] { return synth_cli(scratch / "synth"); });
  report(5, "exemplar assessment labels", exemplar_labels);

  CorpusFixture corpus;
  try {
    corpus = make_corpus();
  } catch (const std::exception& e) {
    corpus.error = e.what();
  }
  auto with_corpus = [&](auto fn) {
    return [&, fn]() -> Outcome {
      if (!corpus.error.empty()) return {false, "corpus generation failed: " + corpus.error};
      return fn();
    };
  };
  report(6, "standard split plan", with_corpus([&] { return standard_split(corpus.inputs, scratch); }));
  report(7, "nested sweep plans", with_corpus([&] { return sweep(corpus.inputs); }));
  report(8, "model table averages", model_table);
  report(9, "prompt ablation ordering", ablation);
  report(10, "exact match", exact_match_goldens);

  const double total = seconds_since(t0);
  const long trips = NetworkTripwire::trips();
  report(11, "offline run", [&] {
    return Outcome{NetworkTripwire::armed() && trips == 0 && total < kTotalBudgetS,
                   "tripwire armed, " + std::to_string(trips) + " network attempts, total " + fmt(total, 2) +
                       " s (limit 120 s)"};
  });
  NetworkTripwire::disarm();
  fs::remove_all(scratch);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
