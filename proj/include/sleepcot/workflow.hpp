#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sleepcot/assessor.hpp"
#include "sleepcot/dataset.hpp"
#include "sleepcot/judge.hpp"
#include "sleepcot/pipeline.hpp"

namespace sleepcot {

/// Programmatic report synthesis: sample_profiles then generate_report, in
/// parallel. Output order follows the profile order, so it is deterministic.
std::vector<SleepReport> synthesize_reports(std::size_t n, std::uint64_t seed,
                                            const PhysioRuleSet& rules = PhysioRuleSet::defaults(),
                                            int parallelism = 4);

struct CollectOptions {
  int questions_per_report = 160;  // 80 train reports x 150 would leave no slack after dedupe
  int knowledge_questions = 900;
  int holdout_questions_per_report = 6;
  int parallelism = 8;
  BackendRef teacher;
  /// Second question writer for the external holdout; empty id skips it.
  BackendRef holdout_writer{"", ""};
  std::string holdout_name = "external";
  std::string timestamp = "1970-01-01T00:00:00Z";
};

/// Logged counts from one collection run.
struct CollectStats {
  std::size_t suggestions_failed = 0;
  std::size_t questions_discarded = 0;
  std::size_t questions_numeric_dropped = 0;
  std::size_t answers_failed = 0;
  std::size_t dialogue_errors = 0;
};

/// Runs Pr2, Pr3 and the teacher answers over `reports`, plus the knowledge
/// questions, and turns everything into instruction records:
/// suggestions (instruction = directive, input = report + description),
/// personal QA (instruction = question, input = report text) and knowledge QA
/// (instruction = question, empty input).
CorpusInputs collect_corpus_inputs(const std::vector<SleepReport>& reports, Gateway& gw,
                                   const AssessmentThresholds& thresholds, const CollectOptions& opts,
                                   CollectStats* stats = nullptr,
                                   const std::function<void(const std::string&)>& log = {});

/// Personal-QA records of a split as judge/ablation items.
std::vector<EvalItem> eval_items_from(const std::vector<InstructionRecord>& records);

}  // namespace sleepcot
