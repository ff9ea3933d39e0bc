#pragma once

#include <string>
#include <vector>

#include "sleepcot/assessor.hpp"
#include "sleepcot/gateway.hpp"
#include "sleepcot/prompts.hpp"
#include "sleepcot/report.hpp"

namespace sleepcot {

/// Which registered backend (and model) a stage talks to.
struct BackendRef {
  std::string backend_id = "mock";
  std::string model_name = "mock-model";
};

struct ReportProvenance {
  std::string report_id;
  int batch = 0;
  std::string backend_id;
  std::string model_name;
  double temperature = 0.0;
  std::string cache_key;
  int repairs = 0;
  bool accepted = false;
  std::string note;
};

struct LlmSynthesisOptions {
  int batch_size = 10;
  int parallelism = 4;
  int max_repairs = 2;
  double temperature = kSynthesisTemperature;
};

struct LlmSynthesisResult {
  std::vector<SleepReport> reports;         // accepted, in batch order, at most n
  std::vector<ReportProvenance> provenance;  // one per parsed or dropped item
  std::size_t parse_failures = 0;
  std::size_t dropped_invalid = 0;
  std::vector<std::string> log;
};

/// Pr1 path: batches of Pr1 prompts, responses split on the report header,
/// parsed, validated, and repaired up to `max_repairs` times with the
/// violation list. GatewayError propagates when a whole batch fails.
LlmSynthesisResult llm_generate_reports(const SleepReport& exemplar, const PhysioRuleSet& rules, int n, Gateway& gw,
                                        const BackendRef& backend, const LlmSynthesisOptions& opts = {},
                                        const TemplateLibrary& lib = TemplateLibrary::builtin());

/// Splits a model response into the chunks that start with the report header.
std::vector<std::string> split_reports(std::string_view text);

struct SuggestionItem {
  std::string report_id;
  std::string prompt;
  std::string description;
  std::string suggestion;
  bool ok = false;
  std::string error;
  ChatResponse meta;
};

/// Pr2 for every report with its D_A description.
std::vector<SuggestionItem> generate_suggestions(const std::vector<SleepReport>& reports,
                                                 const AssessmentThresholds& thresholds, Gateway& gw,
                                                 const BackendRef& backend, int parallelism,
                                                 const TemplateLibrary& lib = TemplateLibrary::builtin());

struct QuestionSet {
  std::string report_id;
  std::vector<std::string> questions;
  std::size_t discarded = 0;
  std::size_t numeric_dropped = 0;
  std::string error;
};

/// Pr3 over the reports in order, as one growing multi-turn dialogue.
std::vector<QuestionSet> generate_questions(const std::vector<SleepReport>& reports, int per_report, Gateway& gw,
                                            const BackendRef& backend, std::size_t token_budget = 8192,
                                            const TemplateLibrary& lib = TemplateLibrary::builtin());

struct AnswerItem {
  std::string report_id;  // empty for knowledge questions
  std::string question;
  std::string prompt;
  std::string answer;
  bool ok = false;
  std::string error;
  ChatResponse meta;
};

struct QaJob {
  std::string report_id;
  std::string report_text;  // empty for knowledge questions
  std::string question;
};

/// Answers each job with the given prompt variant (FewShotCoT for teacher
/// data; KnowledgeAnswer is used automatically when report_text is empty).
std::vector<AnswerItem> answer_questions(const std::vector<QaJob>& jobs, TemplateId variant, Gateway& gw,
                                         const BackendRef& backend, double temperature, int parallelism,
                                         const TemplateLibrary& lib = TemplateLibrary::builtin());

/// Report-free sleep knowledge questions.
QuestionSet generate_knowledge_questions(int count, Gateway& gw, const BackendRef& backend,
                                         const TemplateLibrary& lib = TemplateLibrary::builtin());

}  // namespace sleepcot
