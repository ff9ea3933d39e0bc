#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sleepcot/gateway.hpp"
#include "sleepcot/pipeline.hpp"
#include "sleepcot/prompts.hpp"

namespace sleepcot {

/// The four rubric dimensions. Personalization is printed as
/// "Penalization" in some results tables; both spellings parse.
enum class Dimension { Personalization, Relevance, Completeness, Accuracy };
inline constexpr Dimension kAllDimensions[] = {Dimension::Personalization, Dimension::Relevance,
                                               Dimension::Completeness, Dimension::Accuracy};
const char* dimension_key(Dimension d) noexcept;          // "personalization"
const char* dimension_display_name(Dimension d) noexcept;  // "Personalization (Penalization)"

struct JudgeScorecard {
  std::string item_id;
  std::array<int, 4> scores{};  // indexed by Dimension, each 1..5
  std::string judge_rationale;
  std::string judge_backend;

  int score(Dimension d) const { return scores[static_cast<std::size_t>(d)]; }
  bool operator==(const JudgeScorecard&) const = default;
};

nlohmann::json to_json(const JudgeScorecard& c);

/// Parses the `name=K` block. JudgeParseFailure when a dimension is missing,
/// not an integer, or outside 1..5.
JudgeScorecard parse_judge_output(std::string_view text, const std::string& item_id);

/// Rubric prompt to the judge at temperature 0, one re-ask on a malformed
/// reply, then JudgeParseFailure.
JudgeScorecard score_response(const std::string& report_text, const std::string& question, const std::string& answer,
                              Gateway& gw, const BackendRef& judge, const std::string& item_id,
                              const TemplateLibrary& lib = TemplateLibrary::builtin());

struct AggregateRow {
  std::string system_name;
  std::array<double, 4> means{};
  double overall = 0.0;  // mean of the four dimension means, full precision
  std::size_t n_items = 0;

  double mean(Dimension d) const { return means[static_cast<std::size_t>(d)]; }
  /// One decimal, half away from zero.
  std::string display_overall() const;
};

nlohmann::json to_json(const AggregateRow& r);

/// Throws EmptyInput for an empty card list.
AggregateRow aggregate(const std::vector<JudgeScorecard>& cards, const std::string& system_name);
/// Row from already-averaged dimension values (one line of a results table).
AggregateRow aggregate_means(const std::string& system_name, const std::array<double, 4>& means,
                             std::size_t n_items = 1);

/// Compares a printed average with the row mean. `explained` is true when
/// rounding the full-precision mean half away from zero to the printed number
/// of decimals gives the printed figure.
struct PrintedAverageCheck {
  double full = 0.0;
  double displayed = 0.0;
  double printed = 0.0;
  bool explained = false;
  bool within_tenth = false;
};
PrintedAverageCheck check_printed_average(const AggregateRow& row, double printed, int printed_decimals);

// ---------------------------------------------------------------------------
// Exact match

/// Lowercase, drop punctuation, drop the articles a/an/the, collapse spaces.
std::string normalize_answer(std::string_view s);
int exact_match(std::string_view pred, std::string_view gold);

struct EmResult {
  std::size_t n = 0;
  std::size_t matches = 0;
  double em = 0.0;
};
/// Throws EmptyInput when there are no pairs or InvalidArgument on a length mismatch.
EmResult score_em(const std::vector<std::string>& preds, const std::vector<std::string>& golds);

struct QaPair {
  std::string question;
  std::string answer;
};
/// SleepQA-style pairs: a JSON array of {"question", "answer"} objects, or a
/// tab-separated file with one `question<TAB>answer` per line (optional
/// header line `question<TAB>answer`, '#' comments and blank lines ignored).
std::vector<QaPair> load_qa_pairs(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Evaluation runs

struct EvalItem {
  std::string item_id;
  std::string report_text;  // context shown to the judge
  std::string question;
};

struct VariantResult {
  TemplateId variant = TemplateId::FewShotCoT;
  AggregateRow row;
  std::vector<JudgeScorecard> cards;
  std::vector<AnswerItem> answers;
  std::size_t failures = 0;
  std::vector<std::string> errors;
};

struct AblationOptions {
  int parallelism = 4;
  double max_failure_rate = 0.10;
  double student_temperature = 0.0;
};

/// For each variant (PlainQA, CoTOnly, FewShotCoT) render, ask the student,
/// judge and aggregate. Rows come back in variant order. EmptyInput for an
/// empty test set; AblationAborted when more than max_failure_rate of a
/// variant's items fail.
std::vector<VariantResult> run_ablation(const std::vector<EvalItem>& testset, const std::vector<TemplateId>& variants,
                                        Gateway& gw, const BackendRef& student, const BackendRef& judge,
                                        const AblationOptions& opts = {},
                                        const TemplateLibrary& lib = TemplateLibrary::builtin());

/// Judges answers that already exist (one per item, same order).
VariantResult judge_answers(const std::vector<EvalItem>& items, const std::vector<AnswerItem>& answers,
                            const std::string& system_name, Gateway& gw, const BackendRef& judge, int parallelism,
                            double max_failure_rate, const TemplateLibrary& lib = TemplateLibrary::builtin());

/// Writes eval/<run_id>/scorecards.jsonl and summary.json under `eval_root`.
void persist_eval(const std::filesystem::path& eval_root, const std::string& run_id,
                  const std::vector<VariantResult>& results, const nlohmann::json& meta);

}  // namespace sleepcot
