#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sleepcot/gateway.hpp"
#include "sleepcot/report.hpp"

namespace sleepcot {

enum class TemplateId {
  Pr1,
  Pr1Repair,
  Pr2,
  Pr3,
  FewShotCoT,
  CoTOnly,
  PlainQA,
  ExemplarDirectLookup,
  ExemplarGlobalSummary,
  ExemplarOutOfContext,
  JudgeRubric,
  JudgeReask,
  KnowledgeQuestions,
  KnowledgeAnswer,
};

const char* template_id_name(TemplateId id) noexcept;
std::optional<TemplateId> parse_template_id(std::string_view name);

enum class QuestionCategory { DirectLookup, GlobalSummary, OutOfContext };
inline constexpr QuestionCategory kAllCategories[] = {QuestionCategory::DirectLookup, QuestionCategory::GlobalSummary,
                                                      QuestionCategory::OutOfContext};
TemplateId exemplar_template(QuestionCategory c) noexcept;

using Bindings = std::map<std::string, std::string>;

struct PromptTemplate {
  TemplateId id;
  std::string file;
  std::string body;
  std::set<std::string> required;

  /// Single-pass `{{name}}` substitution; bound values are not rescanned.
  /// MissingPlaceholder when a required name is unbound or bound to an empty
  /// string; TemplateError when the body names a placeholder with no binding.
  std::string render(const Bindings& b) const;
};

class TemplateLibrary {
 public:
  /// Templates compiled into the library from templates/.
  static const TemplateLibrary& builtin();
  /// Reads `dir/manifest` and every file it lists.
  static TemplateLibrary load(const std::filesystem::path& dir);

  const PromptTemplate& get(TemplateId id) const;
  std::string render(TemplateId id, const Bindings& b) const { return get(id).render(b); }
  /// Hash over every template body, recorded in run manifests.
  std::string fingerprint() const;

 private:
  static TemplateLibrary from_files(const std::map<std::string, std::string>& files, const std::string& origin);
  std::map<TemplateId, PromptTemplate> templates_;
};

using Turn = ChatMessage;

/// Running multi-turn conversation used for question generation. Size is
/// counted in "units": whitespace-delimited words times 1.3.
struct DialogueState {
  std::vector<Turn> turns;
  std::size_t token_budget = 8192;

  static double count_units(std::string_view text);
  double units() const;
  void add_assistant(std::string content);
  /// Drops the oldest user/assistant pairs (a leading system turn is kept)
  /// until the dialogue fits. Throws TemplateError if the newest turn alone
  /// cannot fit.
  void enforce_budget();
};

std::string render_pr1(const SleepReport& exemplar, const PhysioRuleSet& rules, int count,
                       const TemplateLibrary& lib = TemplateLibrary::builtin());
std::string render_pr1_repair(const SleepReport& rep, const std::vector<Violation>& violations,
                              const TemplateLibrary& lib = TemplateLibrary::builtin());
std::string render_pr2(const SleepReport& rep, const std::string& description,
                       const TemplateLibrary& lib = TemplateLibrary::builtin());

/// Appends the rendered prompt as a user turn of `dialogue` and windows it to
/// the budget. The caller adds the assistant reply before the next report.
std::pair<std::string, DialogueState> render_pr3(const SleepReport& rep, int n_questions, DialogueState dialogue,
                                                 const TemplateLibrary& lib = TemplateLibrary::builtin());

/// Question-answer prompt in one of the three ablation variants
/// (PlainQA, CoTOnly, FewShotCoT).
std::string render_qa(TemplateId variant, const std::string& report_text, const std::string& question,
                      const TemplateLibrary& lib = TemplateLibrary::builtin());
std::string render_fewshot_cot(const SleepReport& rep, const std::string& question,
                               const TemplateLibrary& lib = TemplateLibrary::builtin());

struct ParsedQuestions {
  std::vector<std::string> questions;
  std::size_t discarded = 0;        // lines without the "Question N:" prefix
  std::size_t numeric_dropped = 0;  // well-formed but quoting a number
};

/// True when the text quotes a numeric value: a token that starts with a
/// digit ("7.7", "54ms"). Digits inside names such as "PNN50" do not count.
bool contains_numeric_value(std::string_view text);

/// Extracts questions from lines starting with "Question N:". Blank lines are
/// ignored; questions quoting numeric values break the no-numbers rule and
/// are dropped.
ParsedQuestions parse_questions(std::string_view text);

}  // namespace sleepcot
