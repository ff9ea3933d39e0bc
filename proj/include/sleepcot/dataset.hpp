#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace sleepcot {

enum class TaskType { SuggestionGeneration, PersonalQA, KnowledgeQA };
inline constexpr TaskType kAllTasks[] = {TaskType::SuggestionGeneration, TaskType::PersonalQA, TaskType::KnowledgeQA};
const char* task_key(TaskType t) noexcept;  // JSONL spelling, e.g. "personal_qa"
std::optional<TaskType> parse_task(std::string_view key);

struct Provenance {
  std::string backend_id;
  std::string template_id;
  std::string timestamp;  // caller-supplied so reruns stay byte-identical
};

struct InstructionRecord {
  std::string record_id;
  TaskType task_type = TaskType::PersonalQA;
  std::string instruction;
  std::string input;
  std::string output;
  std::string source_report_id;  // empty for knowledge records
  Provenance provenance;

  /// Throws InvalidArgument when instruction/output are empty or a
  /// report-linked task lacks its source report.
  void check() const;
};

/// The five-key JSONL line (id, task, instruction, input, output).
nlohmann::json to_jsonl_object(const InstructionRecord& r);
InstructionRecord from_jsonl_object(const nlohmann::json& j);
std::vector<InstructionRecord> read_jsonl(const std::filesystem::path& path);

struct TaskCounts {
  std::size_t train = 0;
  std::size_t test = 0;
  bool operator==(const TaskCounts&) const = default;
};

struct SplitPlan {
  std::string name = "base";
  std::map<TaskType, TaskCounts> counts;
  std::map<std::string, std::size_t> holdouts;
  std::uint64_t seed = 0;

  /// 80/12000/600 train, 20/3000/200 test and a 100-question external holdout.
  static SplitPlan standard(std::uint64_t seed);
  TaskCounts of(TaskType t) const;
  bool operator==(const SplitPlan&) const = default;
};

/// One plan per personal-QA train count; everything else copied from base.
std::vector<SplitPlan> sweep_plans(const SplitPlan& base, const std::vector<std::size_t>& personal_counts);

struct CorpusInputs {
  std::vector<InstructionRecord> suggestions;
  std::vector<InstructionRecord> personal_qa;
  std::vector<InstructionRecord> knowledge_qa;
  std::map<std::string, std::vector<InstructionRecord>> holdout_pools;
  /// report_id -> rendered report text, used by the leakage audit.
  std::map<std::string, std::string> report_texts;
};

struct Splits {
  std::vector<InstructionRecord> train;
  std::vector<InstructionRecord> test;
  std::map<std::string, std::vector<InstructionRecord>> holdouts;
  std::set<std::string> test_reports;
  std::size_t deduped_personal = 0;  // dropped before splitting
  std::size_t deduped_knowledge = 0;
  std::size_t personal_pool_after_dedupe = 0;
  std::uint64_t seed = 0;
};

/// Drops records whose normalised instruction repeats an earlier record of the
/// same source report. Order of the survivors is preserved.
std::pair<std::vector<InstructionRecord>, std::size_t> dedupe(const std::vector<InstructionRecord>& records);
std::string normalize_instruction(std::string_view text);

/// Report-level split: reports are partitioned first, and every record follows
/// its report. Personal-QA train records are a prefix of one seeded ordering,
/// so larger sweep plans contain smaller ones. Throws InsufficientPool, and
/// LeakageDetected if the post-split audit ever finds a test report inside a
/// train input.
Splits build_corpus(const CorpusInputs& in, const SplitPlan& plan);

/// Writes train.jsonl, test.jsonl, holdout_<name>.jsonl, train_config.json and
/// manifest.json (counts and SHA-256 per file). Returns the manifest.
nlohmann::json emit_artifacts(const Splits& splits, const std::filesystem::path& out_dir,
                              const nlohmann::json& extra = nlohmann::json::object());

/// Fine-tuning hyperparameters recorded beside the data.
nlohmann::json train_config();

}  // namespace sleepcot
