#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "sleepcot/dataset.hpp"
#include "sleepcot/error.hpp"
#include "sleepcot/util.hpp"

using namespace sleepcot;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

InstructionRecord rec(std::string id, TaskType t, std::string instruction, std::string input, std::string report) {
  InstructionRecord r;
  r.record_id = std::move(id);
  r.task_type = t;
  r.instruction = std::move(instruction);
  r.input = std::move(input);
  r.output = "answer to " + r.instruction;
  r.source_report_id = std::move(report);
  r.provenance = {"mock", "FewShotCoT", "2024-01-01T00:00:00Z"};
  return r;
}

// Record pools without any model in the loop: every report gets one
// suggestion, `per_report` questions and `holdout_per_report` external ones.
CorpusInputs pools(std::size_t reports, std::size_t per_report, std::size_t knowledge,
                   std::size_t holdout_per_report = 6) {
  CorpusInputs in;
  for (std::size_t i = 0; i < reports; ++i) {
    const std::string id = "rep-" + std::to_string(i);
    const std::string text = "Sleep Quality Report:\nbody of " + id + "\n";
    in.report_texts[id] = text;
    in.suggestions.push_back(rec("sug-" + id, TaskType::SuggestionGeneration, "Advise me.", text, id));
    for (std::size_t k = 0; k < per_report; ++k)
      in.personal_qa.push_back(
          rec("pqa-" + id + "-" + std::to_string(k), TaskType::PersonalQA, "Question " + std::to_string(k) + "?", text, id));
    for (std::size_t k = 0; k < holdout_per_report; ++k)
      in.holdout_pools["external"].push_back(
          rec("ext-" + id + "-" + std::to_string(k), TaskType::PersonalQA, "Other " + std::to_string(k) + "?", text, id));
  }
  for (std::size_t k = 0; k < knowledge; ++k)
    in.knowledge_qa.push_back(rec("kqa-" + std::to_string(k), TaskType::KnowledgeQA, "Fact " + std::to_string(k) + "?", "", ""));
  return in;
}

std::size_t count_task(const std::vector<InstructionRecord>& v, TaskType t) {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [&](const auto& r) { return r.task_type == t; }));
}

std::set<std::string> ids_of(const std::vector<InstructionRecord>& v, TaskType t) {
  std::set<std::string> out;
  for (const auto& r : v)
    if (r.task_type == t) out.insert(r.record_id);
  return out;
}

std::size_t line_count(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::size_t n = 0;
  for (std::string line; std::getline(f, line);) ++n;
  return n;
}

}  // namespace

TEST_CASE("task keys round trip") {
  for (TaskType t : kAllTasks) CHECK(parse_task(task_key(t)) == t);
  CHECK_FALSE(parse_task("nope").has_value());
}

TEST_CASE("record checks and JSONL round trip") {
  const auto r = rec("a", TaskType::PersonalQA, "Q?", "ctx", "rep-1");
  const auto j = to_jsonl_object(r);
  CHECK(j.size() == 5);
  const auto back = from_jsonl_object(j);
  CHECK(back.record_id == "a");
  CHECK(back.instruction == "Q?");
  CHECK(back.input == "ctx");
  CHECK(back.output == r.output);
  CHECK(back.task_type == TaskType::PersonalQA);
  CHECK(code_of([] { from_jsonl_object({{"id", "x"}, {"task", "bogus"}, {"instruction", "i"}, {"input", ""}, {"output", "o"}}); }) ==
        ErrorCode::ParseFailure);

  auto bad = r;
  bad.output.clear();
  CHECK(code_of([&] { bad.check(); }) == ErrorCode::InvalidArgument);
  bad = r;
  bad.source_report_id.clear();
  CHECK(code_of([&] { bad.check(); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("the standard plan gives the expected split sizes") {
  const auto plan = SplitPlan::standard(42);
  const auto s = build_corpus(pools(100, 160, 900), plan);
  CHECK(count_task(s.train, TaskType::SuggestionGeneration) == 80);
  CHECK(count_task(s.train, TaskType::PersonalQA) == 12000);
  CHECK(count_task(s.train, TaskType::KnowledgeQA) == 600);
  CHECK(count_task(s.test, TaskType::SuggestionGeneration) == 20);
  CHECK(count_task(s.test, TaskType::PersonalQA) == 3000);
  CHECK(count_task(s.test, TaskType::KnowledgeQA) == 200);
  CHECK(s.holdouts.at("external").size() == 100);
  CHECK(s.test_reports.size() == 20);

  // every report-linked record sits on its report's side
  for (const auto& r : s.train) CHECK(s.test_reports.count(r.source_report_id) == 0);
  for (const auto& r : s.test)
    if (!r.source_report_id.empty()) CHECK(s.test_reports.count(r.source_report_id) == 1);
  for (const auto& r : s.holdouts.at("external")) CHECK(s.test_reports.count(r.source_report_id) == 1);

  // knowledge train and test do not overlap
  const auto kt = ids_of(s.train, TaskType::KnowledgeQA);
  for (const auto& id : ids_of(s.test, TaskType::KnowledgeQA)) CHECK(kt.count(id) == 0);
}

TEST_CASE("splits are a function of the seed") {
  const auto in = pools(30, 20, 50);
  SplitPlan p;
  p.counts[TaskType::SuggestionGeneration] = {24, 6};
  p.counts[TaskType::PersonalQA] = {300, 60};
  p.counts[TaskType::KnowledgeQA] = {30, 10};
  p.seed = 5;
  const auto a = build_corpus(in, p);
  const auto b = build_corpus(in, p);
  CHECK(a.test_reports == b.test_reports);
  REQUIRE(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) CHECK(a.train[i].record_id == b.train[i].record_id);
  p.seed = 6;
  CHECK(build_corpus(in, p).test_reports != a.test_reports);
}

TEST_CASE("an all-zero plan gives empty splits") {
  SplitPlan p;
  const auto s = build_corpus(pools(5, 3, 4), p);
  CHECK(s.train.empty());
  CHECK(s.test.empty());
  CHECK(s.test_reports.empty());
}

TEST_CASE("sweep plans nest") {
  const auto base = SplitPlan::standard(42);
  const auto plans = sweep_plans(base, {4000, 6000, 8000, 10000, 12000});
  REQUIRE(plans.size() == 5);
  CHECK(plans.back() == base);  // the full count reproduces the base plan
  const auto in = pools(100, 160, 900);
  std::vector<std::set<std::string>> personal;
  std::set<std::string> test_reports;
  for (const auto& p : plans) {
    CHECK(p.of(TaskType::SuggestionGeneration) == base.of(TaskType::SuggestionGeneration));
    const auto s = build_corpus(in, p);
    personal.push_back(ids_of(s.train, TaskType::PersonalQA));
    CHECK(personal.back().size() == p.of(TaskType::PersonalQA).train);
    if (test_reports.empty()) test_reports = s.test_reports;
    CHECK(s.test_reports == test_reports);
  }
  for (std::size_t i = 1; i < personal.size(); ++i)
    CHECK(std::includes(personal[i].begin(), personal[i].end(), personal[i - 1].begin(), personal[i - 1].end()));
}

TEST_CASE("dedupe is per report and ignores case, punctuation and spacing") {
  CHECK(normalize_instruction("  Is my SDNN   normal?? ") == "is my sdnn normal");
  const std::vector<InstructionRecord> v{
      rec("1", TaskType::PersonalQA, "Is my SDNN normal?", "t", "r1"),
      rec("2", TaskType::PersonalQA, "is my  sdnn normal", "t", "r1"),
      rec("3", TaskType::PersonalQA, "Is my SDNN normal?", "t", "r2"),
      rec("4", TaskType::PersonalQA, "Is my RMSSD normal?", "t", "r1"),
  };
  const auto [kept, dropped] = dedupe(v);
  CHECK(dropped == 1);
  REQUIRE(kept.size() == 3);
  CHECK(kept[0].record_id == "1");
  CHECK(kept[1].record_id == "3");
  CHECK(kept[2].record_id == "4");
  // idempotent
  CHECK(dedupe(kept).second == 0);
}

TEST_CASE("short pools and duplicate ids are rejected") {
  CHECK(code_of([] { build_corpus(pools(100, 100, 900), SplitPlan::standard(1)); }) == ErrorCode::InsufficientPool);
  CHECK(code_of([] { build_corpus(pools(10, 160, 900), SplitPlan::standard(1)); }) == ErrorCode::InsufficientPool);
  auto in = pools(5, 2, 2);
  in.knowledge_qa.push_back(in.knowledge_qa.front());
  CHECK(code_of([&] { build_corpus(in, SplitPlan{}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("a test report quoted in a train input is leakage") {
  auto in = pools(10, 4, 5);
  std::string all;
  for (const auto& [id, text] : in.report_texts) all += text;
  for (auto& r : in.knowledge_qa) r.input = all;
  SplitPlan p;
  p.counts[TaskType::SuggestionGeneration] = {8, 2};
  p.counts[TaskType::KnowledgeQA] = {5, 0};
  CHECK(code_of([&] { build_corpus(in, p); }) == ErrorCode::LeakageDetected);
}

TEST_CASE("artifacts: line counts, manifest hashes, training config") {
  const auto dir = std::filesystem::temp_directory_path() / "sleepcot_dataset_test";
  std::filesystem::remove_all(dir);
  const auto s = build_corpus(pools(100, 160, 900), SplitPlan::standard(42));
  const auto m = emit_artifacts(s, dir, {{"run", "t"}});
  CHECK(line_count(dir / "train.jsonl") == 12680);
  CHECK(line_count(dir / "test.jsonl") == 3220);
  CHECK(line_count(dir / "holdout_external.jsonl") == 100);
  CHECK(m["files"]["train.jsonl"]["sha256"] == sha256_hex(read_file(dir / "train.jsonl")));
  CHECK(m["files"]["train.jsonl"]["by_task"]["personal_qa"] == 12000);
  CHECK(m["run"] == "t");
  CHECK(m["train_config"]["lora_rank"] == 8);
  CHECK(m["train_config"]["epochs"] == 10);
  CHECK(m["train_config"]["batch_size"] == 1);
  CHECK(m["train_config"]["learning_rate"] == doctest::Approx(1e-5));

  const auto back = read_jsonl(dir / "train.jsonl");
  REQUIRE(back.size() == s.train.size());
  CHECK(back.front().record_id == s.train.front().record_id);

  // another seed changes the content and hence the recorded hash
  const auto other = emit_artifacts(build_corpus(pools(100, 160, 900), SplitPlan::standard(43)), dir / "other");
  CHECK(other["files"]["train.jsonl"]["sha256"] != m["files"]["train.jsonl"]["sha256"]);
  std::filesystem::remove_all(dir);
}
