#include "sleepcot/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <unordered_set>

#include "sleepcot/error.hpp"
#include "sleepcot/rng.hpp"
#include "sleepcot/util.hpp"

namespace sleepcot {

using nlohmann::json;

const char* task_key(TaskType t) noexcept {
  switch (t) {
    case TaskType::SuggestionGeneration: return "suggestion_generation";
    case TaskType::PersonalQA: return "personal_qa";
    case TaskType::KnowledgeQA: return "knowledge_qa";
  }
  return "?";
}

std::optional<TaskType> parse_task(std::string_view key) {
  for (TaskType t : kAllTasks)
    if (key == task_key(t)) return t;
  return std::nullopt;
}

void InstructionRecord::check() const {
  if (record_id.empty()) throw Error(ErrorCode::InvalidArgument, "record without id");
  if (instruction.empty() || output.empty()) {
    throw Error(ErrorCode::InvalidArgument, record_id + ": instruction and output must be nonempty");
  }
  if (task_type != TaskType::KnowledgeQA && source_report_id.empty()) {
    throw Error(ErrorCode::InvalidArgument, record_id + ": report-linked record lacks source_report_id");
  }
}

json to_jsonl_object(const InstructionRecord& r) {
  return {{"id", r.record_id},
          {"task", task_key(r.task_type)},
          {"instruction", r.instruction},
          {"input", r.input},
          {"output", r.output}};
}

InstructionRecord from_jsonl_object(const json& j) {
  InstructionRecord r;
  try {
    r.record_id = j.at("id").get<std::string>();
    const auto task = parse_task(j.at("task").get<std::string>());
    if (!task) throw Error(ErrorCode::ParseFailure, "unknown task '" + j.at("task").get<std::string>() + "'");
    r.task_type = *task;
    r.instruction = j.at("instruction").get<std::string>();
    r.input = j.at("input").get<std::string>();
    r.output = j.at("output").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseFailure, std::string("bad JSONL record: ") + e.what());
  }
  return r;
}

std::vector<InstructionRecord> read_jsonl(const std::filesystem::path& path) {
  std::vector<InstructionRecord> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      out.push_back(from_jsonl_object(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseFailure, path.string() + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

SplitPlan SplitPlan::standard(std::uint64_t seed) {
  SplitPlan p;
  p.name = "standard";
  p.counts[TaskType::SuggestionGeneration] = {80, 20};
  p.counts[TaskType::PersonalQA] = {12000, 3000};
  p.counts[TaskType::KnowledgeQA] = {600, 200};
  p.holdouts["external"] = 100;
  p.seed = seed;
  return p;
}

TaskCounts SplitPlan::of(TaskType t) const {
  auto it = counts.find(t);
  return it == counts.end() ? TaskCounts{} : it->second;
}

std::vector<SplitPlan> sweep_plans(const SplitPlan& base, const std::vector<std::size_t>& personal_counts) {
  std::vector<SplitPlan> out;
  for (std::size_t n : personal_counts) {
    SplitPlan p = base;
    if (n != base.of(TaskType::PersonalQA).train) p.name = base.name + "-personal-" + std::to_string(n);
    p.counts[TaskType::PersonalQA].train = n;
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string normalize_instruction(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::ispunct(u)) continue;
    if (std::isspace(u)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(u)));
  }
  return out;
}

std::pair<std::vector<InstructionRecord>, std::size_t> dedupe(const std::vector<InstructionRecord>& records) {
  std::vector<InstructionRecord> kept;
  kept.reserve(records.size());
  std::unordered_set<std::string> seen;
  std::size_t dropped = 0;
  for (const auto& r : records) {
    std::string key = r.source_report_id;
    key += '\x1f';
    key += normalize_instruction(r.instruction);
    if (!seen.insert(std::move(key)).second) {
      ++dropped;
      continue;
    }
    kept.push_back(r);
  }
  return {std::move(kept), dropped};
}

namespace {

// Seeded ordering of `pool` entries that satisfy `keep`, cut to `count`.
std::vector<InstructionRecord> draw(const std::vector<InstructionRecord>& pool, std::size_t count,
                                    std::uint64_t seed, const std::string& what,
                                    const std::function<bool(const InstructionRecord&)>& keep) {
  std::vector<const InstructionRecord*> eligible;
  for (const auto& r : pool)
    if (keep(r)) eligible.push_back(&r);
  if (eligible.size() < count) {
    throw Error(ErrorCode::InsufficientPool, what + ": need " + std::to_string(count) + ", have " +
                                                 std::to_string(eligible.size()));
  }
  Rng rng(seed);
  rng.shuffle(eligible);
  std::vector<InstructionRecord> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(*eligible[i]);
  return out;
}

void audit(const Splits& s, const CorpusInputs& in) {
  for (const auto& r : s.train) {
    if (!r.source_report_id.empty() && s.test_reports.count(r.source_report_id)) {
      throw Error(ErrorCode::LeakageDetected, r.record_id + " is a train record of test report " + r.source_report_id);
    }
  }
  std::vector<const std::string*> test_texts;
  for (const auto& id : s.test_reports) {
    auto it = in.report_texts.find(id);
    if (it != in.report_texts.end() && !it->second.empty()) test_texts.push_back(&it->second);
  }
  std::unordered_set<std::string> inputs;
  for (const auto& r : s.train)
    if (!r.input.empty()) inputs.insert(r.input);
  for (const auto& input : inputs) {
    for (const auto* text : test_texts) {
      if (input.find(*text) != std::string::npos) {
        throw Error(ErrorCode::LeakageDetected, "a test report's text appears inside a train input");
      }
    }
  }
}

}  // namespace

Splits build_corpus(const CorpusInputs& in, const SplitPlan& plan) {
  std::unordered_set<std::string> ids;
  auto register_all = [&](const std::vector<InstructionRecord>& pool) {
    for (const auto& r : pool) {
      r.check();
      if (!ids.insert(r.record_id).second) throw Error(ErrorCode::InvalidArgument, "duplicate record id " + r.record_id);
    }
  };
  register_all(in.suggestions);
  register_all(in.personal_qa);
  register_all(in.knowledge_qa);
  for (const auto& [name, pool] : in.holdout_pools) register_all(pool);

  Splits s;
  s.seed = plan.seed;
  auto [personal, dropped_p] = dedupe(in.personal_qa);
  auto [knowledge, dropped_k] = dedupe(in.knowledge_qa);
  s.deduped_personal = dropped_p;
  s.deduped_knowledge = dropped_k;
  s.personal_pool_after_dedupe = personal.size();

  std::set<std::string> report_set;
  for (const auto& r : in.suggestions) report_set.insert(r.source_report_id);
  for (const auto& r : personal) report_set.insert(r.source_report_id);
  std::vector<std::string> reports(report_set.begin(), report_set.end());
  Rng report_rng(derive_seed(plan.seed, "reports"));
  report_rng.shuffle(reports);

  const TaskCounts sc = plan.of(TaskType::SuggestionGeneration);
  const TaskCounts pc = plan.of(TaskType::PersonalQA);
  const TaskCounts kc = plan.of(TaskType::KnowledgeQA);
  std::size_t n_test_reports = 0;
  if (sc.train + sc.test > 0) {
    n_test_reports = sc.test;
  } else if (pc.train + pc.test > 0) {
    n_test_reports = static_cast<std::size_t>(std::ceil(static_cast<double>(reports.size()) *
                                                        static_cast<double>(pc.test) /
                                                        static_cast<double>(pc.train + pc.test)));
  }
  if (n_test_reports > reports.size()) {
    throw Error(ErrorCode::InsufficientPool, "plan needs " + std::to_string(n_test_reports) + " test reports, have " +
                                                 std::to_string(reports.size()));
  }
  s.test_reports.insert(reports.begin(), reports.begin() + static_cast<std::ptrdiff_t>(n_test_reports));

  auto in_test = [&](const InstructionRecord& r) { return s.test_reports.count(r.source_report_id) != 0; };
  auto in_train = [&](const InstructionRecord& r) { return !in_test(r); };
  const auto seed = plan.seed;

  auto sug_train = draw(in.suggestions, sc.train, derive_seed(seed, "suggestion-train"), "suggestion train", in_train);
  auto sug_test = draw(in.suggestions, sc.test, derive_seed(seed, "suggestion-test"), "suggestion test", in_test);
  auto pqa_train = draw(personal, pc.train, derive_seed(seed, "personal-train"), "personal QA train", in_train);
  auto pqa_test = draw(personal, pc.test, derive_seed(seed, "personal-test"), "personal QA test", in_test);
  auto kqa = draw(knowledge, kc.test + kc.train, derive_seed(seed, "knowledge"), "knowledge QA",
                  [](const InstructionRecord&) { return true; });

  for (auto* part : {&sug_train, &pqa_train}) s.train.insert(s.train.end(), part->begin(), part->end());
  s.train.insert(s.train.end(), kqa.begin() + static_cast<std::ptrdiff_t>(kc.test), kqa.end());
  for (auto* part : {&sug_test, &pqa_test}) s.test.insert(s.test.end(), part->begin(), part->end());
  s.test.insert(s.test.end(), kqa.begin(), kqa.begin() + static_cast<std::ptrdiff_t>(kc.test));

  for (const auto& [name, count] : plan.holdouts) {
    static const std::vector<InstructionRecord> kEmpty;
    auto it = in.holdout_pools.find(name);
    const auto& pool = it == in.holdout_pools.end() ? kEmpty : it->second;
    s.holdouts[name] = draw(pool, count, derive_seed(seed, "holdout/" + name), "holdout " + name,
                            [&](const InstructionRecord& r) { return r.source_report_id.empty() || in_test(r); });
  }

  audit(s, in);
  return s;
}

// ---------------------------------------------------------------------------

json train_config() {
  return {{"learning_rate", 1.0e-5}, {"batch_size", 1}, {"lora_rank", 8}, {"epochs", 10}};
}

json emit_artifacts(const Splits& splits, const std::filesystem::path& out_dir, const json& extra) {
  json files = json::object();
  auto emit = [&](const std::string& name, const std::vector<InstructionRecord>& records) {
    std::string body;
    json by_task = json::object();
    for (TaskType t : kAllTasks) by_task[task_key(t)] = 0;
    for (const auto& r : records) {
      body += to_jsonl_object(r).dump();
      body += '\n';
      by_task[task_key(r.task_type)] = by_task[task_key(r.task_type)].get<int>() + 1;
    }
    write_file_atomic(out_dir / name, body);
    files[name] = {{"records", records.size()}, {"sha256", sha256_hex(body)}, {"by_task", by_task}};
  };
  emit("train.jsonl", splits.train);
  emit("test.jsonl", splits.test);
  for (const auto& [name, records] : splits.holdouts) emit("holdout_" + name + ".jsonl", records);

  const std::string config = train_config().dump(2) + "\n";
  write_file_atomic(out_dir / "train_config.json", config);
  files["train_config.json"] = {{"sha256", sha256_hex(config)}};

  json manifest = {{"seed", splits.seed},
                   {"files", files},
                   {"test_reports", splits.test_reports},
                   {"dedupe",
                    {{"personal_dropped", splits.deduped_personal},
                     {"knowledge_dropped", splits.deduped_knowledge},
                     {"personal_pool_after_dedupe", splits.personal_pool_after_dedupe}}},
                   {"train_config", train_config()}};
  for (const auto& [k, v] : extra.items()) manifest[k] = v;
  write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

}  // namespace sleepcot
