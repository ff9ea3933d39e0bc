#include "sleepcot/workflow.hpp"

#include "sleepcot/error.hpp"
#include "sleepcot/util.hpp"

namespace sleepcot {

std::vector<SleepReport> synthesize_reports(std::size_t n, std::uint64_t seed, const PhysioRuleSet& rules,
                                            int parallelism) {
  const auto profiles = sample_profiles(n, seed);
  std::vector<SleepReport> out(n);
  std::vector<std::string> errors(n);
  parallel_for(n, parallelism, [&](std::size_t i) {
    try {
      out[i] = generate_report(profiles[i], rules);
    } catch (const std::exception& e) {
      errors[i] = profiles[i].profile_id + ": " + e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw Error(ErrorCode::InfeasibleTargets, e);
  return out;
}

namespace {

// Fixed part of Pr2, ahead of the report slot.
std::string suggestion_directive(const TemplateLibrary& lib) {
  const std::string& body = lib.get(TemplateId::Pr2).body;
  return trim(std::string_view(body).substr(0, body.find("{{")));
}

}  // namespace

CorpusInputs collect_corpus_inputs(const std::vector<SleepReport>& reports, Gateway& gw,
                                   const AssessmentThresholds& thresholds, const CollectOptions& opts,
                                   CollectStats* stats, const std::function<void(const std::string&)>& log) {
  const auto& lib = TemplateLibrary::builtin();
  CollectStats st;
  auto note = [&](const std::string& msg) {
    if (log) log(msg);
  };
  CorpusInputs in;
  for (const auto& r : reports) in.report_texts[r.report_id] = r.rendered_text;
  auto prov = [&](const BackendRef& b, TemplateId t) {
    return Provenance{b.backend_id, template_id_name(t), opts.timestamp};
  };

  const auto suggestions = generate_suggestions(reports, thresholds, gw, opts.teacher, opts.parallelism, lib);
  const std::string directive = suggestion_directive(lib);
  for (std::size_t i = 0; i < suggestions.size(); ++i) {
    const auto& s = suggestions[i];
    if (!s.ok) {
      ++st.suggestions_failed;
      note("suggestion for " + s.report_id + " failed: " + s.error);
      continue;
    }
    in.suggestions.push_back({"sug-" + s.report_id, TaskType::SuggestionGeneration, directive,
                              reports[i].rendered_text + "\n\n" + s.description, s.suggestion, s.report_id,
                              prov(opts.teacher, TemplateId::Pr2)});
  }
  note("suggestions: " + std::to_string(in.suggestions.size()));

  auto personal_records = [&](const BackendRef& writer, int per_report, const std::string& prefix) {
    const auto sets = generate_questions(reports, per_report, gw, writer, 8192, lib);
    std::vector<QaJob> jobs;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      st.questions_discarded += sets[i].discarded;
      st.questions_numeric_dropped += sets[i].numeric_dropped;
      if (!sets[i].error.empty()) {
        ++st.dialogue_errors;
        note("questions for " + sets[i].report_id + ": " + sets[i].error);
      }
      for (std::size_t k = 0; k < sets[i].questions.size(); ++k) {
        jobs.push_back({reports[i].report_id, reports[i].rendered_text, sets[i].questions[k]});
        ids.push_back(prefix + reports[i].report_id + "-" + std::to_string(k + 1));
      }
    }
    const auto answers =
        answer_questions(jobs, TemplateId::FewShotCoT, gw, opts.teacher, kSynthesisTemperature, opts.parallelism, lib);
    std::vector<InstructionRecord> out;
    for (std::size_t j = 0; j < answers.size(); ++j) {
      if (!answers[j].ok) {
        ++st.answers_failed;
        continue;
      }
      out.push_back({ids[j], TaskType::PersonalQA, jobs[j].question, jobs[j].report_text, answers[j].answer,
                     jobs[j].report_id, prov(opts.teacher, TemplateId::FewShotCoT)});
    }
    return out;
  };
  in.personal_qa = personal_records(opts.teacher, opts.questions_per_report, "pqa-");
  note("personal QA: " + std::to_string(in.personal_qa.size()));

  const auto kq = generate_knowledge_questions(opts.knowledge_questions, gw, opts.teacher, lib);
  std::vector<QaJob> kjobs;
  for (const auto& q : kq.questions) kjobs.push_back({"", "", q});
  const auto kanswers =
      answer_questions(kjobs, TemplateId::KnowledgeAnswer, gw, opts.teacher, kSynthesisTemperature, opts.parallelism, lib);
  for (std::size_t j = 0; j < kanswers.size(); ++j) {
    if (!kanswers[j].ok) {
      ++st.answers_failed;
      continue;
    }
    in.knowledge_qa.push_back({"kqa-" + std::to_string(j + 1), TaskType::KnowledgeQA, kjobs[j].question, "",
                               kanswers[j].answer, "", prov(opts.teacher, TemplateId::KnowledgeAnswer)});
  }
  note("knowledge QA: " + std::to_string(in.knowledge_qa.size()));

  if (!opts.holdout_writer.backend_id.empty()) {
    auto pool = personal_records(opts.holdout_writer, opts.holdout_questions_per_report, "ext-");
    note("holdout pool " + opts.holdout_name + ": " + std::to_string(pool.size()));
    in.holdout_pools[opts.holdout_name] = std::move(pool);
  }
  if (stats) *stats = st;
  return in;
}

std::vector<EvalItem> eval_items_from(const std::vector<InstructionRecord>& records) {
  std::vector<EvalItem> out;
  for (const auto& r : records)
    if (r.task_type == TaskType::PersonalQA) out.push_back({r.record_id, r.input, r.instruction});
  return out;
}

}  // namespace sleepcot
