#include "sleepcot/pipeline.hpp"

#include <set>

#include "sleepcot/error.hpp"
#include "sleepcot/util.hpp"

namespace sleepcot {

namespace {

ChatRequest make_request(const BackendRef& b, std::vector<ChatMessage> messages, double temperature, int max_units,
                         std::string tag) {
  ChatRequest r;
  r.backend_id = b.backend_id;
  r.model_name = b.model_name;
  r.messages = std::move(messages);
  r.temperature = temperature;
  r.max_output_units = max_units;
  r.request_tag = std::move(tag);
  return r;
}

std::string padded(int v, int width) {
  std::string s = std::to_string(v);
  if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  return s;
}

}  // namespace

std::vector<std::string> split_reports(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = text.find(kReportHeader);
  while (pos != std::string_view::npos) {
    const std::size_t next = text.find(kReportHeader, pos + kReportHeader.size());
    out.emplace_back(text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    pos = next;
  }
  return out;
}

LlmSynthesisResult llm_generate_reports(const SleepReport& exemplar, const PhysioRuleSet& rules, int n, Gateway& gw,
                                        const BackendRef& backend, const LlmSynthesisOptions& opts,
                                        const TemplateLibrary& lib) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "report count must be at least 1");
  if (opts.batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch size must be at least 1");
  const int batches = (n + opts.batch_size - 1) / opts.batch_size;

  std::vector<ChatRequest> reqs;
  for (int k = 0; k < batches; ++k) {
    const int count = std::min(opts.batch_size, n - k * opts.batch_size);
    const std::string system = "Synthesis batch " + std::to_string(k + 1) + "/" + std::to_string(batches);
    reqs.push_back(make_request(backend, {{"system", system}, {"user", render_pr1(exemplar, rules, count, lib)}},
                                opts.temperature, 16384, "pr1/batch-" + std::to_string(k + 1)));
  }
  const auto outcomes = gw.map_bounded(reqs, opts.parallelism);

  LlmSynthesisResult result;
  struct Item {
    SleepReport report;
    std::vector<Violation> violations;
    std::size_t prov;
  };
  std::vector<Item> items;
  std::set<std::string> seen_ids;
  for (int k = 0; k < batches; ++k) {
    const auto& o = outcomes[static_cast<std::size_t>(k)];
    if (!o.ok) throw Error(o.error_code, "Pr1 batch " + std::to_string(k + 1) + " failed: " + o.error);
    const auto chunks = split_reports(o.response.content);
    if (chunks.empty()) {
      ++result.parse_failures;
      result.log.push_back("batch " + std::to_string(k + 1) + ": no report header in response");
    }
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      ReportProvenance prov;
      prov.batch = k + 1;
      prov.backend_id = o.response.backend_id;
      prov.model_name = o.response.model_name;
      prov.temperature = o.response.temperature;
      prov.cache_key = o.response.cache_key;
      SleepReport rep;
      try {
        rep = parse_report_text(chunks[i]);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ParseFailure) throw;
        ++result.parse_failures;
        prov.note = std::string("parse failure: ") + e.what();
        result.log.push_back("batch " + std::to_string(k + 1) + " item " + std::to_string(i + 1) + ": " + prov.note);
        result.provenance.push_back(prov);
        continue;
      }
      if (rep.report_id.empty() || seen_ids.count(rep.report_id)) {
        rep.report_id = "llm-" + padded(k + 1, 3) + "-" + padded(static_cast<int>(i) + 1, 3);
      }
      seen_ids.insert(rep.report_id);
      prov.report_id = rep.report_id;
      result.provenance.push_back(prov);
      auto v = validate_report(rep, rules);
      items.push_back({std::move(rep), std::move(v), result.provenance.size() - 1});
    }
  }

  for (int round = 1; round <= opts.max_repairs; ++round) {
    std::vector<std::size_t> pending;
    std::vector<ChatRequest> repair;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (items[i].violations.empty()) continue;
      pending.push_back(i);
      repair.push_back(make_request(backend, {{"user", render_pr1_repair(items[i].report, items[i].violations, lib)}},
                                    opts.temperature, 4096,
                                    "pr1/repair-" + std::to_string(round) + "/" + items[i].report.report_id));
    }
    if (pending.empty()) break;
    const auto fixed = gw.map_bounded(repair, opts.parallelism);
    for (std::size_t j = 0; j < pending.size(); ++j) {
      auto& item = items[pending[j]];
      auto& prov = result.provenance[item.prov];
      prov.repairs = round;
      if (!fixed[j].ok) {
        result.log.push_back(item.report.report_id + ": repair request failed: " + fixed[j].error);
        continue;
      }
      const auto chunks = split_reports(fixed[j].response.content);
      try {
        if (chunks.empty()) throw Error(ErrorCode::ParseFailure, "no report header in repair response");
        SleepReport rep = parse_report_text(chunks.front());
        rep.report_id = item.report.report_id;
        item.violations = validate_report(rep, rules);
        item.report = std::move(rep);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ParseFailure) throw;
        result.log.push_back(item.report.report_id + ": repair unparseable: " + e.what());
      }
    }
  }

  for (auto& item : items) {
    auto& prov = result.provenance[item.prov];
    if (!item.violations.empty()) {
      ++result.dropped_invalid;
      prov.note = "dropped after " + std::to_string(prov.repairs) + " repair(s): " + item.violations.front().to_string();
      result.log.push_back(item.report.report_id + ": " + prov.note);
      continue;
    }
    if (static_cast<int>(result.reports.size()) >= n) {
      prov.note = "surplus beyond requested count";
      continue;
    }
    prov.accepted = true;
    result.reports.push_back(std::move(item.report));
  }
  return result;
}

std::vector<SuggestionItem> generate_suggestions(const std::vector<SleepReport>& reports,
                                                 const AssessmentThresholds& thresholds, Gateway& gw,
                                                 const BackendRef& backend, int parallelism,
                                                 const TemplateLibrary& lib) {
  std::vector<SuggestionItem> items(reports.size());
  std::vector<ChatRequest> reqs;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    items[i].report_id = reports[i].report_id;
    items[i].description = render_description(assess(reports[i], thresholds), reports[i]);
    items[i].prompt = render_pr2(reports[i], items[i].description, lib);
    reqs.push_back(make_request(backend, {{"user", items[i].prompt}}, kSynthesisTemperature, 4096,
                                "pr2/" + reports[i].report_id));
  }
  const auto outcomes = gw.map_bounded(reqs, parallelism);
  for (std::size_t i = 0; i < items.size(); ++i) {
    items[i].ok = outcomes[i].ok;
    if (outcomes[i].ok) {
      items[i].suggestion = outcomes[i].response.content;
      items[i].meta = outcomes[i].response;
    } else {
      items[i].error = outcomes[i].error;
    }
  }
  return items;
}

std::vector<QuestionSet> generate_questions(const std::vector<SleepReport>& reports, int per_report, Gateway& gw,
                                            const BackendRef& backend, std::size_t token_budget,
                                            const TemplateLibrary& lib) {
  std::vector<QuestionSet> out;
  DialogueState dialogue;
  dialogue.token_budget = token_budget;
  for (const auto& rep : reports) {
    QuestionSet qs;
    qs.report_id = rep.report_id;
    auto [prompt, next] = render_pr3(rep, per_report, dialogue, lib);
    try {
      const auto resp = gw.send_chat(
          make_request(backend, next.turns, kSynthesisTemperature, 8192, "pr3/" + rep.report_id));
      auto parsed = parse_questions(resp.content);
      qs.questions = std::move(parsed.questions);
      qs.discarded = parsed.discarded;
      qs.numeric_dropped = parsed.numeric_dropped;
      next.add_assistant(resp.content);
      dialogue = std::move(next);
    } catch (const Error& e) {
      qs.error = e.what();  // the failed turn is not kept in the dialogue
    }
    out.push_back(std::move(qs));
  }
  return out;
}

std::vector<AnswerItem> answer_questions(const std::vector<QaJob>& jobs, TemplateId variant, Gateway& gw,
                                         const BackendRef& backend, double temperature, int parallelism,
                                         const TemplateLibrary& lib) {
  std::vector<AnswerItem> items(jobs.size());
  std::vector<ChatRequest> reqs;
  reqs.reserve(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& job = jobs[i];
    items[i].report_id = job.report_id;
    items[i].question = job.question;
    items[i].prompt = job.report_text.empty() ? lib.render(TemplateId::KnowledgeAnswer, {{"question", job.question}})
                                              : render_qa(variant, job.report_text, job.question, lib);
    reqs.push_back(make_request(backend, {{"user", items[i].prompt}}, temperature, 2048,
                                std::string("qa/") + template_id_name(variant) + "/" + job.report_id));
  }
  const auto outcomes = gw.map_bounded(reqs, parallelism);
  for (std::size_t i = 0; i < items.size(); ++i) {
    items[i].ok = outcomes[i].ok;
    if (outcomes[i].ok) {
      items[i].answer = outcomes[i].response.content;
      items[i].meta = outcomes[i].response;
    } else {
      items[i].error = outcomes[i].error;
    }
  }
  return items;
}

QuestionSet generate_knowledge_questions(int count, Gateway& gw, const BackendRef& backend,
                                         const TemplateLibrary& lib) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "knowledge question count must be at least 1");
  const std::string prompt = lib.render(TemplateId::KnowledgeQuestions, {{"count", std::to_string(count)}});
  const auto resp =
      gw.send_chat(make_request(backend, {{"user", prompt}}, kSynthesisTemperature, 65536, "knowledge-questions"));
  auto parsed = parse_questions(resp.content);
  QuestionSet qs;
  qs.questions = std::move(parsed.questions);
  qs.discarded = parsed.discarded;
  qs.numeric_dropped = parsed.numeric_dropped;
  return qs;
}

}  // namespace sleepcot
