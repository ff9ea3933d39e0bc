#include "sleepcot/judge.hpp"

#include <cctype>
#include <cmath>
#include <optional>
#include <sstream>

#include "sleepcot/error.hpp"
#include "sleepcot/util.hpp"

namespace sleepcot {

using nlohmann::json;

const char* dimension_key(Dimension d) noexcept {
  switch (d) {
    case Dimension::Personalization: return "personalization";
    case Dimension::Relevance: return "relevance";
    case Dimension::Completeness: return "completeness";
    case Dimension::Accuracy: return "accuracy";
  }
  return "?";
}

const char* dimension_display_name(Dimension d) noexcept {
  switch (d) {
    case Dimension::Personalization: return "Personalization (Penalization)";
    case Dimension::Relevance: return "Relevance";
    case Dimension::Completeness: return "Completeness";
    case Dimension::Accuracy: return "Accuracy";
  }
  return "?";
}

json to_json(const JudgeScorecard& c) {
  json j = {{"item_id", c.item_id}};
  for (Dimension d : kAllDimensions) j[dimension_key(d)] = c.score(d);
  j["judge_rationale"] = c.judge_rationale;
  j["judge_backend"] = c.judge_backend;
  return j;
}

namespace {

std::optional<Dimension> dimension_from_key(std::string_view key) {
  if (key == "personalization" || key == "penalization" || key == "personalisation") return Dimension::Personalization;
  if (key == "relevance") return Dimension::Relevance;
  if (key == "completeness") return Dimension::Completeness;
  if (key == "accuracy") return Dimension::Accuracy;
  return std::nullopt;
}

}  // namespace

JudgeScorecard parse_judge_output(std::string_view text, const std::string& item_id) {
  JudgeScorecard card;
  card.item_id = item_id;
  std::array<bool, 4> seen{};
  for (const auto& raw : split(text, '\n')) {
    std::string line;
    for (char c : raw)
      if (c != '*' && c != '`') line.push_back(c);
    line = trim(line);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = trim(std::string_view(line).substr(0, eq));
    for (char& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key == "rationale") {
      card.judge_rationale = value;
      continue;
    }
    const auto dim = dimension_from_key(key);
    if (!dim) continue;
    const auto idx = static_cast<std::size_t>(*dim);
    if (seen[idx]) continue;
    if (value.empty() || !std::all_of(value.begin(), value.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      throw Error(ErrorCode::JudgeParseFailure, item_id + ": " + key + " is not an integer: '" + value + "'");
    }
    const int score = value.size() > 2 ? 99 : std::stoi(value);
    if (score < 1 || score > 5) {
      throw Error(ErrorCode::JudgeParseFailure, item_id + ": " + key + "=" + value + " is outside 1..5");
    }
    card.scores[idx] = score;
    seen[idx] = true;
  }
  for (Dimension d : kAllDimensions) {
    if (!seen[static_cast<std::size_t>(d)]) {
      throw Error(ErrorCode::JudgeParseFailure, item_id + ": judge reply lacks " + dimension_key(d));
    }
  }
  return card;
}

JudgeScorecard score_response(const std::string& report_text, const std::string& question, const std::string& answer,
                              Gateway& gw, const BackendRef& judge, const std::string& item_id,
                              const TemplateLibrary& lib) {
  ChatRequest req;
  req.backend_id = judge.backend_id;
  req.model_name = judge.model_name;
  req.temperature = kJudgeTemperature;
  req.max_output_units = 512;
  req.request_tag = "judge/" + item_id;
  req.messages = {{"user", lib.render(TemplateId::JudgeRubric,
                                     {{"report", report_text.empty() ? std::string("(no report)") : report_text},
                                      {"question", question},
                                      {"answer", answer.empty() ? std::string("(empty answer)") : answer}})}};
  const auto first = gw.send_chat(req);
  JudgeScorecard card;
  try {
    card = parse_judge_output(first.content, item_id);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::JudgeParseFailure) throw;
    req.messages.push_back({"assistant", first.content});
    req.messages.push_back({"user", lib.get(TemplateId::JudgeReask).body});
    req.request_tag += "/reask";
    const auto second = gw.send_chat(req);
    card = parse_judge_output(second.content, item_id);
  }
  card.judge_backend = judge.backend_id;
  return card;
}

// ---------------------------------------------------------------------------

std::string AggregateRow::display_overall() const { return format_fixed(round_half_away(overall, 1), 1); }

json to_json(const AggregateRow& r) {
  json means = json::object();
  json labels = json::object();
  for (Dimension d : kAllDimensions) {
    means[dimension_key(d)] = r.mean(d);
    labels[dimension_key(d)] = dimension_display_name(d);
  }
  return {{"system", r.system_name},
          {"dimension_means", means},
          {"dimension_labels", labels},
          {"overall", r.overall},
          {"overall_display", r.display_overall()},
          {"n_items", r.n_items}};
}

AggregateRow aggregate_means(const std::string& system_name, const std::array<double, 4>& means, std::size_t n_items) {
  AggregateRow row;
  row.system_name = system_name;
  row.means = means;
  row.overall = (means[0] + means[1] + means[2] + means[3]) / 4.0;
  row.n_items = n_items;
  return row;
}

AggregateRow aggregate(const std::vector<JudgeScorecard>& cards, const std::string& system_name) {
  if (cards.empty()) throw Error(ErrorCode::EmptyInput, system_name + ": no scorecards to aggregate");
  std::array<double, 4> sums{};
  for (const auto& c : cards)
    for (std::size_t i = 0; i < 4; ++i) sums[i] += c.scores[i];
  const auto n = static_cast<double>(cards.size());
  for (auto& s : sums) s /= n;
  return aggregate_means(system_name, sums, cards.size());
}

PrintedAverageCheck check_printed_average(const AggregateRow& row, double printed, int printed_decimals) {
  PrintedAverageCheck c;
  c.full = row.overall;
  c.printed = printed;
  c.displayed = round_half_away(row.overall, printed_decimals);
  c.explained = std::abs(c.displayed - printed) < 1e-9;
  c.within_tenth = std::abs(round_half_away(row.overall, 1) - printed) <= 0.1 + 1e-9;
  return c;
}

// ---------------------------------------------------------------------------

std::string normalize_answer(std::string_view s) {
  std::string cleaned;
  cleaned.reserve(s.size());
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (std::ispunct(u)) continue;
    cleaned.push_back(static_cast<char>(std::tolower(u)));
  }
  std::istringstream words(cleaned);
  std::string w, out;
  while (words >> w) {
    if (w == "a" || w == "an" || w == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

int exact_match(std::string_view pred, std::string_view gold) {
  return normalize_answer(pred) == normalize_answer(gold) ? 1 : 0;
}

EmResult score_em(const std::vector<std::string>& preds, const std::vector<std::string>& golds) {
  if (preds.size() != golds.size()) {
    throw Error(ErrorCode::InvalidArgument, "prediction count " + std::to_string(preds.size()) +
                                                " differs from gold count " + std::to_string(golds.size()));
  }
  if (preds.empty()) throw Error(ErrorCode::EmptyInput, "no prediction/gold pairs");
  EmResult r;
  r.n = preds.size();
  for (std::size_t i = 0; i < preds.size(); ++i) r.matches += static_cast<std::size_t>(exact_match(preds[i], golds[i]));
  r.em = static_cast<double>(r.matches) / static_cast<double>(r.n);
  return r;
}

std::vector<QaPair> load_qa_pairs(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  const std::string head = trim(std::string_view(content).substr(0, 64));
  std::vector<QaPair> out;
  if (!head.empty() && head.front() == '[') {
    try {
      for (const auto& item : json::parse(content)) {
        QaPair p;
        p.question = item.at("question").get<std::string>();
        const auto& a = item.contains("answer") ? item.at("answer") : item.at("answers");
        p.answer = a.is_array() ? a.at(0).get<std::string>() : a.get<std::string>();
        out.push_back(std::move(p));
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseFailure, path.string() + ": " + e.what());
    }
    return out;
  }
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::ParseFailure, path.string() + ":" + std::to_string(lineno) + ": expected question<TAB>answer");
    }
    QaPair p{trim(std::string_view(line).substr(0, tab)), trim(std::string_view(line).substr(tab + 1))};
    if (out.empty() && lineno == 1 && p.question == "question" && p.answer == "answer") continue;
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------

VariantResult judge_answers(const std::vector<EvalItem>& items, const std::vector<AnswerItem>& answers,
                            const std::string& system_name, Gateway& gw, const BackendRef& judge, int parallelism,
                            double max_failure_rate, const TemplateLibrary& lib) {
  if (items.empty()) throw Error(ErrorCode::EmptyInput, system_name + ": empty test set");
  if (answers.size() != items.size()) throw Error(ErrorCode::InvalidArgument, "one answer per item is required");
  std::vector<std::optional<JudgeScorecard>> slots(items.size());
  std::vector<std::string> errors(items.size());
  parallel_for(items.size(), parallelism, [&](std::size_t i) {
    if (!answers[i].ok) {
      errors[i] = items[i].item_id + ": student failed: " + answers[i].error;
      return;
    }
    try {
      slots[i] = score_response(items[i].report_text, items[i].question, answers[i].answer, gw, judge,
                                items[i].item_id, lib);
    } catch (const std::exception& e) {
      errors[i] = items[i].item_id + ": " + e.what();
    }
  });

  VariantResult res;
  res.answers = answers;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (slots[i]) {
      res.cards.push_back(*slots[i]);
    } else {
      ++res.failures;
      res.errors.push_back(errors[i]);
    }
  }
  if (static_cast<double>(res.failures) > max_failure_rate * static_cast<double>(items.size())) {
    throw Error(ErrorCode::AblationAborted, system_name + ": " + std::to_string(res.failures) + " of " +
                                                std::to_string(items.size()) + " items failed; first: " +
                                                res.errors.front());
  }
  res.row = aggregate(res.cards, system_name);
  return res;
}

std::vector<VariantResult> run_ablation(const std::vector<EvalItem>& testset, const std::vector<TemplateId>& variants,
                                        Gateway& gw, const BackendRef& student, const BackendRef& judge,
                                        const AblationOptions& opts, const TemplateLibrary& lib) {
  if (testset.empty()) throw Error(ErrorCode::EmptyInput, "ablation needs a nonempty test set");
  for (TemplateId v : variants) {
    if (v != TemplateId::PlainQA && v != TemplateId::CoTOnly && v != TemplateId::FewShotCoT) {
      throw Error(ErrorCode::InvalidArgument, std::string("not an ablation variant: ") + template_id_name(v));
    }
  }
  std::vector<QaJob> jobs;
  for (const auto& item : testset) jobs.push_back({item.item_id, item.report_text, item.question});
  std::vector<VariantResult> out;
  for (TemplateId v : variants) {
    auto answers = answer_questions(jobs, v, gw, student, opts.student_temperature, opts.parallelism, lib);
    auto res = judge_answers(testset, answers, template_id_name(v), gw, judge, opts.parallelism,
                             opts.max_failure_rate, lib);
    res.variant = v;
    out.push_back(std::move(res));
  }
  return out;
}

void persist_eval(const std::filesystem::path& eval_root, const std::string& run_id,
                  const std::vector<VariantResult>& results, const json& meta) {
  const auto dir = eval_root / run_id;
  std::string lines;
  json rows = json::array();
  for (const auto& r : results) {
    for (const auto& c : r.cards) {
      json j = to_json(c);
      j["system"] = r.row.system_name;
      lines += j.dump();
      lines += '\n';
    }
    json row = to_json(r.row);
    row["failures"] = r.failures;
    row["template_id"] = template_id_name(r.variant);
    rows.push_back(row);
  }
  write_file_atomic(dir / "scorecards.jsonl", lines);
  json summary = {{"run_id", run_id}, {"rows", rows}, {"meta", meta}};
  write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");
}

}  // namespace sleepcot
