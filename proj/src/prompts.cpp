#include "sleepcot/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "sleepcot/error.hpp"
#include "sleepcot/util.hpp"

namespace sleepcot {

namespace prompts::detail {
const std::map<std::string, std::string>& embedded_templates();
}

namespace {

constexpr std::pair<TemplateId, const char*> kIdNames[] = {
    {TemplateId::Pr1, "Pr1"},
    {TemplateId::Pr1Repair, "Pr1Repair"},
    {TemplateId::Pr2, "Pr2"},
    {TemplateId::Pr3, "Pr3"},
    {TemplateId::FewShotCoT, "FewShotCoT"},
    {TemplateId::CoTOnly, "CoTOnly"},
    {TemplateId::PlainQA, "PlainQA"},
    {TemplateId::ExemplarDirectLookup, "ExemplarDirectLookup"},
    {TemplateId::ExemplarGlobalSummary, "ExemplarGlobalSummary"},
    {TemplateId::ExemplarOutOfContext, "ExemplarOutOfContext"},
    {TemplateId::JudgeRubric, "JudgeRubric"},
    {TemplateId::JudgeReask, "JudgeReask"},
    {TemplateId::KnowledgeQuestions, "KnowledgeQuestions"},
    {TemplateId::KnowledgeAnswer, "KnowledgeAnswer"},
};

// Placeholder names found in `body`, in order of appearance.
std::vector<std::string> placeholders_in(std::string_view body) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = body.find("{{", pos)) != std::string_view::npos) {
    const auto end = body.find("}}", pos + 2);
    if (end == std::string_view::npos) break;
    out.emplace_back(body.substr(pos + 2, end - pos - 2));
    pos = end + 2;
  }
  return out;
}

}  // namespace

const char* template_id_name(TemplateId id) noexcept {
  for (const auto& [k, name] : kIdNames)
    if (k == id) return name;
  return "?";
}

std::optional<TemplateId> parse_template_id(std::string_view name) {
  for (const auto& [k, n] : kIdNames)
    if (name == n) return k;
  return std::nullopt;
}

TemplateId exemplar_template(QuestionCategory c) noexcept {
  switch (c) {
    case QuestionCategory::DirectLookup: return TemplateId::ExemplarDirectLookup;
    case QuestionCategory::GlobalSummary: return TemplateId::ExemplarGlobalSummary;
    case QuestionCategory::OutOfContext: return TemplateId::ExemplarOutOfContext;
  }
  return TemplateId::ExemplarDirectLookup;
}

std::string PromptTemplate::render(const Bindings& b) const {
  for (const auto& name : required) {
    auto it = b.find(name);
    if (it == b.end() || it->second.empty()) {
      throw Error(ErrorCode::MissingPlaceholder,
                  std::string(template_id_name(id)) + ": placeholder '" + name + "' is unbound or empty");
    }
  }
  std::string out;
  out.reserve(body.size() + 256);
  std::size_t pos = 0;
  while (true) {
    const auto open = body.find("{{", pos);
    if (open == std::string::npos) break;
    const auto close = body.find("}}", open + 2);
    if (close == std::string::npos) break;
    const std::string name = body.substr(open + 2, close - open - 2);
    auto it = b.find(name);
    if (it == b.end()) {
      throw Error(ErrorCode::TemplateError,
                  std::string(template_id_name(id)) + ": no binding for '{{" + name + "}}'");
    }
    out.append(body, pos, open - pos);
    out += it->second;
    pos = close + 2;
  }
  out.append(body, pos, std::string::npos);
  return out;
}

TemplateLibrary TemplateLibrary::from_files(const std::map<std::string, std::string>& files,
                                            const std::string& origin) {
  auto mf = files.find("manifest");
  if (mf == files.end()) throw Error(ErrorCode::TemplateError, origin + ": no manifest");
  TemplateLibrary lib;
  std::istringstream in(mf->second);
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream cols(t);
    std::string id_name, file, req;
    cols >> id_name >> file >> req;
    auto id = parse_template_id(id_name);
    if (!id || file.empty() || req.empty()) {
      throw Error(ErrorCode::TemplateError, origin + ": bad manifest line '" + t + "'");
    }
    auto body = files.find(file);
    if (body == files.end()) throw Error(ErrorCode::TemplateError, origin + ": missing template file " + file);
    PromptTemplate pt{*id, file, body->second, {}};
    if (req != "-") {
      for (const auto& r : split(req, ',')) pt.required.insert(trim(r));
    }
    const auto present = placeholders_in(pt.body);
    for (const auto& r : pt.required) {
      if (std::find(present.begin(), present.end(), r) == present.end()) {
        throw Error(ErrorCode::TemplateError, origin + ": " + file + " does not contain {{" + r + "}}");
      }
    }
    lib.templates_[*id] = std::move(pt);
  }
  for (const auto& [id, name] : kIdNames) {
    if (!lib.templates_.count(id)) throw Error(ErrorCode::TemplateError, origin + ": manifest lacks " + name);
  }
  return lib;
}

const TemplateLibrary& TemplateLibrary::builtin() {
  static const TemplateLibrary lib = from_files(prompts::detail::embedded_templates(), "<builtin>");
  return lib;
}

TemplateLibrary TemplateLibrary::load(const std::filesystem::path& dir) {
  std::map<std::string, std::string> files;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file()) files[entry.path().filename().string()] = read_file(entry.path());
  }
  if (ec) throw Error(ErrorCode::IoFailure, "cannot list template dir " + dir.string() + ": " + ec.message());
  return from_files(files, dir.string());
}

const PromptTemplate& TemplateLibrary::get(TemplateId id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) throw Error(ErrorCode::TemplateError, std::string("unknown template ") + template_id_name(id));
  return it->second;
}

std::string TemplateLibrary::fingerprint() const {
  std::string all;
  for (const auto& [id, t] : templates_) {
    all += t.file;
    all += '\0';
    all += t.body;
    all += '\0';
  }
  return sha256_hex(all);
}

// ---------------------------------------------------------------------------

double DialogueState::count_units(std::string_view text) {
  std::size_t words = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return static_cast<double>(words) * 1.3;
}

double DialogueState::units() const {
  double total = 0.0;
  for (const auto& t : turns) total += count_units(t.content);
  return total;
}

void DialogueState::add_assistant(std::string content) {
  turns.push_back({"assistant", std::move(content)});
  enforce_budget();
}

void DialogueState::enforce_budget() {
  const std::size_t first = (!turns.empty() && turns.front().role == "system") ? 1 : 0;
  const auto budget = static_cast<double>(token_budget);
  // The newest exchange (user turn plus any reply) is never evicted.
  std::size_t newest = turns.size();
  if (newest > first) {
    --newest;
    if (turns[newest].role == "assistant" && newest > first && turns[newest - 1].role == "user") --newest;
  }
  while (units() > budget && newest > first) {
    const std::size_t drop = (first + 1 < newest && turns[first + 1].role == "assistant") ? 2 : 1;
    turns.erase(turns.begin() + static_cast<std::ptrdiff_t>(first),
                turns.begin() + static_cast<std::ptrdiff_t>(first + drop));
    newest -= drop;
  }
  if (units() > budget) {
    throw Error(ErrorCode::TemplateError, "dialogue turn of " + format_fixed(units(), 0) +
                                              " units exceeds the budget of " + std::to_string(token_budget));
  }
}

std::string render_pr1(const SleepReport& exemplar, const PhysioRuleSet& rules, int count,
                       const TemplateLibrary& lib) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "Pr1 count must be at least 1");
  return lib.render(TemplateId::Pr1, {{"exemplar", exemplar.rendered_text.empty() ? render_report_text(exemplar, rules)
                                                                                   : exemplar.rendered_text},
                                      {"nights", std::to_string(exemplar.nights)},
                                      {"count", std::to_string(count)},
                                      {"rules", rules.describe()}});
}

std::string render_pr1_repair(const SleepReport& rep, const std::vector<Violation>& violations,
                              const TemplateLibrary& lib) {
  std::string list;
  for (const auto& v : violations) list += "- " + v.to_string() + "\n";
  return lib.render(TemplateId::Pr1Repair, {{"report", rep.rendered_text},
                                            {"violations", list},
                                            {"nights", std::to_string(std::max(rep.nights, 1))}});
}

std::string render_pr2(const SleepReport& rep, const std::string& description, const TemplateLibrary& lib) {
  const std::string text = rep.rendered_text.empty() ? render_report_text(rep) : rep.rendered_text;
  return lib.render(TemplateId::Pr2, {{"report", text}, {"description", description}});
}

std::pair<std::string, DialogueState> render_pr3(const SleepReport& rep, int n_questions, DialogueState dialogue,
                                                 const TemplateLibrary& lib) {
  if (n_questions < 1) throw Error(ErrorCode::InvalidArgument, "Pr3 needs at least one question");
  const std::string text = rep.rendered_text.empty() ? render_report_text(rep) : rep.rendered_text;
  std::string prompt = lib.render(TemplateId::Pr3, {{"n_questions", std::to_string(n_questions)}, {"report", text}});
  dialogue.turns.push_back({"user", prompt});
  dialogue.enforce_budget();
  return {std::move(prompt), std::move(dialogue)};
}

std::string render_qa(TemplateId variant, const std::string& report_text, const std::string& question,
                      const TemplateLibrary& lib) {
  if (trim(question).empty()) throw Error(ErrorCode::MissingPlaceholder, "question must be nonempty");
  Bindings b{{"report", report_text}, {"question", question}};
  switch (variant) {
    case TemplateId::PlainQA:
    case TemplateId::CoTOnly:
      break;
    case TemplateId::FewShotCoT: {
      std::string ex;
      for (auto c : kAllCategories) {
        if (!ex.empty()) ex += "\n";
        ex += lib.get(exemplar_template(c)).body;
      }
      b["exemplars"] = ex;
      break;
    }
    default:
      throw Error(ErrorCode::InvalidArgument,
                  std::string("not a question-answer variant: ") + template_id_name(variant));
  }
  return lib.render(variant, b);
}

std::string render_fewshot_cot(const SleepReport& rep, const std::string& question, const TemplateLibrary& lib) {
  return render_qa(TemplateId::FewShotCoT, rep.rendered_text.empty() ? render_report_text(rep) : rep.rendered_text,
                   question, lib);
}

bool contains_numeric_value(std::string_view text) {
  bool in_word = false;  // inside a token that started with a letter
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalpha(u) || c == '_') {
      in_word = true;
    } else if (std::isdigit(u)) {
      if (!in_word) return true;
    } else {
      in_word = false;
    }
  }
  return false;
}

ParsedQuestions parse_questions(std::string_view text) {
  ParsedQuestions out;
  for (const auto& raw : split(text, '\n')) {
    const std::string line = trim(raw);
    if (line.empty()) continue;
    bool ok = line.rfind("Question ", 0) == 0;
    std::size_t i = 9;
    if (ok) {
      const std::size_t digits_start = i;
      while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
      ok = i > digits_start && i < line.size() && line[i] == ':';
    }
    if (!ok) {
      ++out.discarded;
      continue;
    }
    std::string q = trim(std::string_view(line).substr(i + 1));
    if (q.empty()) {
      ++out.discarded;
      continue;
    }
    if (contains_numeric_value(q)) {
      ++out.numeric_dropped;
      continue;
    }
    out.questions.push_back(std::move(q));
  }
  return out;
}

}  // namespace sleepcot
