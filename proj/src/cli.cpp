#include "sleepcot/cli.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "sleepcot/assessor.hpp"
#include "sleepcot/dataset.hpp"
#include "sleepcot/error.hpp"
#include "sleepcot/judge.hpp"
#include "sleepcot/mock_pipeline.hpp"
#include "sleepcot/rng.hpp"
#include "sleepcot/workflow.hpp"

namespace sleepcot {

using nlohmann::json;
namespace fs = std::filesystem;

void register_configured_backends(Gateway& gw, const KeyValueConfig& cfg) {
  std::set<std::string> ids{"mock", "mock-alt"};
  for (const auto& key : cfg.keys_with_prefix("backend.")) {
    const auto parts = split(key, '.');
    if (parts.size() == 3) ids.insert(parts[1]);
  }
  for (const auto& id : ids) {
    const std::string p = "backend." + id + ".";
    const std::string type = cfg.get_string(p + "type", id == "mock-alt" ? "mock-alt" : "mock");
    const std::string model = cfg.get_string(p + "model_name", type == "http" ? "" : id + "-model");
    if (type == "mock" || type == "mock-alt") {
      gw.register_backend(make_pipeline_mock(id, type == "mock-alt"), model);
    } else if (type == "http") {
      HttpBackendConfig hc;
      hc.id = id;
      hc.base_url = cfg.get_string(p + "base_url", "");
      hc.model_name = model;
      hc.auth_env_var = cfg.get_string(p + "auth_env_var", "");
      hc.timeout_s = cfg.get_double(p + "timeout_s", 60.0);
      if (hc.base_url.empty() || hc.model_name.empty()) {
        throw Error(ErrorCode::ConfigError, "backend " + id + " needs base_url and model_name");
      }
      gw.register_backend(std::make_shared<HttpBackend>(hc), model);
    } else {
      throw Error(ErrorCode::ConfigError, "backend " + id + " has unknown type '" + type + "'");
    }
  }
}

std::vector<SleepReport> load_reports(const fs::path& path) {
  std::vector<SleepReport> out;
  auto load_json = [&](const fs::path& p) {
    try {
      const json j = json::parse(read_file(p));
      if (j.is_array()) {
        for (const auto& item : j) out.push_back(item.get<SleepReport>());
      } else {
        out.push_back(j.get<SleepReport>());
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseFailure, p.string() + ": " + e.what());
    }
  };
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.path().extension() == ".json" && entry.path().filename() != "manifest.json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) load_json(f);
  } else if (path.extension() == ".txt") {
    out.push_back(parse_report_text(read_file(path)));
  } else {
    load_json(path);
  }
  if (out.empty()) throw Error(ErrorCode::EmptyInput, "no reports found in " + path.string());
  return out;
}

namespace {

struct Globals {
  std::vector<std::string> config_files;
  std::uint64_t seed = 42;
  bool dry_run = false;
  bool no_cache = false;
  std::string cache_dir;
  int parallelism = 8;
  std::string teacher = "mock";
  std::string student = "mock";
  std::string judge = "mock";
  std::string holdout_writer = "mock-alt";
};

// Flag value wins; otherwise the config key; otherwise the default already in `v`.
template <class T>
void settle(const CLI::Option* opt, const KeyValueConfig& cfg, const std::string& key, T& v) {
  if (opt->count() > 0 || !cfg.has(key)) return;
  if constexpr (std::is_same_v<T, std::string>) {
    v = *cfg.get(key);
  } else if constexpr (std::is_same_v<T, bool>) {
    const std::string s = *cfg.get(key);
    v = s == "true" || s == "1" || s == "yes";
  } else if constexpr (std::is_floating_point_v<T>) {
    v = static_cast<T>(cfg.get_double(key, static_cast<double>(v)));
  } else {
    v = static_cast<T>(cfg.get_int(key, static_cast<long long>(v)));
  }
}

std::vector<std::size_t> parse_counts(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& part : split(text, ',')) {
    const std::string t = trim(part);
    if (t.empty()) continue;
    if (!std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      throw Error(ErrorCode::InvalidArgument, "not a count: '" + t + "'");
    out.push_back(std::stoull(t));
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "empty count list");
  return out;
}

TemplateId parse_variant(const std::string& name) {
  if (name == "fewshot" || name == "few-shot") return TemplateId::FewShotCoT;
  if (name == "cot") return TemplateId::CoTOnly;
  if (name == "plain") return TemplateId::PlainQA;
  if (auto id = parse_template_id(name)) {
    if (*id == TemplateId::FewShotCoT || *id == TemplateId::CoTOnly || *id == TemplateId::PlainQA) return *id;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown prompt variant '" + name + "' (fewshot, cot, plain)");
}

std::string table(const std::vector<AggregateRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(20) << "System";
  for (Dimension d : kAllDimensions) os << " | " << dimension_display_name(d);
  os << " | Average\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(20) << r.system_name;
    for (Dimension d : kAllDimensions) {
      os << " | " << std::setw(static_cast<int>(std::string(dimension_display_name(d)).size()))
         << format_fixed(r.mean(d), 2);
    }
    os << " | " << r.display_overall() << " (" << format_fixed(r.overall, 3) << ")\n";
  }
  return os.str();
}

std::vector<std::string> load_predictions(const fs::path& path) {
  const std::string content = read_file(path);
  const std::string head = trim(std::string_view(content).substr(0, 16));
  std::vector<std::string> out;
  if (!head.empty() && head.front() == '[') {
    try {
      for (const auto& v : json::parse(content)) out.push_back(v.get<std::string>());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseFailure, path.string() + ": " + e.what());
    }
    return out;
  }
  std::istringstream in(content);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(const std::vector<std::string>& args);

 private:
  void load_config();
  std::unique_ptr<Gateway> make_gateway() const;
  BackendRef ref(Gateway& gw, const std::string& id) const;
  std::uint64_t stream_seed(const std::string& name) const;
  SplitPlan make_plan() const;

  void synth();
  void assess_cmd();
  void suggest();
  void questions();
  void build_dataset();
  void sweep();
  json eval_meta() const;
  void evaluate();
  void ablate();
  void em();

  std::ostream& out_;
  std::ostream& err_;
  CLI::App app_{"SleepCoT pipeline: synthetic sleep reports, instruction data and evaluation", "sleepcot"};
  Globals g_;
  KeyValueConfig cfg_;
  std::map<std::string, CLI::Option*> opts_;

  std::string out_dir_ = "out";
  std::string reports_path_;
  std::string data_path_;
  std::string out_file_;
  std::string mode_ = "programmatic";
  std::string variant_ = "fewshot";
  std::string system_name_;
  std::string run_id_;
  std::string eval_dir_ = "eval";
  std::string counts_ = "4000,6000,8000,10000,12000";
  std::string pairs_path_;
  std::string predictions_path_;
  std::size_t count_ = 100;
  std::size_t n_reports_ = 100;
  std::size_t limit_ = 0;
  int per_report_ = 150;
  int questions_per_report_ = 160;
  int knowledge_pool_ = 900;
  bool as_json_ = false;
  std::size_t sug_train_ = 80, sug_test_ = 20, pqa_train_ = 12000, pqa_test_ = 3000, kqa_train_ = 600, kqa_test_ = 200,
              holdout_ = 100;
};

void Runner::load_config() {
  for (const auto& f : g_.config_files) {
    const auto c = KeyValueConfig::load(f);
    for (const auto& [k, v] : c.values()) cfg_.set(k, v);
  }
  settle(opts_["seed"], cfg_, "seed", g_.seed);
  settle(opts_["cache-dir"], cfg_, "gateway.cache_dir", g_.cache_dir);
  settle(opts_["parallelism"], cfg_, "gateway.parallelism", g_.parallelism);
  settle(opts_["teacher"], cfg_, "role.teacher", g_.teacher);
  settle(opts_["student"], cfg_, "role.student", g_.student);
  settle(opts_["judge"], cfg_, "role.judge", g_.judge);
  settle(opts_["holdout-writer"], cfg_, "role.holdout_writer", g_.holdout_writer);
  settle(opts_["count"], cfg_, "synth.count", count_);
  settle(opts_["mode"], cfg_, "synth.mode", mode_);
  settle(opts_["reports-n"], cfg_, "dataset.reports", n_reports_);
  settle(opts_["questions-per-report"], cfg_, "dataset.questions_per_report", questions_per_report_);
  settle(opts_["knowledge-pool"], cfg_, "dataset.knowledge_pool", knowledge_pool_);
  settle(opts_["suggestions"], cfg_, "plan.suggestions.train", sug_train_);
  settle(opts_["suggestions-test"], cfg_, "plan.suggestions.test", sug_test_);
  settle(opts_["personal-qa"], cfg_, "plan.personal_qa.train", pqa_train_);
  settle(opts_["personal-qa-test"], cfg_, "plan.personal_qa.test", pqa_test_);
  settle(opts_["knowledge-qa"], cfg_, "plan.knowledge_qa.train", kqa_train_);
  settle(opts_["knowledge-qa-test"], cfg_, "plan.knowledge_qa.test", kqa_test_);
  settle(opts_["holdout"], cfg_, "plan.holdout.external", holdout_);
  settle(opts_["counts"], cfg_, "sweep.counts", counts_);
  if (g_.parallelism < 1) throw Error(ErrorCode::InvalidArgument, "parallelism must be at least 1");
}

std::unique_ptr<Gateway> Runner::make_gateway() const {
  GatewayOptions o;
  o.cache_dir = g_.cache_dir;
  o.read_cache = !g_.no_cache;
  o.max_attempts = static_cast<int>(cfg_.get_int("gateway.max_attempts", 5));
  o.base_delay = std::chrono::milliseconds(cfg_.get_int("gateway.base_delay_ms", 500));
  auto gw = std::make_unique<Gateway>(o);
  register_configured_backends(*gw, cfg_);
  return gw;
}

BackendRef Runner::ref(Gateway& gw, const std::string& id) const {
  if (!gw.has_backend(id)) throw Error(ErrorCode::UnknownBackend, "backend '" + id + "' is not configured");
  return {id, gw.default_model(id)};
}

std::uint64_t Runner::stream_seed(const std::string& name) const {
  const std::string key = "seed." + name;
  if (cfg_.has(key)) return static_cast<std::uint64_t>(cfg_.get_int(key, 0));
  return derive_seed(g_.seed, name);
}

SplitPlan Runner::make_plan() const {
  SplitPlan plan = SplitPlan::standard(stream_seed("splits"));
  plan.counts[TaskType::SuggestionGeneration] = {sug_train_, sug_test_};
  plan.counts[TaskType::PersonalQA] = {pqa_train_, pqa_test_};
  plan.counts[TaskType::KnowledgeQA] = {kqa_train_, kqa_test_};
  plan.holdouts.clear();
  if (holdout_ > 0) plan.holdouts["external"] = holdout_;
  return plan;
}

void Runner::synth() {
  const auto rules = PhysioRuleSet::from_config(cfg_);
  const auto seed = stream_seed("reports");
  const fs::path dir = fs::path(out_dir_) / "reports";
  if (g_.dry_run) {
    out_ << "dry-run: would synthesize " << count_ << " reports (" << mode_ << ", seed " << seed << ") into " << dir.string()
         << "\n";
    return;
  }
  std::vector<SleepReport> reports;
  json extra = json::object();
  if (mode_ == "programmatic") {
    reports = synthesize_reports(count_, seed, rules, g_.parallelism);
  } else if (mode_ == "llm") {
    auto gwp = make_gateway();
    Gateway& gw = *gwp;
    LlmSynthesisOptions lo;
    lo.parallelism = g_.parallelism;
    const auto res = llm_generate_reports(exemplar_report(), rules, static_cast<int>(count_), gw, ref(gw, g_.teacher), lo);
    reports = res.reports;
    extra = {{"parse_failures", res.parse_failures}, {"dropped_invalid", res.dropped_invalid}, {"backend", g_.teacher}};
    for (const auto& line : res.log) err_ << "synth: " << line << "\n";
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown synthesis mode '" + mode_ + "' (programmatic, llm)");
  }
  std::size_t violations = 0;
  json files = json::array();
  for (const auto& r : reports) {
    violations += validate_report(r, rules).size();
    json j = r;
    const std::string body = j.dump(2) + "\n";
    write_file_atomic(dir / (r.report_id + ".json"), body);
    write_file_atomic(dir / (r.report_id + ".txt"), r.rendered_text);
    files.push_back({{"id", r.report_id}, {"sha256", sha256_hex(body)}});
  }
  json manifest = {{"seed", seed}, {"mode", mode_}, {"count", reports.size()}, {"violations", violations},
                   {"reports", files}};
  for (const auto& [k, v] : extra.items()) manifest[k] = v;
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  out_ << "synth: " << reports.size() << " reports, " << violations << " rule violations -> " << dir.string() << "\n";
  if (reports.size() < count_) throw Error(ErrorCode::InsufficientPool, "only " + std::to_string(reports.size()) + " of " +
                                                                            std::to_string(count_) + " reports accepted");
}

void Runner::assess_cmd() {
  const auto thresholds = AssessmentThresholds::from_config(cfg_);
  const auto reports = load_reports(reports_path_);
  for (const auto& r : reports) {
    const auto a = assess(r, thresholds);
    const std::string description = render_description(a, r);
    if (as_json_) {
      json j = {{"report_id", r.report_id}, {"assessment", a}, {"description", description}};
      out_ << j.dump() << "\n";
    } else {
      out_ << "== " << r.report_id << "\n" << description << "\n";
    }
  }
}

void Runner::suggest() {
  const auto reports = load_reports(reports_path_);
  if (out_file_.empty()) out_file_ = (fs::path(out_dir_) / "suggestions.jsonl").string();
  if (g_.dry_run) {
    out_ << "dry-run: would request " << reports.size() << " suggestions from " << g_.teacher << " into " << out_file_
         << "\n";
    return;
  }
  auto gwp = make_gateway();
  Gateway& gw = *gwp;
  const auto items =
      generate_suggestions(reports, AssessmentThresholds::from_config(cfg_), gw, ref(gw, g_.teacher), g_.parallelism);
  std::string body;
  std::size_t failed = 0;
  for (const auto& s : items) {
    if (!s.ok) ++failed;
    json j = {{"report_id", s.report_id}, {"ok", s.ok}, {"description", s.description}, {"suggestion", s.suggestion},
              {"error", s.error}, {"backend_id", s.meta.backend_id}, {"cache_key", s.meta.cache_key}};
    body += j.dump() + "\n";
  }
  write_file_atomic(out_file_, body);
  out_ << "suggest: " << items.size() - failed << " ok, " << failed << " failed -> " << out_file_ << "\n";
}

void Runner::questions() {
  const auto reports = load_reports(reports_path_);
  if (out_file_.empty()) out_file_ = (fs::path(out_dir_) / "questions.jsonl").string();
  if (g_.dry_run) {
    out_ << "dry-run: would ask " << g_.teacher << " for " << per_report_ << " questions on each of " << reports.size()
         << " reports into " << out_file_ << "\n";
    return;
  }
  auto gwp = make_gateway();
  Gateway& gw = *gwp;
  const auto sets = generate_questions(reports, per_report_, gw, ref(gw, g_.teacher));
  std::string body;
  std::size_t total = 0;
  for (const auto& s : sets) {
    total += s.questions.size();
    json j = {{"report_id", s.report_id}, {"questions", s.questions}, {"discarded", s.discarded},
              {"numeric_dropped", s.numeric_dropped}, {"error", s.error}};
    body += j.dump() + "\n";
  }
  write_file_atomic(out_file_, body);
  out_ << "questions: " << total << " questions over " << sets.size() << " reports -> " << out_file_ << "\n";
}

void Runner::build_dataset() {
  const auto plan = make_plan();
  const fs::path dir = out_dir_;
  if (g_.dry_run) {
    out_ << "dry-run: plan seed " << plan.seed << "\n";
    for (TaskType t : kAllTasks)
      out_ << "  " << task_key(t) << ": train " << plan.of(t).train << ", test " << plan.of(t).test << "\n";
    for (const auto& [name, n] : plan.holdouts) out_ << "  holdout " << name << ": " << n << "\n";
    out_ << "  reports: " << n_reports_ << " (seed " << stream_seed("reports") << ")\n";
    out_ << "  would write train.jsonl, test.jsonl, train_config.json, manifest.json into " << dir.string() << "\n";
    return;
  }
  auto gwp = make_gateway();
  Gateway& gw = *gwp;
  CollectOptions co;
  co.questions_per_report = questions_per_report_;
  co.knowledge_questions = knowledge_pool_;
  co.parallelism = g_.parallelism;
  co.teacher = ref(gw, g_.teacher);
  if (!plan.holdouts.empty()) co.holdout_writer = ref(gw, g_.holdout_writer);
  const auto reports = synthesize_reports(n_reports_, stream_seed("reports"), PhysioRuleSet::from_config(cfg_),
                                          g_.parallelism);
  CollectStats st;
  const auto inputs = collect_corpus_inputs(reports, gw, AssessmentThresholds::from_config(cfg_), co, &st,
                                            [&](const std::string& m) { err_ << "build-dataset: " << m << "\n"; });
  const auto splits = build_corpus(inputs, plan);
  json extra = {{"reports_seed", stream_seed("reports")},
                {"backends", {{"teacher", g_.teacher}, {"holdout_writer", g_.holdout_writer}}},
                {"templates_fingerprint", TemplateLibrary::builtin().fingerprint()},
                {"collect", {{"answers_failed", st.answers_failed},
                             {"suggestions_failed", st.suggestions_failed},
                             {"questions_discarded", st.questions_discarded},
                             {"questions_numeric_dropped", st.questions_numeric_dropped}}}};
  emit_artifacts(splits, dir, extra);
  out_ << "build-dataset: train " << splits.train.size() << ", test " << splits.test.size();
  for (const auto& [name, recs] : splits.holdouts) out_ << ", holdout " << name << " " << recs.size();
  out_ << " -> " << dir.string() << "\n";
}

void Runner::sweep() {
  const auto counts = parse_counts(counts_);
  const auto base = make_plan();
  const auto plans = sweep_plans(base, counts);
  if (g_.dry_run) {
    for (const auto& p : plans)
      out_ << "dry-run: " << p.name << " personal_qa train " << p.of(TaskType::PersonalQA).train << " -> "
           << (fs::path(out_dir_) / p.name).string() << "\n";
    return;
  }
  auto gwp = make_gateway();
  Gateway& gw = *gwp;
  CollectOptions co;
  co.questions_per_report = questions_per_report_;
  co.knowledge_questions = knowledge_pool_;
  co.parallelism = g_.parallelism;
  co.teacher = ref(gw, g_.teacher);
  if (!base.holdouts.empty()) co.holdout_writer = ref(gw, g_.holdout_writer);
  const auto reports = synthesize_reports(n_reports_, stream_seed("reports"), PhysioRuleSet::from_config(cfg_),
                                          g_.parallelism);
  const auto inputs = collect_corpus_inputs(reports, gw, AssessmentThresholds::from_config(cfg_), co);
  json summary = json::array();
  std::set<std::string> previous;
  bool nested = true;
  for (const auto& p : plans) {
    const auto splits = build_corpus(inputs, p);
    emit_artifacts(splits, fs::path(out_dir_) / p.name, {{"plan", p.name}});
    std::set<std::string> ids;
    for (const auto& r : splits.train)
      if (r.task_type == TaskType::PersonalQA) ids.insert(r.record_id);
    nested = nested && std::includes(ids.begin(), ids.end(), previous.begin(), previous.end());
    previous = std::move(ids);
    summary.push_back({{"plan", p.name}, {"personal_qa_train", p.of(TaskType::PersonalQA).train},
                       {"train_records", splits.train.size()}});
    out_ << "sweep: " << p.name << " train " << splits.train.size() << "\n";
  }
  write_file_atomic(fs::path(out_dir_) / "sweep.json", json({{"plans", summary}, {"nested", nested}}).dump(2) + "\n");
  if (!nested) throw Error(ErrorCode::InvalidArgument, "sweep plans are not nested");
}

// Settled run configuration, hashed so two summaries can be compared at a glance.
json Runner::eval_meta() const {
  std::string canon;
  for (const auto& [k, v] : cfg_.values()) canon += k + "=" + v + "\n";
  canon += "seed=" + std::to_string(g_.seed) + "\nstudent=" + g_.student + "\njudge=" + g_.judge + "\n";
  return {{"student", g_.student},
          {"judge", g_.judge},
          {"data", data_path_},
          {"seed", g_.seed},
          {"config_hash", sha256_hex(canon)},
          {"templates_fingerprint", TemplateLibrary::builtin().fingerprint()}};
}

void Runner::evaluate() {
  auto items = eval_items_from(read_jsonl(data_path_));
  if (limit_ > 0 && items.size() > limit_) items.resize(limit_);
  const TemplateId variant = parse_variant(variant_);
  if (system_name_.empty()) system_name_ = g_.student;
  if (run_id_.empty()) run_id_ = "eval-" + sha256_hex(data_path_ + system_name_ + template_id_name(variant)).substr(0, 8);
  if (g_.dry_run) {
    out_ << "dry-run: would answer " << items.size() << " items with " << g_.student << " (" << template_id_name(variant)
         << "), judge with " << g_.judge << ", write " << (fs::path(eval_dir_) / run_id_).string() << "\n";
    return;
  }
  if (items.empty()) throw Error(ErrorCode::EmptyInput, data_path_ + " holds no personal QA records");
  auto gwp = make_gateway();
  Gateway& gw = *gwp;
  std::vector<QaJob> jobs;
  for (const auto& it : items) jobs.push_back({it.item_id, it.report_text, it.question});
  const auto answers = answer_questions(jobs, variant, gw, ref(gw, g_.student), 0.0, g_.parallelism);
  auto res = judge_answers(items, answers, system_name_, gw, ref(gw, g_.judge), g_.parallelism,
                           cfg_.get_double("eval.max_failure_rate", 0.10));
  res.variant = variant;
  persist_eval(eval_dir_, run_id_, {res},
               eval_meta());
  out_ << table({res.row});
}

void Runner::ablate() {
  auto items = eval_items_from(read_jsonl(data_path_));
  if (limit_ > 0 && items.size() > limit_) items.resize(limit_);
  if (run_id_.empty()) run_id_ = "ablation-" + sha256_hex(data_path_ + g_.student).substr(0, 8);
  const std::vector<TemplateId> variants{TemplateId::PlainQA, TemplateId::CoTOnly, TemplateId::FewShotCoT};
  if (g_.dry_run) {
    out_ << "dry-run: would run 3 prompt variants over " << items.size() << " items with " << g_.student
         << ", judge " << g_.judge << ", write " << (fs::path(eval_dir_) / run_id_).string() << "\n";
    return;
  }
  auto gwp = make_gateway();
  Gateway& gw = *gwp;
  AblationOptions ao;
  ao.parallelism = g_.parallelism;
  ao.max_failure_rate = cfg_.get_double("eval.max_failure_rate", 0.10);
  const auto results = run_ablation(items, variants, gw, ref(gw, g_.student), ref(gw, g_.judge), ao);
  persist_eval(eval_dir_, run_id_, results,
               eval_meta());
  std::vector<AggregateRow> rows;
  for (const auto& r : results) rows.push_back(r.row);
  out_ << table(rows);
}

void Runner::em() {
  const auto pairs = load_qa_pairs(pairs_path_);
  std::vector<std::string> golds;
  for (const auto& p : pairs) golds.push_back(p.answer);
  std::vector<std::string> preds;
  if (!predictions_path_.empty()) {
    preds = load_predictions(predictions_path_);
  } else {
    if (g_.dry_run) {
      out_ << "dry-run: would ask " << g_.student << " " << pairs.size() << " questions and score exact match\n";
      return;
    }
    auto gwp = make_gateway();
    Gateway& gw = *gwp;
    std::vector<QaJob> jobs;
    for (const auto& p : pairs) jobs.push_back({"", "", p.question});
    for (const auto& a : answer_questions(jobs, TemplateId::KnowledgeAnswer, gw, ref(gw, g_.student), 0.0, g_.parallelism))
      preds.push_back(a.ok ? a.answer : std::string());
  }
  const auto r = score_em(preds, golds);
  out_ << "em: " << format_fixed(r.em, 4) << " (" << r.matches << "/" << r.n << ")\n";
}

int Runner::run(const std::vector<std::string>& args) {
  app_.require_subcommand(1);
  app_.fallthrough();
  app_.add_option("--config", g_.config_files, "key = value config file (repeatable, later files win)");
  opts_["seed"] = app_.add_option("--seed", g_.seed, "master seed; named streams derive from it");
  app_.add_flag("--dry-run", g_.dry_run, "print the plan without side effects");
  app_.add_flag("--no-cache", g_.no_cache, "do not read cached model responses");
  opts_["cache-dir"] = app_.add_option("--cache-dir", g_.cache_dir, "response cache directory");
  opts_["parallelism"] = app_.add_option("--parallelism", g_.parallelism, "requests in flight");
  opts_["teacher"] = app_.add_option("--teacher", g_.teacher, "backend id for data generation");
  opts_["student"] = app_.add_option("--student", g_.student, "backend id under evaluation");
  opts_["judge"] = app_.add_option("--judge", g_.judge, "backend id of the judge");
  opts_["holdout-writer"] = app_.add_option("--holdout-writer", g_.holdout_writer, "backend id writing holdout questions");

  auto* synth_sc = app_.add_subcommand("synth", "synthesize multi-night sleep reports");
  opts_["count"] = synth_sc->add_option("--count", count_, "number of reports");
  opts_["mode"] = synth_sc->add_option("--mode", mode_, "programmatic or llm");
  synth_sc->add_option("--out", out_dir_, "output directory");

  auto* assess_sc = app_.add_subcommand("assess", "label reports and print their descriptions");
  assess_sc->add_option("--report,report", reports_path_, "report .json/.txt or a directory")->required();
  assess_sc->add_flag("--json", as_json_, "JSON lines output");

  auto* suggest_sc = app_.add_subcommand("suggest", "personalized suggestions for reports");
  suggest_sc->add_option("--reports", reports_path_, "report file or directory")->required();
  suggest_sc->add_option("--out", out_file_, "output .jsonl");

  auto* questions_sc = app_.add_subcommand("questions", "user questions per report");
  questions_sc->add_option("--reports", reports_path_, "report file or directory")->required();
  questions_sc->add_option("--per-report", per_report_, "questions requested per report");
  questions_sc->add_option("--out", out_file_, "output .jsonl");

  auto* build = app_.add_subcommand("build-dataset", "generate, split and write the instruction corpus");
  build->add_option("--out", out_dir_, "output directory");
  opts_["reports-n"] = build->add_option("--reports", n_reports_, "reports to synthesize");
  opts_["suggestions"] = build->add_option("--suggestions", sug_train_, "suggestion train records");
  opts_["suggestions-test"] = build->add_option("--suggestions-test", sug_test_, "suggestion test records");
  opts_["personal-qa"] = build->add_option("--personal-qa", pqa_train_, "personal QA train records");
  opts_["personal-qa-test"] = build->add_option("--personal-qa-test", pqa_test_, "personal QA test records");
  opts_["knowledge-qa"] = build->add_option("--knowledge-qa", kqa_train_, "knowledge QA train records");
  opts_["knowledge-qa-test"] = build->add_option("--knowledge-qa-test", kqa_test_, "knowledge QA test records");
  opts_["holdout"] = build->add_option("--holdout", holdout_, "external holdout questions (0 disables)");
  opts_["questions-per-report"] = build->add_option("--questions-per-report", questions_per_report_,
                                                    "questions requested per report");
  opts_["knowledge-pool"] = build->add_option("--knowledge-pool", knowledge_pool_, "knowledge questions requested");

  auto* sweep_sc = app_.add_subcommand("sweep", "nested corpora for a personal QA size sweep");
  sweep_sc->add_option("--out", out_dir_, "output directory");
  opts_["counts"] = sweep_sc->add_option("--counts", counts_, "comma-separated personal QA train counts");

  auto* eval_sc = app_.add_subcommand("evaluate", "answer and judge a test set");
  eval_sc->add_option("--data", data_path_, "test.jsonl")->required();
  eval_sc->add_option("--variant", variant_, "fewshot, cot or plain");
  eval_sc->add_option("--system", system_name_, "row name in the results table");
  eval_sc->add_option("--limit", limit_, "use the first N items");
  eval_sc->add_option("--out", eval_dir_, "evaluation root");
  eval_sc->add_option("--run-id", run_id_, "evaluation run id");

  auto* ablate_sc = app_.add_subcommand("ablate", "plain vs CoT vs few-shot CoT prompting");
  ablate_sc->add_option("--data", data_path_, "test.jsonl")->required();
  ablate_sc->add_option("--limit", limit_, "use the first N items");
  ablate_sc->add_option("--out", eval_dir_, "evaluation root");
  ablate_sc->add_option("--run-id", run_id_, "evaluation run id");

  auto* em_sc = app_.add_subcommand("em", "exact match on question/answer pairs");
  em_sc->add_option("--pairs", pairs_path_, "gold pairs (JSON array or TSV)")->required();
  em_sc->add_option("--predictions", predictions_path_, "one prediction per line or a JSON array");

  if (!args.empty() && !args.front().empty() && args.front()[0] != '-' &&
      app_.get_subcommands([&](const CLI::App* sc) { return sc->get_name() == args.front(); }).empty()) {
    err_ << "error: " << json({{"code", to_string(ErrorCode::UnknownCommand)}, {"message", args.front()}}).dump()
         << "\nRun with --help for the list of commands.\n";
    return 2;
  }
  try {
    app_.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError& e) {
    const int code = app_.exit(e, out_, err_);
    return code == 0 ? 0 : 2;
  }

  try {
    load_config();
    const std::string cmd = app_.get_subcommands().front()->get_name();
    if (cmd == "synth") synth();
    else if (cmd == "assess") assess_cmd();
    else if (cmd == "suggest") suggest();
    else if (cmd == "questions") questions();
    else if (cmd == "build-dataset") build_dataset();
    else if (cmd == "sweep") sweep();
    else if (cmd == "evaluate") evaluate();
    else if (cmd == "ablate") ablate();
    else if (cmd == "em") em();
    else throw Error(ErrorCode::UnknownCommand, cmd);
  } catch (const Error& e) {
    std::string msg = e.what();
    const std::string prefix = std::string(to_string(e.code())) + ": ";
    if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
    err_ << "error: " << json({{"code", to_string(e.code())}, {"message", msg}}).dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err_ << "error: " << json({{"code", "Internal"}, {"message", e.what()}}).dump() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Runner r(out, err);
  return r.run(args);
}

}  // namespace sleepcot
