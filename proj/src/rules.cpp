#include "sleepcot/rules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sleepcot/error.hpp"

namespace sleepcot {

const char* var_key(ReportVar v) noexcept {
  switch (v) {
    case ReportVar::Sdnn: return "sdnn";
    case ReportVar::Rmssd: return "rmssd";
    case ReportVar::LfHf: return "lf_hf";
    case ReportVar::Pnn50: return "pnn50";
    case ReportVar::SleepHours: return "sleep_hours";
    case ReportVar::Apnea: return "apnea";
  }
  return "?";
}

std::optional<ReportVar> parse_var(std::string_view key) {
  for (ReportVar v : kAllVars)
    if (key == var_key(v)) return v;
  return std::nullopt;
}

bool Condition::holds(double x) const {
  switch (op) {
    case CmpOp::Lt: return x < value;
    case CmpOp::Le: return x <= value;
    case CmpOp::Gt: return x > value;
    case CmpOp::Ge: return x >= value;
  }
  return false;
}

std::string Condition::to_string() const {
  static const char* ops[] = {"<", "<=", ">", ">="};
  return std::string(var_key(var)) + " " + ops[static_cast<int>(op)] + " " + format_fixed(value, 2);
}

namespace {

struct Interval {
  double lo, hi;
  bool lo_open, hi_open;

  bool empty() const { return lo > hi || (lo == hi && (lo_open || hi_open)); }
  Interval intersect(const Interval& o) const {
    Interval r = *this;
    if (o.lo > r.lo || (o.lo == r.lo && o.lo_open)) {
      r.lo = o.lo;
      r.lo_open = o.lo_open;
    }
    if (o.hi < r.hi || (o.hi == r.hi && o.hi_open)) {
      r.hi = o.hi;
      r.hi_open = o.hi_open;
    }
    return r;
  }
};

Interval to_interval(const Condition& c) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (c.op) {
    case CmpOp::Lt: return {-inf, c.value, false, true};
    case CmpOp::Le: return {-inf, c.value, false, false};
    case CmpOp::Gt: return {c.value, inf, true, false};
    case CmpOp::Ge: return {c.value, inf, false, false};
  }
  return {-inf, inf, false, false};
}

Interval general(const PhysioRuleSet& r, ReportVar v) {
  const auto& b = r.bound(v);
  return {b.general_min, b.general_max, false, false};
}

Condition parse_condition(std::string_view text, const std::string& name) {
  const std::string s = trim(text);
  static const std::pair<const char*, CmpOp> ops[] = {
      {"<=", CmpOp::Le}, {">=", CmpOp::Ge}, {"<", CmpOp::Lt}, {">", CmpOp::Gt}};
  for (const auto& [tok, op] : ops) {
    const auto pos = s.find(tok);
    if (pos == std::string::npos) continue;
    const std::string lhs = trim(std::string_view(s).substr(0, pos));
    const std::string rhs = trim(std::string_view(s).substr(pos + std::char_traits<char>::length(tok)));
    auto var = parse_var(lhs);
    if (!var) throw Error(ErrorCode::ConfigError, "rule " + name + ": unknown metric '" + lhs + "'");
    try {
      std::size_t used = 0;
      double v = std::stod(rhs, &used);
      if (used != rhs.size()) throw std::invalid_argument(rhs);
      return {*var, op, v};
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "rule " + name + ": bad threshold '" + rhs + "'");
    }
  }
  throw Error(ErrorCode::ConfigError, "rule " + name + ": no comparison in '" + s + "'");
}

}  // namespace

ConsistencyRule parse_rule(const std::string& name, std::string_view expr) {
  const auto arrow = expr.find("=>");
  if (arrow == std::string_view::npos) {
    throw Error(ErrorCode::ConfigError, "rule " + name + ": expected 'A op x => B op y'");
  }
  return {name, parse_condition(expr.substr(0, arrow), name), parse_condition(expr.substr(arrow + 2), name)};
}

PhysioRuleSet PhysioRuleSet::defaults() {
  PhysioRuleSet r;
  r.bounds[ReportVar::Sdnn] = {20.0, 220.0, 0.15};
  r.bounds[ReportVar::Rmssd] = {10.0, 50.0, 0.15};
  r.bounds[ReportVar::LfHf] = {0.1, 10.0, 0.15};
  r.bounds[ReportVar::Pnn50] = {0.0, 50.0, std::nullopt};
  r.bounds[ReportVar::SleepHours] = {3.0, 12.0, 0.15};
  r.bounds[ReportVar::Apnea] = {0.0, 60.0, std::nullopt};
  r.rules = {
      parse_rule("low_rmssd_low_pnn50", "rmssd < 20 => pnn50 <= 12"),
      parse_rule("high_pnn50_needs_rmssd", "pnn50 > 30 => rmssd >= 25"),
      parse_rule("sympathetic_dominance_caps_rmssd", "lf_hf > 3 => rmssd <= 35"),
  };
  r.required_sections = {"Sleep Quality Overview",
                         "Cardiac Health",
                         "Stress and Stress Resilience",
                         "Sleep Apnea and Sleep Interruptions",
                         "Comprehensive Impact Analysis",
                         "HRV Parameters Calculation"};
  return r;
}

PhysioRuleSet PhysioRuleSet::from_config(const KeyValueConfig& cfg) {
  PhysioRuleSet r = defaults();
  for (ReportVar v : kAllVars) {
    const std::string k = var_key(v);
    auto& b = r.bounds[v];
    b.general_min = cfg.get_double(k + ".general_min", b.general_min);
    b.general_max = cfg.get_double(k + ".general_max", b.general_max);
    if (auto d = cfg.get(k + ".drift_max")) {
      if (*d == "none") {
        b.drift_max.reset();
      } else {
        b.drift_max = cfg.get_double(k + ".drift_max", 0.0);
      }
    }
  }
  const auto rule_keys = cfg.keys_with_prefix("rule.");
  if (!rule_keys.empty()) {
    r.rules.clear();
    for (const auto& key : rule_keys) r.rules.push_back(parse_rule(key.substr(5), *cfg.get(key)));
  }
  if (auto sections = cfg.get("sections")) {
    r.required_sections.clear();
    for (const auto& s : split(*sections, '|')) {
      auto t = trim(s);
      if (!t.empty()) r.required_sections.push_back(std::move(t));
    }
  }
  r.check();
  return r;
}

const MetricBounds& PhysioRuleSet::bound(ReportVar v) const {
  auto it = bounds.find(v);
  if (it == bounds.end()) {
    throw Error(ErrorCode::ConfigError, std::string("no bounds for ") + var_key(v));
  }
  return it->second;
}

void PhysioRuleSet::check() const {
  for (ReportVar v : kAllVars) {
    const auto& b = bound(v);
    if (!(b.general_min < b.general_max)) {
      throw Error(ErrorCode::ConfigError, std::string(var_key(v)) + ": general_min >= general_max");
    }
    if (b.drift_max && !(*b.drift_max > 0.0)) {
      throw Error(ErrorCode::ConfigError, std::string(var_key(v)) + ": drift_max must be positive");
    }
  }
  for (const auto& rule : rules) {
    const auto when = to_interval(rule.when).intersect(general(*this, rule.when.var));
    if (when.empty()) continue;  // never fires
    auto then = to_interval(rule.then).intersect(general(*this, rule.then.var));
    if (rule.when.var == rule.then.var) then = then.intersect(when);
    if (then.empty()) {
      throw Error(ErrorCode::RuleConflict,
                  "rule " + rule.name + " demands " + rule.then.to_string() +
                      " which the general bounds exclude");
    }
  }
  for (std::size_t i = 0; i < rules.size(); ++i) {
    for (std::size_t j = i + 1; j < rules.size(); ++j) {
      const auto& a = rules[i];
      const auto& b = rules[j];
      if (a.then.var != b.then.var) continue;
      // Both antecedents must be simultaneously satisfiable for the pair to clash.
      auto wa = to_interval(a.when).intersect(general(*this, a.when.var));
      auto wb = to_interval(b.when).intersect(general(*this, b.when.var));
      if (wa.empty() || wb.empty()) continue;
      if (a.when.var == b.when.var && wa.intersect(wb).empty()) continue;
      const auto both = to_interval(a.then).intersect(to_interval(b.then)).intersect(general(*this, a.then.var));
      if (both.empty()) {
        throw Error(ErrorCode::RuleConflict,
                    "rules " + a.name + " and " + b.name + " can fire together with disjoint demands");
      }
    }
  }
}

hrv::ReferenceRanges PhysioRuleSet::reference_ranges() const {
  auto r = hrv::ReferenceRanges::defaults();
  auto copy = [&](hrv::MetricRange& m, ReportVar v) {
    m.general_min = bound(v).general_min;
    m.general_max = bound(v).general_max;
  };
  copy(r.sdnn, ReportVar::Sdnn);
  copy(r.rmssd, ReportVar::Rmssd);
  copy(r.lf_hf, ReportVar::LfHf);
  copy(r.pnn50, ReportVar::Pnn50);
  return r;
}

std::string PhysioRuleSet::describe() const {
  std::ostringstream os;
  for (ReportVar v : kAllVars) {
    const auto& b = bound(v);
    os << "- " << var_key(v) << ": every nightly value within [" << format_fixed(b.general_min, 1) << ", "
       << format_fixed(b.general_max, 1) << "]";
    if (b.drift_max) os << "; night-to-night change at most " << format_fixed(*b.drift_max * 100.0, 0) << "%";
    os << "\n";
  }
  for (const auto& rule : rules) {
    os << "- if mean " << rule.when.to_string() << " then mean " << rule.then.to_string() << "\n";
  }
  os << "- light + deep + REM minutes of a night never exceed that night's sleep duration\n";
  return os.str();
}

}  // namespace sleepcot
