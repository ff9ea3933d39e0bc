// Thin bindings. Structured values cross the boundary as JSON text and are
// decoded on the Python side, so the C++ JSON shapes stay the single source.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "sleepcot/assessor.hpp"
#include "sleepcot/cli.hpp"
#include "sleepcot/error.hpp"
#include "sleepcot/hrv.hpp"
#include "sleepcot/judge.hpp"
#include "sleepcot/workflow.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace sleepcot;

namespace {

json metrics_json(const hrv::HrvMetrics& m) {
  json j = {{"sdnn_ms", m.time.sdnn_ms}, {"rmssd_ms", m.time.rmssd_ms}, {"pnn50_pct", m.time.pnn50_pct},
            {"window_s", m.window_s}};
  if (m.frequency) {
    j["lf_power"] = m.frequency->lf_power;
    j["hf_power"] = m.frequency->hf_power;
    j["lf_hf"] = m.frequency->lf_hf ? json(*m.frequency->lf_hf) : json(nullptr);
  }
  return j;
}

SleepReport report_from(const std::string& text) { return json::parse(text).get<SleepReport>(); }

}  // namespace

PYBIND11_MODULE(_sleepcot, m) {
  static py::exception<Error> error_type(m, "SleepcotError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      auto cls = py::reinterpret_borrow<py::object>(error_type);
      py::object exc = cls(e.what());
      exc.attr("code") = to_string(e.code());
      PyErr_SetObject(cls.ptr(), exc.ptr());
    }
  });

  m.def("compute_metrics", [](const std::vector<double>& rr) { return metrics_json(hrv::compute_metrics(hrv::RRSeries(rr))).dump(); });
  m.def("synthesize_rr", [](double mean_rr, double sdnn, double rmssd, double lf_hf, double duration_s, std::uint64_t seed) {
    return hrv::synthesize_rr({mean_rr, sdnn, rmssd, lf_hf}, duration_s, seed).intervals_ms();
  });
  m.def("synthesize_reports", [](std::size_t n, std::uint64_t seed) {
    return json(synthesize_reports(n, seed)).dump();
  });
  m.def("exemplar_report", [] { return json(exemplar_report()).dump(); });
  m.def("validate_report", [](const std::string& report) {
    std::vector<std::string> out;
    for (const auto& v : validate_report(report_from(report), PhysioRuleSet::defaults())) out.push_back(v.to_string());
    return out;
  });
  m.def("render_report", [](const std::string& report) { return render_report_text(report_from(report)); });
  m.def("assess", [](const std::string& report) {
    const auto rep = report_from(report);
    const auto a = assess(rep);
    return json{{"assessment", a}, {"description", render_description(a, rep)}}.dump();
  });
  m.def("normalize_answer", [](const std::string& s) { return normalize_answer(s); });
  m.def("exact_match", [](const std::string& a, const std::string& b) { return exact_match(a, b); });
  m.def("score_em", [](const std::vector<std::string>& p, const std::vector<std::string>& g) {
    const auto r = score_em(p, g);
    return json{{"n", r.n}, {"matches", r.matches}, {"em", r.em}}.dump();
  });
  m.def("aggregate", [](const std::vector<std::array<int, 4>>& scores, const std::string& system) {
    std::vector<JudgeScorecard> cards;
    for (std::size_t i = 0; i < scores.size(); ++i) cards.push_back({std::to_string(i), scores[i], "", ""});
    return to_json(aggregate(cards, system)).dump();
  });
  m.def("check_printed_average", [](const std::array<double, 4>& means, double printed, int decimals) {
    const auto c = check_printed_average(aggregate_means("row", means), printed, decimals);
    return json{{"full", c.full}, {"displayed", c.displayed}, {"printed", c.printed}, {"explained", c.explained},
                {"within_tenth", c.within_tenth}}
        .dump();
  });
  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code = 0;
    {
      py::gil_scoped_release release;
      code = run_cli(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  });
}
