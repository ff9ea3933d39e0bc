#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sleepcot/error.hpp"
#include "sleepcot/hrv.hpp"

using namespace sleepcot;
using namespace sleepcot::hrv;

namespace {

std::vector<double> random_series(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> base(650.0, 1050.0), jitter(-60.0, 60.0);
  std::vector<double> x(n);
  double level = base(gen);
  for (auto& v : x) {
    level = std::clamp(level + jitter(gen) * 0.3, 500.0, 1300.0);
    v = std::clamp(level + jitter(gen), 300.0, 2000.0);
  }
  return x;
}

// Beats whose tachogram follows a sinusoid at `hz`.
std::vector<double> sinusoid_series(double hz, double seconds, double amp_ms = 40.0) {
  std::vector<double> x;
  double t = 0.0;
  while (t < seconds) {
    const double v = 900.0 + amp_ms * std::sin(2.0 * std::numbers::pi * hz * t);
    x.push_back(v);
    t += v / 1000.0;
  }
  return x;
}

}  // namespace

TEST_CASE("time domain matches brute force on random series") {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = random_series(gen, 50 + trial * 7);
    const auto m = compute_time_domain(RRSeries(x));
    const auto o = oracle::time_domain(x);
    CHECK(oracle::close(m.sdnn_ms, o.sdnn));
    CHECK(oracle::close(m.rmssd_ms, o.rmssd));
    CHECK(oracle::close(m.pnn50_pct, o.pnn50));
  }
}

TEST_CASE("frequency domain matches naive DFT Welch") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = random_series(gen, 200 + trial * 20);
    const auto f = compute_frequency_domain(RRSeries(x));
    const auto b = oracle::welch_bands(oracle::resample(x, 4.0), 4.0);
    CHECK(oracle::close(f.lf_power, b.lf));
    CHECK(oracle::close(f.hf_power, b.hf));
    REQUIRE(f.lf_hf.has_value());
    CHECK(oracle::close(*f.lf_hf, b.lf / b.hf));
  }
}

TEST_CASE("resampling matches interpolation oracle") {
  std::mt19937_64 gen(3);
  const auto x = random_series(gen, 300);
  const RRSeries rr(x);
  const auto t = rr.beat_times_s();
  const auto grid = resample_linear(t, x, 4.0);
  const auto o = oracle::resample(x, 4.0);
  REQUIRE(grid.size() == o.size());
  for (std::size_t i = 0; i < o.size(); ++i) CHECK(oracle::close(grid[i], o[i]));
}

TEST_CASE("constant series gives exact zeros") {
  for (double v : {800.0, 812.3, 1000.7}) {
    const RRSeries rr(std::vector<double>(400, v));
    const auto m = compute_metrics(rr);
    CHECK(m.time.sdnn_ms == 0.0);
    CHECK(m.time.rmssd_ms == 0.0);
    CHECK(m.time.pnn50_pct == 0.0);
    REQUIRE(m.frequency.has_value());
    CHECK(m.frequency->lf_power == 0.0);
    CHECK(m.frequency->hf_power == 0.0);
    CHECK(m.frequency->degenerate);
    CHECK_FALSE(m.frequency->lf_hf.has_value());
  }
}

TEST_CASE("pure tones land in their band") {
  const auto lf = compute_frequency_domain(RRSeries(sinusoid_series(0.10, 300.0)));
  const auto hf = compute_frequency_domain(RRSeries(sinusoid_series(0.30, 300.0)));
  REQUIRE(lf.lf_hf.has_value());
  REQUIRE(hf.lf_hf.has_value());
  CHECK(*lf.lf_hf >= 5.0);
  CHECK(*hf.lf_hf <= 0.2);
}

TEST_CASE("input validation errors") {
  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code_of([] { RRSeries(std::vector<double>{}); }) == ErrorCode::EmptySeries);
  CHECK(code_of([] { RRSeries({800.0, 250.0}); }) == ErrorCode::InvalidInterval);
  CHECK(code_of([] { RRSeries({800.0, 2100.0}); }) == ErrorCode::InvalidInterval);
  CHECK(code_of([] { RRSeries({800.0, std::nan("")}); }) == ErrorCode::InvalidInterval);
  CHECK(code_of([] { compute_time_domain(RRSeries({800.0})); }) == ErrorCode::SingleInterval);
  CHECK(code_of([] { compute_frequency_domain(RRSeries(std::vector<double>(100, 900.0))); }) ==
        ErrorCode::RecordingTooShort);
  // too short for the spectrum: metrics still carry the time domain
  const auto m = compute_metrics(RRSeries(std::vector<double>{800, 820, 790, 805}));
  CHECK_FALSE(m.frequency.has_value());
}

TEST_CASE("time-domain properties") {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_series(gen, 120);
    const auto base = compute_time_domain(RRSeries(x));
    CHECK(base.pnn50_pct >= 0.0);
    CHECK(base.pnn50_pct <= 100.0);

    // SDNN ignores order; RMSSD and pNN50 ignore reversal.
    auto shuffled = x;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    CHECK(oracle::close(compute_time_domain(RRSeries(shuffled)).sdnn_ms, base.sdnn_ms));
    auto reversed = x;
    std::reverse(reversed.begin(), reversed.end());
    const auto rev = compute_time_domain(RRSeries(reversed));
    CHECK(oracle::close(rev.rmssd_ms, base.rmssd_ms));
    CHECK(rev.pnn50_pct == base.pnn50_pct);

    // A constant offset changes none of the three.
    auto shifted = x;
    for (auto& v : shifted) v += 5.0;
    const auto sh = compute_time_domain(RRSeries(shifted));
    CHECK(oracle::close(sh.sdnn_ms, base.sdnn_ms, 1e-9, 1e-9));
    CHECK(oracle::close(sh.rmssd_ms, base.rmssd_ms, 1e-9, 1e-9));
  }
}

TEST_CASE("series JSON round trip keeps integer milliseconds") {
  const RRSeries rr({800.4, 810.6, 790.0});
  CHECK(rr.to_json() == "[800,811,790]");
  const auto back = RRSeries::from_json(rr.to_json());
  CHECK(back.intervals_ms() == std::vector<double>{800, 811, 790});
  CHECK_THROWS_AS(RRSeries::from_json("{\"a\":1}"), Error);
  CHECK_THROWS_AS(RRSeries::from_json("[1,"), Error);
}

TEST_CASE("reference range classification") {
  const auto r = ReferenceRanges::defaults();
  CHECK(classify(Metric::Sdnn, 50.0, r) == RangeStatus::InGeneral);
  CHECK(classify(Metric::Sdnn, 30.0, r) == RangeStatus::BelowHealthyTypical);
  CHECK(classify(Metric::Sdnn, 15.0, r) == RangeStatus::OutOfGeneral);
  CHECK(classify(Metric::Rmssd, 55.0, r) == RangeStatus::OutOfGeneral);
  CHECK(classify(Metric::LfHf, 2.5, r) == RangeStatus::AboveHealthyTypical);
  CHECK(classify(Metric::LfHf, 0.3, r) == RangeStatus::BelowHealthyTypical);
  CHECK(classify(Metric::Pnn50, 5.0, r) == RangeStatus::BelowHealthyTypical);

  HrvMetrics m;
  m.time = {50.0, 40.0, 20.0};
  auto flags = validate_ranges(m, r);
  CHECK(flags.size() == 3);  // no LF/HF without a spectrum
  CHECK(all_clear(flags));
  m.frequency = FrequencyDomainMetrics{1.0, 1.0, 1.0, false};
  m.time.rmssd_ms = 70.0;
  flags = validate_ranges(m, r);
  CHECK(flags.size() == 4);
  CHECK_FALSE(all_clear(flags));

  auto bad = r;
  bad.sdnn.general_min = 300.0;
  CHECK_THROWS_AS(bad.check(), Error);
}

TEST_CASE("synthesis is seeded and closes the loop") {
  const SynthesisTargets t{900.0, 50.0, 40.0, 1.3};
  const auto a = synthesize_rr(t, 300.0, 99);
  const auto b = synthesize_rr(t, 300.0, 99);
  CHECK(a.intervals_ms() == b.intervals_ms());
  CHECK(a.intervals_ms() != synthesize_rr(t, 300.0, 100).intervals_ms());

  const auto m = compute_metrics(a);
  CHECK(std::abs(m.time.sdnn_ms - 50.0) <= 0.05 * 50.0);
  CHECK(std::abs(m.time.rmssd_ms - 40.0) <= 0.05 * 40.0);
  REQUIRE(m.frequency.has_value());
  CHECK(std::abs(*m.frequency->lf_hf - 1.3) <= 0.15 * 1.3);
  CHECK(std::abs(a.duration_s() - 300.0) < 5.0);
}

TEST_CASE("impossible synthesis targets are rejected") {
  // RMSSD far above what SDNN allows (RMSSD <= 2 SDNN for any series).
  CHECK_THROWS_AS(synthesize_rr({900.0, 10.0, 45.0, 1.0}, 300.0, 1), Error);
}
