#include "sleepcot/hrv.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "sleepcot/error.hpp"
#include "sleepcot/rng.hpp"

namespace sleepcot::hrv {

RRSeries::RRSeries(std::vector<double> intervals_ms, double start_epoch_s)
    : intervals_(std::move(intervals_ms)), start_epoch_s_(start_epoch_s) {
  if (intervals_.empty()) throw Error(ErrorCode::EmptySeries, "RR series has no intervals");
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    const double v = intervals_[i];
    if (!std::isfinite(v) || v < kMinIntervalMs || v > kMaxIntervalMs) {
      throw Error(ErrorCode::InvalidInterval, "interval " + std::to_string(i) + " = " +
                                                  std::to_string(v) + " ms outside [300, 2000]");
    }
  }
}

std::vector<double> RRSeries::beat_times_s() const {
  std::vector<double> t(intervals_.size());
  double acc = start_epoch_s_;
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    acc += intervals_[i] / 1000.0;
    t[i] = acc;
  }
  return t;
}

double RRSeries::duration_s() const {
  return std::accumulate(intervals_.begin(), intervals_.end(), 0.0) / 1000.0;
}

std::string RRSeries::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (double v : intervals_) arr.push_back(std::lround(v));
  return arr.dump();
}

RRSeries RRSeries::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseFailure, std::string("RR series JSON: ") + e.what());
  }
  if (!j.is_array()) throw Error(ErrorCode::ParseFailure, "RR series JSON must be an array");
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) throw Error(ErrorCode::ParseFailure, "RR series entries must be numbers");
    v.push_back(x.get<double>());
  }
  return RRSeries(std::move(v));
}

TimeDomainMetrics compute_time_domain(const RRSeries& rr) {
  const auto& x = rr.intervals_ms();
  const std::size_t n = x.size();
  if (n < 2) {
    throw Error(ErrorCode::SingleInterval, "RMSSD and pNN50 need at least two intervals");
  }
  // A constant series must give exactly zero, which the rounded mean of
  // e.g. 812.3 ms repeated would not.
  const bool constant = std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
  const double mean = constant ? x.front() : std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);

  double sq_diff = 0.0;
  std::size_t over50 = 0;
  for (std::size_t i = 1; i < n; ++i) {
    const double d = x[i] - x[i - 1];
    sq_diff += d * d;
    if (std::abs(d) > 50.0) ++over50;
  }
  const double n_diff = static_cast<double>(n - 1);

  TimeDomainMetrics m;
  m.sdnn_ms = std::sqrt(ss / static_cast<double>(n - 1));
  m.rmssd_ms = std::sqrt(sq_diff / n_diff);
  m.pnn50_pct = 100.0 * static_cast<double>(over50) / n_diff;
  return m;
}

namespace {

void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

}  // namespace

std::vector<double> resample_linear(std::span<const double> times_s, std::span<const double> values,
                                    double fs_hz) {
  std::vector<double> out;
  if (times_s.empty()) return out;
  const double t0 = times_s.front();
  const double t1 = times_s.back();
  const auto count = static_cast<std::size_t>(std::floor((t1 - t0) * fs_hz)) + 1;
  out.reserve(count);
  std::size_t k = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = t0 + static_cast<double>(i) / fs_hz;
    while (k + 1 < times_s.size() && times_s[k + 1] < t) ++k;
    if (k + 1 >= times_s.size()) {
      out.push_back(values.back());
      continue;
    }
    const double span = times_s[k + 1] - times_s[k];
    const double w = (t - times_s[k]) / span;
    out.push_back(values[k] + w * (values[k + 1] - values[k]));
  }
  return out;
}

Spectrum welch_psd(std::span<const double> samples, double fs_hz) {
  const std::size_t n = kWelchSegment;
  if (samples.size() < n) {
    throw Error(ErrorCode::RecordingTooShort, "need at least one 256-sample Welch segment");
  }
  std::array<double, kWelchSegment> window{};
  double win_power = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // periodic Hann
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                     static_cast<double>(n));
    win_power += window[i] * window[i];
  }

  const std::size_t bins = n / 2 + 1;
  std::vector<double> acc(bins, 0.0);
  std::size_t segments = 0;
  std::vector<std::complex<double>> buf(n);
  for (std::size_t start = 0; start + n <= samples.size(); start += kWelchStep) {
    const auto seg = samples.subspan(start, n);
    const double mean = std::accumulate(seg.begin(), seg.end(), 0.0) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) buf[i] = {(seg[i] - mean) * window[i], 0.0};
    fft_inplace(buf);
    for (std::size_t k = 0; k < bins; ++k) acc[k] += std::norm(buf[k]);
    ++segments;
  }

  Spectrum s;
  s.bin_width_hz = fs_hz / static_cast<double>(n);
  s.freq_hz.resize(bins);
  s.density.resize(bins);
  const double scale = 1.0 / (fs_hz * win_power * static_cast<double>(segments));
  for (std::size_t k = 0; k < bins; ++k) {
    s.freq_hz[k] = static_cast<double>(k) * s.bin_width_hz;
    const double one_sided = (k == 0 || k == bins - 1) ? 1.0 : 2.0;
    s.density[k] = acc[k] * scale * one_sided;
  }
  return s;
}

FrequencyDomainMetrics compute_frequency_domain(const RRSeries& rr) {
  if (rr.duration_s() < kMinSpectralDurationS) {
    throw Error(ErrorCode::RecordingTooShort,
                "spectral metrics need >= 120 s of RR time, got " + std::to_string(rr.duration_s()));
  }
  const auto times = rr.beat_times_s();
  const auto grid = resample_linear(times, rr.intervals_ms(), kResampleHz);
  const Spectrum spec = welch_psd(grid, kResampleHz);

  FrequencyDomainMetrics m;
  for (std::size_t k = 0; k < spec.freq_hz.size(); ++k) {
    const double f = spec.freq_hz[k];
    const double p = spec.density[k] * spec.bin_width_hz;
    if (f >= kLfLowHz && f < kLfHighHz) {
      m.lf_power += p;
    } else if (f >= kLfHighHz && f <= kHfHighHz) {
      m.hf_power += p;
    }
  }
  constexpr double kDegenerateMs2 = 1e-12;
  if (m.lf_power + m.hf_power <= kDegenerateMs2) {
    m.lf_power = 0.0;
    m.hf_power = 0.0;
    m.degenerate = true;
  }
  if (m.hf_power > 0.0) m.lf_hf = m.lf_power / m.hf_power;
  return m;
}

HrvMetrics compute_metrics(const RRSeries& rr) {
  HrvMetrics m;
  m.time = compute_time_domain(rr);
  m.window_s = rr.duration_s();
  if (m.window_s >= kMinSpectralDurationS) m.frequency = compute_frequency_domain(rr);
  return m;
}

// ---------------------------------------------------------------------------

const char* metric_name(Metric m) noexcept {
  switch (m) {
    case Metric::Sdnn: return "SDNN";
    case Metric::Rmssd: return "RMSSD";
    case Metric::LfHf: return "LF/HF";
    case Metric::Pnn50: return "PNN50";
  }
  return "?";
}

const char* status_name(RangeStatus s) noexcept {
  switch (s) {
    case RangeStatus::InGeneral: return "InGeneral";
    case RangeStatus::OutOfGeneral: return "OutOfGeneral";
    case RangeStatus::BelowHealthyTypical: return "BelowHealthyTypical";
    case RangeStatus::AboveHealthyTypical: return "AboveHealthyTypical";
  }
  return "?";
}

const MetricRange& ReferenceRanges::of(Metric m) const {
  switch (m) {
    case Metric::Sdnn: return sdnn;
    case Metric::Rmssd: return rmssd;
    case Metric::LfHf: return lf_hf;
    case Metric::Pnn50: return pnn50;
  }
  return sdnn;
}

MetricRange& ReferenceRanges::of(Metric m) {
  return const_cast<MetricRange&>(static_cast<const ReferenceRanges&>(*this).of(m));
}

ReferenceRanges ReferenceRanges::defaults() {
  ReferenceRanges r;
  r.sdnn = {20.0, 220.0, 34.0, std::nullopt, Direction::HigherIsBetter,
            "General range: 20-220. For healthy adults (24-hour recording): 141±39. "
            "For short-term recordings (5 minutes): 50±16."};
  r.rmssd = {10.0, 50.0, 27.0, std::nullopt, Direction::HigherIsBetter,
             "General range: 10-50. For healthy adults: 42±15."};
  // No general band is printed for LF/HF; 0.1-10 brackets every physiological value.
  r.lf_hf = {0.1, 10.0, 0.5, 2.0, Direction::Band,
             "For healthy adults: typically between 0.5 to 2.0."};
  r.pnn50 = {0.0, 50.0, 10.0, std::nullopt, Direction::HigherIsBetter,
             "General range: approximately 0-50. For healthy adults: typically greater than 10."};
  return r;
}

void ReferenceRanges::check() const {
  for (Metric m : {Metric::Sdnn, Metric::Rmssd, Metric::LfHf, Metric::Pnn50}) {
    const auto& r = of(m);
    if (!(r.general_min < r.general_max)) {
      throw Error(ErrorCode::ConfigError,
                  std::string(metric_name(m)) + ": general_min must be below general_max");
    }
  }
}

RangeStatus classify(Metric m, double value, const ReferenceRanges& ranges) {
  const auto& r = ranges.of(m);
  if (!(value >= r.general_min && value <= r.general_max)) return RangeStatus::OutOfGeneral;
  if (r.healthy_min && value < *r.healthy_min) return RangeStatus::BelowHealthyTypical;
  if (r.direction == Direction::Band && r.healthy_max && value > *r.healthy_max) {
    return RangeStatus::AboveHealthyTypical;
  }
  return RangeStatus::InGeneral;
}

std::vector<RangeFlag> validate_ranges(const HrvMetrics& m, const ReferenceRanges& ranges) {
  std::vector<RangeFlag> flags;
  auto add = [&](Metric metric, double v) { flags.push_back({metric, classify(metric, v, ranges), v}); };
  add(Metric::Sdnn, m.time.sdnn_ms);
  add(Metric::Rmssd, m.time.rmssd_ms);
  add(Metric::Pnn50, m.time.pnn50_pct);
  if (m.frequency && m.frequency->lf_hf) add(Metric::LfHf, *m.frequency->lf_hf);
  return flags;
}

bool all_clear(std::span<const RangeFlag> flags) {
  return std::all_of(flags.begin(), flags.end(),
                     [](const RangeFlag& f) { return f.status == RangeStatus::InGeneral; });
}

// ---------------------------------------------------------------------------
// Synthesis

namespace {

enum Comp { kVlf = 0, kLf, kHf, kAlt, kNoise, kCompCount };

struct Basis {
  std::vector<double> wave;  // zero-mean, beat-indexed
  double var = 0.0;          // sample variance (N-1)
  double msd = 0.0;          // mean squared successive difference
  double lf = 0.0;           // band powers per unit amplitude^2
  double hf = 0.0;
};

double sample_var(const std::vector<double>& w) {
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
  double ss = 0.0;
  for (double v : w) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(w.size() - 1);
}

double mean_sq_diff(const std::vector<double>& w) {
  double s = 0.0;
  for (std::size_t i = 1; i < w.size(); ++i) s += (w[i] - w[i - 1]) * (w[i] - w[i - 1]);
  return s / static_cast<double>(w.size() - 1);
}

void center(std::vector<double>& w) {
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
  for (double& v : w) v -= mean;
}

// Solves a 3x3 system with partial pivoting; false when singular.
bool solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b, std::array<double, 3>& x) {
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < 1e-14) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (int r = col + 1; r < 3; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int c = col; c < 3; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  for (int r = 2; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < 3; ++c) s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  return true;
}

struct Mix {
  std::array<double, kCompCount> power{};  // squared amplitudes
};

// Finds a nonnegative power mix hitting (sdnn^2, rmssd^2, LF = ratio * HF)
// under the additive model. LF and HF sinusoids are always used; the third
// free component is VLF (adds variance only) or alternation (adds mostly
// successive-difference power), whichever yields a nonnegative solution.
// `preferred` indexes the (noise share, third component) options; it is tried
// first so the correction loop does not oscillate between structurally
// different mixes.
std::optional<Mix> solve_mix(const std::array<Basis, kCompCount>& basis, double sdnn, double rmssd,
                             double ratio, int& preferred) {
  static constexpr std::array<double, 3> kNoiseShares = {0.15, 0.08, 0.0};
  static constexpr std::array<Comp, 2> kThird = {kVlf, kAlt};
  constexpr int kOptions = static_cast<int>(kNoiseShares.size() * kThird.size());
  const double var_t = sdnn * sdnn;
  const double msd_t = rmssd * rmssd;
  for (int step = 0; step <= kOptions; ++step) {
    const int option = step == 0 ? preferred : step - 1;
    if (option < 0 || (step > 0 && option == preferred)) continue;
    const double share = kNoiseShares[static_cast<std::size_t>(option) / kThird.size()];
    const Comp third = kThird[static_cast<std::size_t>(option) % kThird.size()];
    const auto& nb = basis[kNoise];
    const double un = share * var_t / nb.var;
    {
      const std::array<Comp, 3> cols = {kLf, kHf, third};
      std::array<std::array<double, 3>, 3> a{};
      for (int j = 0; j < 3; ++j) {
        const auto& b = basis[cols[j]];
        a[0][j] = b.var;
        a[1][j] = b.msd;
        a[2][j] = b.lf - ratio * b.hf;
      }
      std::array<double, 3> rhs = {var_t - un * nb.var, msd_t - un * nb.msd,
                                   -un * (nb.lf - ratio * nb.hf)};
      std::array<double, 3> u{};
      if (!solve3(a, rhs, u)) continue;
      if (u[0] < 0.0 || u[1] < 0.0 || u[2] < 0.0) continue;
      Mix mix;
      mix.power[kNoise] = un;
      for (int j = 0; j < 3; ++j) mix.power[cols[j]] = u[j];
      preferred = option;
      return mix;
    }
  }
  return std::nullopt;
}

}  // namespace

RRSeries synthesize_rr(const SynthesisTargets& t, double duration_s, std::uint64_t seed,
                       const ReferenceRanges& ranges) {
  if (duration_s < kMinSpectralDurationS) {
    throw Error(ErrorCode::InfeasibleTargets, "synthesis duration must be >= 120 s");
  }
  if (!(t.mean_rr_ms >= kMinIntervalMs && t.mean_rr_ms <= kMaxIntervalMs)) {
    throw Error(ErrorCode::InfeasibleTargets, "mean RR outside the plausibility band");
  }
  const auto beats = static_cast<std::size_t>(std::ceil(duration_s * 1000.0 / t.mean_rr_ms));
  if (t.sdnn_ms == 0.0) {
    if (t.rmssd_ms != 0.0) {
      throw Error(ErrorCode::InfeasibleTargets, "nonzero RMSSD with zero SDNN");
    }
    return RRSeries(std::vector<double>(beats, t.mean_rr_ms));
  }
  auto in_band = [](double v, const MetricRange& r) { return v >= r.general_min && v <= r.general_max; };
  if (!in_band(t.sdnn_ms, ranges.sdnn) || !in_band(t.rmssd_ms, ranges.rmssd) ||
      !in_band(t.lf_hf, ranges.lf_hf)) {
    throw Error(ErrorCode::InfeasibleTargets, "targets outside the general reference bands");
  }

  Rng rng(seed);
  const double beat_period_s = t.mean_rr_ms / 1000.0;
  const double beat_rate = 1.0 / beat_period_s;
  const double f_vlf = 0.012 * rng.uniform(0.9, 1.1);
  const double f_lf = rng.uniform(0.08, 0.12);
  const double f_hf = std::min(rng.uniform(0.20, 0.30), 0.42 * beat_rate);
  std::array<double, 3> phase{};
  for (double& p : phase) p = rng.uniform(0.0, 2.0 * std::numbers::pi);

  std::array<Basis, kCompCount> basis;
  for (auto& b : basis) b.wave.resize(beats);
  constexpr double kAr = 0.3;
  double ar = rng.normal();
  for (std::size_t k = 0; k < beats; ++k) {
    const double tau = static_cast<double>(k) * beat_period_s;
    basis[kVlf].wave[k] = std::sin(2.0 * std::numbers::pi * f_vlf * tau + phase[0]);
    basis[kLf].wave[k] = std::sin(2.0 * std::numbers::pi * f_lf * tau + phase[1]);
    basis[kHf].wave[k] = std::sin(2.0 * std::numbers::pi * f_hf * tau + phase[2]);
    basis[kAlt].wave[k] = (k % 2 == 0) ? 1.0 : -1.0;
    if (k > 0) ar = kAr * ar + rng.normal();
    basis[kNoise].wave[k] = ar;
  }
  constexpr double kProbeMs = 10.0;
  for (auto& b : basis) {
    center(b.wave);
    const double sd = std::sqrt(sample_var(b.wave));
    for (double& v : b.wave) v /= sd;
    b.var = 1.0;
    b.msd = mean_sq_diff(b.wave);
    std::vector<double> probe(beats);
    for (std::size_t k = 0; k < beats; ++k) probe[k] = t.mean_rr_ms + kProbeMs * b.wave[k];
    const auto f = compute_frequency_domain(RRSeries(std::move(probe)));
    b.lf = f.lf_power / (kProbeMs * kProbeMs);
    b.hf = f.hf_power / (kProbeMs * kProbeMs);
  }

  auto build = [&](const Mix& mix) {
    std::vector<double> x(beats, 0.0);
    for (int c = 0; c < kCompCount; ++c) {
      const double a = std::sqrt(mix.power[c]);
      if (a == 0.0) continue;
      for (std::size_t k = 0; k < beats; ++k) x[k] += a * basis[c].wave[k];
    }
    center(x);
    for (double& v : x) v += t.mean_rr_ms;
    return x;
  };

  double eff_sdnn = t.sdnn_ms;
  double eff_rmssd = t.rmssd_ms;
  double eff_ratio = t.lf_hf;
  std::optional<std::vector<double>> best;
  double best_score = std::numeric_limits<double>::infinity();
  int preferred = -1;
  constexpr int kMaxIterations = 20;
  for (int it = 0; it < kMaxIterations; ++it) {
    const auto mix = solve_mix(basis, eff_sdnn, eff_rmssd, eff_ratio, preferred);
    if (!mix) break;
    auto x = build(*mix);
    const bool plausible = std::all_of(x.begin(), x.end(), [](double v) {
      return v >= kMinIntervalMs && v <= kMaxIntervalMs;
    });
    if (!plausible) break;
    RRSeries series(x);
    const auto td = compute_time_domain(series);
    const auto fd = compute_frequency_domain(series);
    if (!fd.lf_hf || *fd.lf_hf <= 0.0) break;
    const double e_sdnn = std::abs(td.sdnn_ms / t.sdnn_ms - 1.0);
    const double e_rmssd = std::abs(td.rmssd_ms / t.rmssd_ms - 1.0);
    const double e_ratio = std::abs(*fd.lf_hf / t.lf_hf - 1.0);
    // normalised so that 1.0 sits exactly on the acceptance tolerances
    const double score = std::max({e_sdnn / 0.05, e_rmssd / 0.05, e_ratio / 0.15});
    if (score < best_score) {
      best_score = score;
      best = std::move(x);
    }
    if (e_sdnn < 0.005 && e_rmssd < 0.005 && e_ratio < 0.02) break;
    eff_sdnn *= t.sdnn_ms / td.sdnn_ms;
    eff_rmssd *= t.rmssd_ms / td.rmssd_ms;
    eff_ratio *= t.lf_hf / *fd.lf_hf;
  }
  if (!best || best_score > 1.0) {
    throw Error(ErrorCode::InfeasibleTargets,
                "no component mix reaches sdnn=" + std::to_string(t.sdnn_ms) +
                    " rmssd=" + std::to_string(t.rmssd_ms) + " lf_hf=" + std::to_string(t.lf_hf));
  }
  return RRSeries(std::move(*best));
}

}  // namespace sleepcot::hrv
