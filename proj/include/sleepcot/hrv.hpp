#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sleepcot::hrv {

/// Physiological plausibility band for a single NN interval.
inline constexpr double kMinIntervalMs = 300.0;
inline constexpr double kMaxIntervalMs = 2000.0;

/// Spectral estimator parameters.
inline constexpr double kResampleHz = 4.0;
inline constexpr std::size_t kWelchSegment = 256;
inline constexpr std::size_t kWelchStep = 128;
inline constexpr double kLfLowHz = 0.04;
inline constexpr double kLfHighHz = 0.15;  // exclusive
inline constexpr double kHfHighHz = 0.40;  // inclusive
inline constexpr double kMinSpectralDurationS = 120.0;

/// Ordered NN intervals. Construction validates the plausibility band, so a
/// live RRSeries is always nonempty with strictly increasing beat times.
class RRSeries {
 public:
  explicit RRSeries(std::vector<double> intervals_ms, double start_epoch_s = 0.0);

  const std::vector<double>& intervals_ms() const noexcept { return intervals_; }
  double start_epoch_s() const noexcept { return start_epoch_s_; }
  std::size_t size() const noexcept { return intervals_.size(); }

  /// Beat times in seconds: start + cumulative sum of intervals.
  std::vector<double> beat_times_s() const;
  double duration_s() const;

  /// Persisted form: JSON array of integer milliseconds.
  std::string to_json() const;
  static RRSeries from_json(const std::string& text);

 private:
  std::vector<double> intervals_;
  double start_epoch_s_;
};

struct TimeDomainMetrics {
  double sdnn_ms = 0.0;
  double rmssd_ms = 0.0;
  double pnn50_pct = 0.0;
};

struct FrequencyDomainMetrics {
  double lf_power = 0.0;  // ms^2
  double hf_power = 0.0;  // ms^2
  std::optional<double> lf_hf;  // present iff hf_power > 0
  bool degenerate = false;      // DegenerateSpectrum: no measurable band power
};

struct HrvMetrics {
  TimeDomainMetrics time;
  std::optional<FrequencyDomainMetrics> frequency;
  double window_s = 0.0;  // whole-series window the metrics describe
};

/// SDNN (N-1 denominator), RMSSD and pNN50 (strict > 50 ms).
/// Throws SingleInterval for a one-beat series.
TimeDomainMetrics compute_time_domain(const RRSeries& rr);

/// 4 Hz linear resampling of the tachogram, Welch PSD (256-sample Hann
/// segments, 50% overlap, per-segment mean removal), LF over [0.04, 0.15) Hz
/// and HF over [0.15, 0.40] Hz. Throws RecordingTooShort below 120 s.
FrequencyDomainMetrics compute_frequency_domain(const RRSeries& rr);

/// Both domains when the recording is long enough for the spectrum.
HrvMetrics compute_metrics(const RRSeries& rr);

/// One-sided Welch PSD of a uniformly sampled signal. Exposed for tests.
struct Spectrum {
  std::vector<double> freq_hz;
  std::vector<double> density;  // ms^2 / Hz
  double bin_width_hz = 0.0;
};
Spectrum welch_psd(std::span<const double> samples, double fs_hz);

/// Linear interpolation of (times, values) onto a uniform grid starting at
/// times.front().
std::vector<double> resample_linear(std::span<const double> times_s,
                                    std::span<const double> values, double fs_hz);

// ---------------------------------------------------------------------------
// Reference ranges

enum class Metric { Sdnn, Rmssd, LfHf, Pnn50 };
const char* metric_name(Metric m) noexcept;

enum class Direction { HigherIsBetter, Band };

struct MetricRange {
  double general_min = 0.0;
  double general_max = 0.0;
  std::optional<double> healthy_min;  // "typically greater than"
  std::optional<double> healthy_max;  // upper edge for Band metrics
  Direction direction = Direction::HigherIsBetter;
  std::string healthy_note;           // human-readable note printed in reports
};

struct ReferenceRanges {
  MetricRange sdnn;
  MetricRange rmssd;
  MetricRange lf_hf;
  MetricRange pnn50;

  const MetricRange& of(Metric m) const;
  MetricRange& of(Metric m);

  /// Reference bands printed in wearable sleep reports.
  static ReferenceRanges defaults();
  /// Throws ConfigError unless general_min < general_max for every metric.
  void check() const;
};

enum class RangeStatus { InGeneral, OutOfGeneral, BelowHealthyTypical, AboveHealthyTypical };
const char* status_name(RangeStatus s) noexcept;

struct RangeFlag {
  Metric metric;
  RangeStatus status;
  double value;
};

RangeStatus classify(Metric m, double value, const ReferenceRanges& ranges);

/// One flag per metric present in `m`. Never throws.
std::vector<RangeFlag> validate_ranges(const HrvMetrics& m, const ReferenceRanges& ranges);

/// True when every flag is InGeneral.
bool all_clear(std::span<const RangeFlag> flags);

// ---------------------------------------------------------------------------
// Synthesis

struct SynthesisTargets {
  double mean_rr_ms = 900.0;
  double sdnn_ms = 50.0;
  double rmssd_ms = 42.0;
  double lf_hf = 1.2;
};

/// Generator contract: AR(1) noise for short-term variance plus sinusoidal
/// modulators in the VLF, LF and HF bands and a beat-to-beat alternation
/// term. Component powers are solved from the targets and refined by
/// closed-loop correction against compute_time_domain/compute_frequency_domain.
/// Same seed, same series. Throws InfeasibleTargets when no nonnegative
/// component mix reaches the targets within tolerance.
RRSeries synthesize_rr(const SynthesisTargets& targets, double duration_s, std::uint64_t seed,
                       const ReferenceRanges& ranges = ReferenceRanges::defaults());

}  // namespace sleepcot::hrv
