#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "adlti/scoring.hpp"
#include "adlti/timeseries.hpp"

namespace adlti {

struct RocCurve {
  std::vector<std::pair<double, double>> points;  // (fpr, tpr), (0,0)..(1,1)
  double auc = 0.0;

  void write_csv(const std::string& path) const;  // points + AUC footer
};

// Threshold sweep over all distinct scores (ties grouped), trapezoidal AUC.
// Throws NumericError when only one class is present.
RocCurve roc_auc(const std::vector<double>& scores,
                 const std::vector<uint8_t>& labels);

// Joins scored frames with labels by timestamp; every scored frame must
// have a label.
std::pair<std::vector<double>, std::vector<uint8_t>> align_scores_labels(
    const ScoreStream& scores, const LabelTrack& labels);

struct AnomalyInjection {
  size_t index = 0;
  double magnitude = 0.0;
  size_t duration = 1;
};

// Trend + daily sinusoid + weekly two-level pattern + Gaussian noise, with
// additive injected anomalies; stands in for private production data.
struct SyntheticSpec {
  size_t channels = 2;
  size_t length = 3000;
  std::vector<double> daily_amplitude{0.15};   // broadcast when size 1
  std::vector<double> weekly_amplitude{0.3};
  double noise_std = 0.05;
  double trend_rise = 0.0;  // total drift over the full series
  double base = 1.0;
  std::vector<AnomalyInjection> injections;
  uint64_t rng_seed = 42;
  int64_t start_epoch = 345600;  // a Monday, 00:00
  int64_t interval = 3600;
};

std::pair<TimeSeries, LabelTrack> generate_synthetic(const SyntheticSpec& spec);

// Deterministic set of non-overlapping injections for a given seed.
std::vector<AnomalyInjection> random_injections(
    size_t length, size_t count, size_t min_duration, size_t max_duration,
    double min_magnitude, double max_magnitude, size_t min_index,
    uint64_t seed);

struct BenchReport {
  int L = 0;
  size_t channels = 0;
  unsigned lanes = 1;
  size_t frames = 0;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p99_ms = 0.0;

  std::string to_json() const;
  void save(const std::string& path) const;
};

// Per-frame latency of the online loop (forecast + buffer update + scoring),
// model training excluded. Scores can be captured for identity checks.
BenchReport bench_detection(Forecaster& forecaster, const TimeSeries& series,
                            int L, const ScoringParams& params, unsigned lanes,
                            ScoreStream* out_scores = nullptr);

}  // namespace adlti
