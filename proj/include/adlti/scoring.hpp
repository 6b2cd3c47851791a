#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adlti/gru.hpp"
#include "adlti/lti.hpp"

namespace adlti {

struct ScoringParams {
  double k = 1.0;   // logistic growth rate
  double x0 = 0.5;  // logistic midpoint
  double c = 1.0;   // dispersion multiplier in k = c / stdev(LTI)
  std::string calibrated_on;
  int iterations = 0;

  std::string to_json() const;
  static ScoringParams from_json(const std::string& text);
  void save(const std::string& path) const;
  static ScoringParams load(const std::string& path);
};

// 1 / (1 + e^{-k(x - x0)}), evaluated via exp of a negative magnitude only.
double phi(double x, const ScoringParams& params);

struct CalibrationReport {
  int iterations = 0;
  bool converged = false;
  double k = 0.0;
  double x0 = 0.0;
  std::vector<std::pair<double, double>> trace;  // (k, x0) per iteration
};

// Fixed-point determination of (k, x0) on a reference stream: sweeps
// t = L..r-1 computing LTI and AS with the current parameters (scores are
// carried across sweeps), then refits k = c/stdev(LTI), x0 = mean(LTI),
// until both change by less than 0.1%. Forecast i must come from source i.
std::pair<ScoringParams, CalibrationReport> calibrate(
    const std::vector<ValueFrame>& reference,
    const std::vector<PredictedSequence>& forecasts, int L, double c,
    int max_iterations = 100);

enum ScoreFlags : uint8_t {
  kFlagNone = 0,
  kFlagLowConfidence = 1,  // Z_t underflow, uniform weights used
};

struct ScoreRecord {
  size_t index = 0;
  int64_t timestamp = 0;
  double lti = 0.0;
  double as = 0.0;
  double z = 0.0;
  uint8_t flags = kFlagNone;
  std::vector<double> per_source;  // WLSDist terms when diagnostics are on
};

struct ScoreStream {
  std::vector<ScoreRecord> records;

  void write_csv(const std::string& path) const;
  void write_diagnostics_jsonl(const std::string& path) const;
  static ScoreStream load_csv(const std::string& path);
};

// Scores LTI(t) against the buffered forecasts and feeds AS(t) back into the
// buffer so it weights future frames.
ScoreRecord detect(size_t t, int64_t timestamp, PredictionBuffer& buffer,
                   const DecayVector& decay, const ScoringParams& params,
                   const FrameDistanceMatrix* cached = nullptr,
                   LanePool* pool = nullptr);

// The chronological per-frame loop: consume a frame, score it once the
// buffer is warm, then store its forecast for the frames ahead. Strictly
// sequential per stream.
class StreamDetector {
 public:
  StreamDetector(Forecaster& forecaster, int L, const ScoringParams& params,
                 unsigned lanes = 1, bool diagnostics = false);

  // Warms the forecaster's recurrent state on frames preceding the scored
  // stream; no forecasts are buffered and nothing is scored. Must precede
  // the first feed().
  void prime(int64_t timestamp, const ValueFrame& values);

  std::optional<ScoreRecord> feed(int64_t timestamp, const ValueFrame& values);
  void reset();

  int horizon() const { return decay_.length; }
  size_t frames_consumed() const { return next_index_; }

 private:
  Forecaster* forecaster_;
  DecayVector decay_;
  ScoringParams params_;
  PredictionBuffer buffer_;
  FrameDistanceMatrix distances_;
  std::unique_ptr<LanePool> pool_;
  bool diagnostics_;
  size_t next_index_ = 0;
  size_t primed_ = 0;
};

}  // namespace adlti
