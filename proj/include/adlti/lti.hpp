#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "adlti/lane_pool.hpp"
#include "adlti/timeseries.hpp"

namespace adlti {

// An L-frame forecast attributed to the frame that produced it: frames cover
// indices source_index+1 .. source_index+L.
struct PredictedSequence {
  size_t source_index = 0;
  std::vector<ValueFrame> frames;

  size_t horizon() const { return frames.size(); }
};

// Dimension-independent frame distance: mean squared per-channel difference,
// not square-rooted; in [0,1] for normalized frames.
double dfdist(const ValueFrame& x, const ValueFrame& y);

// Mean of per-frame dfdist over two equal-length sequences.
double lsdist(std::span<const ValueFrame> a, std::span<const ValueFrame> b);

// Exponential time-decay weights d_i = e^{-(L-i)} and their running
// normalizers D_j = sum_{i=1..j} e^{-(j-i)}.
struct DecayVector {
  int length = 0;
  std::vector<double> d;  // d[i-1], i = 1..L; d[L-1] == 1
  std::vector<double> D;  // D[j-1], j = 1..L

  double weight_from_end(size_t offset) const { return d[d.size() - 1 - offset]; }
};

DecayVector decay_weights(int L);

// Weighted length-independent sequence distance; the last pair is the most
// recent frame and carries weight 1. Sequences must be chronologically
// aligned and no longer than the decay vector.
double wlsdist(std::span<const ValueFrame> actual,
               std::span<const ValueFrame> predicted, const DecayVector& decay);

// Ring of the last L forecasts, their sources' anomaly scores, and the
// actual frames needed to probe them. Single writer; read-only during one
// frame's evaluation.
class PredictionBuffer {
 public:
  explicit PredictionBuffer(int L);

  int capacity() const { return capacity_; }
  size_t source_count() const { return entries_.size(); }
  bool warm(size_t t) const;

  // Frames must arrive with consecutive indices.
  void push_actual(size_t index, ValueFrame values);
  // The forecast made by the most recently pushed frame.
  void push_forecast(PredictedSequence seq);
  // AS(index); defaults to 0 for frames never scored (warm-up).
  void record_score(size_t index, double as);

  size_t latest_index() const { return latest_index_; }
  const ValueFrame& actual(size_t index) const;
  const PredictedSequence& forecast_by(size_t source_index) const;
  double score_of(size_t source_index) const;

  // Oldest live source index (t - L at steady state).
  size_t oldest_source() const { return entries_.front().source_index; }

  // predicted_frame(i, t) = the forecast of frame t made by source i.
  const ValueFrame& predicted_frame(size_t source_index, size_t target) const;

 private:
  int capacity_;
  std::deque<PredictedSequence> entries_;
  std::deque<double> scores_;                 // AS per entry, aligned
  std::deque<std::pair<size_t, ValueFrame>> actuals_;  // last L+1 frames
  size_t latest_index_ = 0;
  bool any_actual_ = false;
};

struct LtiResult {
  double lti = 0.0;
  double z = 0.0;                        // sum of (1 - AS(i)) weights
  std::vector<double> per_source;        // WLSDist per source, oldest first
  bool low_confidence = false;           // Z underflow, uniform fallback used
};

// Direct evaluation of the reliability-weighted ensemble distance at frame t.
LtiResult lti_scalar(size_t t, const PredictionBuffer& buffer,
                     const DecayVector& decay);

// Frame-distance rows for the live sources, right-aligned so that column L
// always holds the newest pair; maintained incrementally in O(m) per new
// (source, frame) pair.
class FrameDistanceMatrix {
 public:
  explicit FrameDistanceMatrix(int L) : capacity_(L) {}

  void on_forecast(size_t source_index);
  void on_actual(size_t index, const ValueFrame& values,
                 const PredictionBuffer& buffer);
  void clear();

  size_t rows() const { return rows_.size(); }
  const std::vector<double>& row(size_t r) const { return rows_[r].df; }
  size_t row_source(size_t r) const { return rows_[r].source_index; }

 private:
  struct Row {
    size_t source_index;
    std::vector<double> df;  // df_source(source+1 .. t), oldest first
  };
  int capacity_;
  std::deque<Row> rows_;
};

// Matrix-form evaluation P N2 N1 D_F T; agrees with lti_scalar bitwise.
// When `cached` is null the frame-distance rows are built from the buffer.
// Row evaluations may fan out across `pool` lanes; the reduction order is
// fixed, so results do not depend on the lane count.
LtiResult lti_matrix(size_t t, const PredictionBuffer& buffer,
                     const DecayVector& decay,
                     const FrameDistanceMatrix* cached = nullptr,
                     LanePool* pool = nullptr);

}  // namespace adlti
