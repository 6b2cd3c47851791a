#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace adlti {

// One multi-channel reading; values are kept separate from timestamps so a
// contiguous frame window can be handed out as a span.
using ValueFrame = std::vector<double>;

struct Frame {
  int64_t timestamp = 0;
  ValueFrame values;
};

// Fixed-interval, timestamped, m-channel sequence. Immutable after
// construction; safe to share across threads.
class TimeSeries {
 public:
  TimeSeries() = default;
  TimeSeries(std::vector<std::string> channel_names, int64_t interval_seconds,
             std::vector<int64_t> timestamps, std::vector<ValueFrame> values);

  size_t size() const { return timestamps_.size(); }
  bool empty() const { return timestamps_.empty(); }
  size_t channel_count() const { return channel_names_.size(); }
  int64_t interval() const { return interval_; }

  const std::vector<std::string>& channel_names() const {
    return channel_names_;
  }
  int64_t timestamp(size_t i) const { return timestamps_[i]; }
  const ValueFrame& values(size_t i) const { return values_[i]; }
  const std::vector<ValueFrame>& all_values() const { return values_; }
  Frame frame(size_t i) const { return Frame{timestamps_[i], values_[i]}; }

  std::span<const ValueFrame> value_span(size_t start, size_t len) const {
    return std::span<const ValueFrame>(values_.data() + start, len);
  }

  // Contiguous copy [start, start+len).
  TimeSeries slice(size_t start, size_t len) const;

 private:
  std::vector<std::string> channel_names_;
  int64_t interval_ = 0;
  std::vector<int64_t> timestamps_;
  std::vector<ValueFrame> values_;
};

// Fragment of a series spanning frame indices [start_index, end_index].
struct LocalSequence {
  size_t start_index = 0;
  size_t end_index = 0;
  std::span<const ValueFrame> frames;

  size_t length() const { return end_index - start_index + 1; }
};

LocalSequence local_sequence(const TimeSeries& series, size_t start_index,
                             size_t end_index);

// Per-channel min/max fitted on the training split.
struct NormalizationParams {
  std::vector<double> min;
  std::vector<double> max;

  size_t channel_count() const { return min.size(); }
  bool degenerate(size_t channel) const {
    return max[channel] <= min[channel];
  }
};

// Binary per-frame annotation aligned to a series span by timestamp.
struct LabelTrack {
  std::vector<int64_t> timestamps;
  std::vector<uint8_t> labels;  // 0 normal, 1 anomalous

  size_t size() const { return timestamps.size(); }
};

enum class Reducer { sum, mean };

// Reduces full windows of `target / interval` frames; drops a partial
// trailing window. Output timestamps are window starts.
TimeSeries aggregate_to_interval(const TimeSeries& series, int64_t target,
                                 Reducer reducer);

NormalizationParams fit_normalization(const TimeSeries& series);

// x' = (x - min)/(max - min), clamped to [0,1]; degenerate channels map to 0.
TimeSeries normalize(const TimeSeries& series, const NormalizationParams& p);
TimeSeries denormalize(const TimeSeries& series, const NormalizationParams& p);

struct SeriesSplits {
  TimeSeries train;
  TimeSeries validation;
  TimeSeries test;
};

SeriesSplits split(const TimeSeries& series, size_t train_len, size_t val_len,
                   size_t test_len);

}  // namespace adlti
