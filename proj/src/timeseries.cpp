#include "adlti/timeseries.hpp"

#include <algorithm>
#include <cmath>

#include "adlti/civil_time.hpp"
#include "adlti/errors.hpp"

namespace adlti {

TimeSeries::TimeSeries(std::vector<std::string> channel_names,
                       int64_t interval_seconds,
                       std::vector<int64_t> timestamps,
                       std::vector<ValueFrame> values)
    : channel_names_(std::move(channel_names)),
      interval_(interval_seconds),
      timestamps_(std::move(timestamps)),
      values_(std::move(values)) {
  if (timestamps_.size() != values_.size())
    throw DataError("timestamp/value count mismatch");
  const size_t m = channel_names_.size();
  for (size_t i = 0; i < values_.size(); ++i) {
    if (values_[i].size() != m)
      throw DataError("frame " + std::to_string(i) + " has " +
                      std::to_string(values_[i].size()) + " channels, series has " +
                      std::to_string(m));
    if (i > 0 && timestamps_[i] != timestamps_[i - 1] + interval_)
      throw DataError("timestamps not on a fixed grid at frame " +
                      std::to_string(i) + " (" + format_iso8601(timestamps_[i]) +
                      ")");
  }
}

TimeSeries TimeSeries::slice(size_t start, size_t len) const {
  if (start + len > size()) throw DataError("slice out of range");
  return TimeSeries(
      channel_names_, interval_,
      std::vector<int64_t>(timestamps_.begin() + start,
                           timestamps_.begin() + start + len),
      std::vector<ValueFrame>(values_.begin() + start,
                              values_.begin() + start + len));
}

LocalSequence local_sequence(const TimeSeries& series, size_t start_index,
                             size_t end_index) {
  if (end_index < start_index || end_index >= series.size())
    throw DataError("invalid local sequence bounds");
  return LocalSequence{start_index, end_index,
                       series.value_span(start_index,
                                         end_index - start_index + 1)};
}

TimeSeries aggregate_to_interval(const TimeSeries& series, int64_t target,
                                 Reducer reducer) {
  if (series.empty()) throw DataError("cannot aggregate an empty series");
  if (target <= 0 || target % series.interval() != 0)
    throw DataError("target interval " + std::to_string(target) +
                    "s is not a multiple of the series interval " +
                    std::to_string(series.interval()) + "s");
  const size_t window = static_cast<size_t>(target / series.interval());
  if (window == 1) return series;

  const size_t m = series.channel_count();
  const size_t out_n = series.size() / window;
  std::vector<int64_t> timestamps;
  std::vector<ValueFrame> values;
  timestamps.reserve(out_n);
  values.reserve(out_n);
  for (size_t w = 0; w < out_n; ++w) {
    ValueFrame acc(m, 0.0);
    for (size_t j = 0; j < window; ++j) {
      const ValueFrame& v = series.values(w * window + j);
      for (size_t c = 0; c < m; ++c) acc[c] += v[c];
    }
    if (reducer == Reducer::mean)
      for (size_t c = 0; c < m; ++c) acc[c] /= static_cast<double>(window);
    timestamps.push_back(series.timestamp(w * window));
    values.push_back(std::move(acc));
  }
  return TimeSeries(series.channel_names(), target, std::move(timestamps),
                    std::move(values));
}

NormalizationParams fit_normalization(const TimeSeries& series) {
  if (series.empty()) throw DataError("cannot fit normalization on empty series");
  const size_t m = series.channel_count();
  NormalizationParams p;
  p.min.assign(m, std::numeric_limits<double>::infinity());
  p.max.assign(m, -std::numeric_limits<double>::infinity());
  for (size_t i = 0; i < series.size(); ++i) {
    const ValueFrame& v = series.values(i);
    for (size_t c = 0; c < m; ++c) {
      p.min[c] = std::min(p.min[c], v[c]);
      p.max[c] = std::max(p.max[c], v[c]);
    }
  }
  return p;
}

TimeSeries normalize(const TimeSeries& series, const NormalizationParams& p) {
  const size_t m = series.channel_count();
  if (p.channel_count() != m)
    throw DataError("normalization params have " +
                    std::to_string(p.channel_count()) + " channels, series has " +
                    std::to_string(m));
  std::vector<int64_t> timestamps;
  std::vector<ValueFrame> values;
  timestamps.reserve(series.size());
  values.reserve(series.size());
  for (size_t i = 0; i < series.size(); ++i) {
    ValueFrame v = series.values(i);
    for (size_t c = 0; c < m; ++c) {
      if (p.degenerate(c)) {
        v[c] = 0.0;
      } else {
        v[c] = std::clamp((v[c] - p.min[c]) / (p.max[c] - p.min[c]), 0.0, 1.0);
      }
    }
    timestamps.push_back(series.timestamp(i));
    values.push_back(std::move(v));
  }
  return TimeSeries(series.channel_names(), series.interval(),
                    std::move(timestamps), std::move(values));
}

TimeSeries denormalize(const TimeSeries& series, const NormalizationParams& p) {
  const size_t m = series.channel_count();
  if (p.channel_count() != m) throw DataError("normalization channel mismatch");
  std::vector<int64_t> timestamps;
  std::vector<ValueFrame> values;
  timestamps.reserve(series.size());
  values.reserve(series.size());
  for (size_t i = 0; i < series.size(); ++i) {
    ValueFrame v = series.values(i);
    for (size_t c = 0; c < m; ++c) {
      v[c] = p.degenerate(c) ? p.min[c] : p.min[c] + v[c] * (p.max[c] - p.min[c]);
    }
    timestamps.push_back(series.timestamp(i));
    values.push_back(std::move(v));
  }
  return TimeSeries(series.channel_names(), series.interval(),
                    std::move(timestamps), std::move(values));
}

SeriesSplits split(const TimeSeries& series, size_t train_len, size_t val_len,
                   size_t test_len) {
  if (train_len + val_len + test_len > series.size())
    throw DataError("split lengths (" + std::to_string(train_len) + "+" +
                    std::to_string(val_len) + "+" + std::to_string(test_len) +
                    ") exceed series length " + std::to_string(series.size()));
  SeriesSplits s;
  s.train = series.slice(0, train_len);
  s.validation = series.slice(train_len, val_len);
  s.test = series.slice(train_len + val_len, test_len);
  return s;
}

}  // namespace adlti
