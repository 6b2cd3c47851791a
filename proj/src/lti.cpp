#include "adlti/lti.hpp"

#include <cmath>
#include <string>

#include "adlti/errors.hpp"

namespace adlti {

// ---------------------------------------------------------------- LanePool

LanePool::LanePool(unsigned lanes) : lanes_(lanes == 0 ? 1 : lanes) {
  for (unsigned lane = 1; lane < lanes_; ++lane)
    threads_.emplace_back([this, lane] { worker(lane); });
}

LanePool::~LanePool() {
  stop_.store(true, std::memory_order_release);
  generation_.fetch_add(1, std::memory_order_release);
  for (auto& t : threads_) t.join();
}

void LanePool::worker(unsigned lane) {
  uint64_t seen = 0;
  for (;;) {
    while (generation_.load(std::memory_order_acquire) == seen)
      std::this_thread::yield();
    if (stop_.load(std::memory_order_acquire)) return;
    seen = generation_.load(std::memory_order_acquire);
    const size_t n = task_n_;
    const size_t begin = n * lane / lanes_;
    const size_t end = n * (lane + 1) / lanes_;
    for (size_t i = begin; i < end; ++i) (*task_fn_)(i);
    done_.fetch_add(1, std::memory_order_release);
  }
}

void LanePool::run(size_t n, const std::function<void(size_t)>& fn) {
  if (lanes_ == 1 || n < lanes_) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  task_n_ = n;
  task_fn_ = &fn;
  const uint64_t gen = generation_.fetch_add(1, std::memory_order_release) + 1;
  const size_t end = n * 1 / lanes_;
  for (size_t i = 0; i < end; ++i) fn(i);
  while (done_.load(std::memory_order_acquire) < gen * (lanes_ - 1))
    std::this_thread::yield();
  task_fn_ = nullptr;
}

// --------------------------------------------------------------- distances

double dfdist(const ValueFrame& x, const ValueFrame& y) {
  if (x.size() != y.size())
    throw DataError("dfdist dimension mismatch: " + std::to_string(x.size()) +
                    " vs " + std::to_string(y.size()));
  double acc = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return acc / static_cast<double>(x.size());
}

double lsdist(std::span<const ValueFrame> a, std::span<const ValueFrame> b) {
  if (a.size() != b.size())
    throw DataError("lsdist length mismatch: " + std::to_string(a.size()) +
                    " vs " + std::to_string(b.size()));
  if (a.empty()) throw DataError("lsdist of empty sequences");
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += dfdist(a[i], b[i]);
  return acc / static_cast<double>(a.size());
}

DecayVector decay_weights(int L) {
  if (L < 1) throw ConfigError("decay_weights needs L >= 1");
  DecayVector v;
  v.length = L;
  v.d.resize(L);
  v.D.resize(L);
  for (int i = 1; i <= L; ++i) v.d[i - 1] = std::exp(-(L - i));
  for (int j = 1; j <= L; ++j) {
    double sum = 0.0;  // smallest terms first
    for (int i = 1; i <= j; ++i) sum += std::exp(-(j - i));
    v.D[j - 1] = sum;
  }
  return v;
}

double wlsdist(std::span<const ValueFrame> actual,
               std::span<const ValueFrame> predicted,
               const DecayVector& decay) {
  if (actual.size() != predicted.size())
    throw DataError("wlsdist length mismatch: " +
                    std::to_string(actual.size()) + " vs " +
                    std::to_string(predicted.size()));
  const size_t len = actual.size();
  if (len == 0) throw DataError("wlsdist of empty sequences");
  if (len > static_cast<size_t>(decay.length))
    throw DataError("wlsdist sequences longer than decay vector");
  double num = 0.0;
  for (size_t i = 0; i < len; ++i)
    num += decay.weight_from_end(len - 1 - i) * dfdist(actual[i], predicted[i]);
  return num / decay.D[len - 1];
}

// --------------------------------------------------------- PredictionBuffer

PredictionBuffer::PredictionBuffer(int L) : capacity_(L) {
  if (L < 1) throw ConfigError("prediction buffer needs L >= 1");
}

bool PredictionBuffer::warm(size_t t) const {
  return entries_.size() == static_cast<size_t>(capacity_) &&
         entries_.back().source_index + 1 == t;
}

void PredictionBuffer::push_actual(size_t index, ValueFrame values) {
  if (any_actual_ && index != latest_index_ + 1)
    throw DataError("frames must arrive in order: got index " +
                    std::to_string(index) + " after " +
                    std::to_string(latest_index_));
  actuals_.emplace_back(index, std::move(values));
  while (actuals_.size() > static_cast<size_t>(capacity_) + 1)
    actuals_.pop_front();
  latest_index_ = index;
  any_actual_ = true;
}

void PredictionBuffer::push_forecast(PredictedSequence seq) {
  if (!any_actual_ || seq.source_index != latest_index_)
    throw DataError("forecast source must be the latest frame");
  entries_.push_back(std::move(seq));
  scores_.push_back(0.0);
  while (entries_.size() > static_cast<size_t>(capacity_)) {
    entries_.pop_front();
    scores_.pop_front();
  }
}

void PredictionBuffer::record_score(size_t index, double as) {
  if (as < 0.0 || as > 1.0)
    throw NumericError("anomaly score outside [0,1]: " + std::to_string(as));
  if (entries_.empty() || index < entries_.front().source_index ||
      index > entries_.back().source_index)
    throw DataError("record_score for a source not in the buffer");
  scores_[index - entries_.front().source_index] = as;
}

const ValueFrame& PredictionBuffer::actual(size_t index) const {
  if (actuals_.empty() || index < actuals_.front().first ||
      index > actuals_.back().first)
    throw DataError("actual frame " + std::to_string(index) +
                    " not in the buffer");
  return actuals_[index - actuals_.front().first].second;
}

const PredictedSequence& PredictionBuffer::forecast_by(
    size_t source_index) const {
  if (entries_.empty() || source_index < entries_.front().source_index ||
      source_index > entries_.back().source_index)
    throw DataError("no forecast from source " + std::to_string(source_index));
  return entries_[source_index - entries_.front().source_index];
}

double PredictionBuffer::score_of(size_t source_index) const {
  if (entries_.empty() || source_index < entries_.front().source_index ||
      source_index > entries_.back().source_index)
    throw DataError("no score for source " + std::to_string(source_index));
  return scores_[source_index - entries_.front().source_index];
}

const ValueFrame& PredictionBuffer::predicted_frame(size_t source_index,
                                                    size_t target) const {
  const PredictedSequence& seq = forecast_by(source_index);
  const size_t offset = target - source_index - 1;
  if (target <= source_index || offset >= seq.horizon())
    throw DataError("source " + std::to_string(source_index) +
                    " has no forecast for frame " + std::to_string(target));
  return seq.frames[offset];
}

// --------------------------------------------------------------------- LTI

namespace {

constexpr double kZFloor = 1e-9;

struct SourceSpan {
  size_t first_source;
  size_t count;
};

SourceSpan live_sources(size_t t, const PredictionBuffer& buffer) {
  if (buffer.source_count() == 0)
    throw DataError("warm-up: no forecast sources buffered for frame " +
                    std::to_string(t));
  const size_t oldest = buffer.oldest_source();
  if (oldest >= t)
    throw DataError("no sources precede frame " + std::to_string(t));
  // Sources t-L .. t-1, truncated to what the buffer holds.
  const size_t newest = oldest + buffer.source_count() - 1;
  if (newest + 1 != t)
    throw DataError("warm-up: buffer ends at source " + std::to_string(newest) +
                    ", cannot score frame " + std::to_string(t));
  return SourceSpan{oldest, buffer.source_count()};
}

// Shared final reduction: per_source holds WLSDist per source, oldest first.
LtiResult reduce(const std::vector<double>& per_source, size_t first_source,
                 const PredictionBuffer& buffer) {
  LtiResult res;
  res.per_source = per_source;
  const size_t n = per_source.size();
  double z = 0.0;
  for (size_t i = 0; i < n; ++i) z += 1.0 - buffer.score_of(first_source + i);
  if (z < kZFloor) {
    // All sources deemed anomalous; Eq. (11) is undefined. Fall back to
    // uniform weights and flag the frame.
    res.low_confidence = true;
    res.z = static_cast<double>(n);
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += per_source[i] / res.z;
    res.lti = acc;
    return res;
  }
  res.z = z;
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i)
    acc += ((1.0 - buffer.score_of(first_source + i)) / z) * per_source[i];
  res.lti = acc;
  return res;
}

}  // namespace

LtiResult lti_scalar(size_t t, const PredictionBuffer& buffer,
                     const DecayVector& decay) {
  const SourceSpan span = live_sources(t, buffer);
  std::vector<double> per_source(span.count);
  std::vector<ValueFrame> actual_window;
  actual_window.reserve(decay.length);
  for (size_t k = 0; k < span.count; ++k) {
    const size_t src = span.first_source + k;
    const size_t len = t - src;
    actual_window.clear();
    for (size_t v = src + 1; v <= t; ++v)
      actual_window.push_back(buffer.actual(v));
    const PredictedSequence& seq = buffer.forecast_by(src);
    if (seq.horizon() < len)
      throw DataError("forecast from source " + std::to_string(src) +
                      " does not cover frame " + std::to_string(t));
    per_source[k] =
        wlsdist(std::span<const ValueFrame>(actual_window),
                std::span<const ValueFrame>(seq.frames.data(), len), decay);
  }
  return reduce(per_source, span.first_source, buffer);
}

void FrameDistanceMatrix::on_forecast(size_t source_index) {
  rows_.push_back(Row{source_index, {}});
  while (rows_.size() > static_cast<size_t>(capacity_)) rows_.pop_front();
}

void FrameDistanceMatrix::on_actual(size_t index, const ValueFrame& values,
                                    const PredictionBuffer& buffer) {
  for (Row& row : rows_) {
    if (row.source_index >= index) continue;  // batch rebuild only
    row.df.push_back(dfdist(values, buffer.predicted_frame(row.source_index,
                                                           index)));
  }
}

void FrameDistanceMatrix::clear() { rows_.clear(); }

LtiResult lti_matrix(size_t t, const PredictionBuffer& buffer,
                     const DecayVector& decay,
                     const FrameDistanceMatrix* cached, LanePool* pool) {
  const SourceSpan span = live_sources(t, buffer);
  const size_t n = span.count;
  const int L = decay.length;

  // Assemble (or reuse) the right-aligned frame-distance rows. The batch
  // rebuild replays the online update so both paths share the arithmetic.
  FrameDistanceMatrix scratch(L);
  const FrameDistanceMatrix* dfm = cached;
  if (dfm == nullptr) {
    for (size_t k = 0; k < n; ++k) scratch.on_forecast(span.first_source + k);
    for (size_t v = span.first_source + 1; v <= t; ++v)
      scratch.on_actual(v, buffer.actual(v), buffer);
    dfm = &scratch;
  }
  if (dfm->rows() != n || dfm->row_source(0) != span.first_source)
    throw DataError("frame-distance matrix out of sync with buffer");

  // D_S = N1 * D_F * T, one row per source; rows are independent.
  std::vector<double> per_source(n);
  const std::function<void(size_t)> row_fn = [&](size_t k) {
    const std::vector<double>& df = dfm->row(k);
    const size_t len = t - dfm->row_source(k);
    if (df.size() != len)
      throw DataError("frame-distance row has stale length");
    double acc = 0.0;  // dot with the right-aligned tail of T
    for (size_t p = 0; p < len; ++p) acc += df[p] * decay.d[L - len + p];
    per_source[k] = acc / decay.D[len - 1];
  };
  if (pool != nullptr) {
    pool->run(n, row_fn);
  } else {
    for (size_t k = 0; k < n; ++k) row_fn(k);
  }
  return reduce(per_source, span.first_source, buffer);
}

}  // namespace adlti
