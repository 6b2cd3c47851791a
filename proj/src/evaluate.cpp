#include "adlti/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <unordered_map>

#include "adlti/civil_time.hpp"
#include "adlti/csv.hpp"
#include "adlti/errors.hpp"
#include "json.hpp"

namespace adlti {

RocCurve roc_auc(const std::vector<double>& scores,
                 const std::vector<uint8_t>& labels) {
  if (scores.size() != labels.size())
    throw DataError("roc_auc: " + std::to_string(scores.size()) +
                    " scores vs " + std::to_string(labels.size()) + " labels");
  if (scores.empty()) throw DataError("roc_auc: empty input");
  size_t positives = 0;
  for (uint8_t l : labels) positives += l ? 1 : 0;
  const size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0)
    throw NumericError("undefined AUC: labels contain a single class");

  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });

  RocCurve curve;
  curve.points.emplace_back(0.0, 0.0);
  size_t tp = 0, fp = 0;
  size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    // One sweep step per distinct score: ties enter together.
    while (i < order.size() && scores[order[i]] == s) {
      if (labels[order[i]])
        ++tp;
      else
        ++fp;
      ++i;
    }
    curve.points.emplace_back(static_cast<double>(fp) / negatives,
                              static_cast<double>(tp) / positives);
  }
  double auc = 0.0;
  for (size_t p = 1; p < curve.points.size(); ++p) {
    const auto& [x0, y0] = curve.points[p - 1];
    const auto& [x1, y1] = curve.points[p];
    auc += (x1 - x0) * (y0 + y1) * 0.5;
  }
  curve.auc = auc;
  return curve;
}

void RocCurve::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "fpr,tpr\n";
  for (const auto& [fpr, tpr] : points)
    out << format_double(fpr) << ',' << format_double(tpr) << '\n';
  out << "# AUC = " << format_double(auc) << '\n';
}

std::pair<std::vector<double>, std::vector<uint8_t>> align_scores_labels(
    const ScoreStream& scores, const LabelTrack& labels) {
  std::unordered_map<int64_t, uint8_t> by_ts;
  by_ts.reserve(labels.size());
  for (size_t i = 0; i < labels.size(); ++i)
    by_ts.emplace(labels.timestamps[i], labels.labels[i]);
  std::vector<double> s;
  std::vector<uint8_t> l;
  s.reserve(scores.records.size());
  l.reserve(scores.records.size());
  for (const ScoreRecord& r : scores.records) {
    auto it = by_ts.find(r.timestamp);
    if (it == by_ts.end())
      throw DataError("no label for scored frame at " +
                      format_iso8601(r.timestamp));
    s.push_back(r.as);
    l.push_back(it->second);
  }
  return {std::move(s), std::move(l)};
}

// ------------------------------------------------------------- synthetic

std::pair<TimeSeries, LabelTrack> generate_synthetic(const SyntheticSpec& spec) {
  if (spec.channels == 0 || spec.length == 0)
    throw ConfigError("synthetic spec needs channels >= 1 and length >= 1");
  auto amp = [](const std::vector<double>& v, size_t c) {
    if (v.empty()) return 0.0;
    return v[c < v.size() ? c : v.size() - 1];
  };
  for (const AnomalyInjection& inj : spec.injections)
    if (inj.index + inj.duration > spec.length)
      throw ConfigError("injection at " + std::to_string(inj.index) +
                        " runs past the series end");

  std::mt19937_64 rng(spec.rng_seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<uint8_t> labels(spec.length, 0);
  std::vector<double> bump(spec.length, 0.0);
  for (const AnomalyInjection& inj : spec.injections)
    for (size_t t = inj.index; t < inj.index + inj.duration; ++t) {
      bump[t] += inj.magnitude;
      labels[t] = 1;
    }

  std::vector<int64_t> timestamps(spec.length);
  std::vector<ValueFrame> values(spec.length, ValueFrame(spec.channels));
  std::vector<std::string> names;
  for (size_t c = 0; c < spec.channels; ++c)
    names.push_back("ch" + std::to_string(c));

  for (size_t t = 0; t < spec.length; ++t) {
    const int64_t ts = spec.start_epoch + static_cast<int64_t>(t) * spec.interval;
    timestamps[t] = ts;
    const int hour = hour_of_day(ts);
    const int dow = day_of_week(ts);
    const double progress = static_cast<double>(t) / spec.length;
    for (size_t c = 0; c < spec.channels; ++c) {
      const double daily =
          amp(spec.daily_amplitude, c) *
          std::sin(2.0 * std::numbers::pi * (hour + 3.0 * c) / 24.0);
      // Two-level week: weekdays up, weekend down, zero mean over the week.
      const double weekly =
          amp(spec.weekly_amplitude, c) * (dow < 5 ? 0.4 : -1.0);
      double v = spec.base + spec.trend_rise * progress + daily + weekly +
                 bump[t];
      if (spec.noise_std > 0.0) v += spec.noise_std * noise(rng);
      values[t][c] = v;
    }
  }
  TimeSeries series(names, spec.interval, std::move(timestamps),
                    std::move(values));
  LabelTrack track;
  track.timestamps.reserve(spec.length);
  for (size_t t = 0; t < spec.length; ++t)
    track.timestamps.push_back(series.timestamp(t));
  track.labels = std::move(labels);
  return {std::move(series), std::move(track)};
}

std::vector<AnomalyInjection> random_injections(
    size_t length, size_t count, size_t min_duration, size_t max_duration,
    double min_magnitude, double max_magnitude, size_t min_index,
    uint64_t seed) {
  if (max_duration < min_duration || max_duration >= length)
    throw ConfigError("bad injection durations");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> pos(min_index,
                                            length - max_duration - 1);
  std::uniform_int_distribution<size_t> dur(min_duration, max_duration);
  std::uniform_real_distribution<double> mag(min_magnitude, max_magnitude);
  std::bernoulli_distribution downward(0.35);

  std::vector<AnomalyInjection> out;
  size_t attempts = 0;
  while (out.size() < count && attempts < count * 200) {
    ++attempts;
    AnomalyInjection inj;
    inj.index = pos(rng);
    inj.duration = dur(rng);
    inj.magnitude = mag(rng);
    if (downward(rng)) inj.magnitude = -inj.magnitude;
    bool overlaps = false;
    for (const AnomalyInjection& other : out) {
      const size_t a0 = inj.index > 2 ? inj.index - 2 : 0;
      const size_t a1 = inj.index + inj.duration + 2;
      if (a0 < other.index + other.duration && other.index < a1) {
        overlaps = true;
        break;
      }
    }
    if (!overlaps) out.push_back(inj);
  }
  if (out.size() < count)
    throw ConfigError("could not place " + std::to_string(count) +
                      " non-overlapping injections");
  std::sort(out.begin(), out.end(),
            [](const AnomalyInjection& a, const AnomalyInjection& b) {
              return a.index < b.index;
            });
  return out;
}

// ------------------------------------------------------------------ bench

std::string BenchReport::to_json() const {
  nlohmann::json doc;
  doc["L"] = L;
  doc["channels"] = channels;
  doc["lanes"] = lanes;
  doc["frames"] = frames;
  doc["mean_ms"] = mean_ms;
  doc["p50_ms"] = p50_ms;
  doc["p99_ms"] = p99_ms;
  return doc.dump(2) + "\n";
}

void BenchReport::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << to_json();
}

BenchReport bench_detection(Forecaster& forecaster, const TimeSeries& series,
                            int L, const ScoringParams& params, unsigned lanes,
                            ScoreStream* out_scores) {
  StreamDetector detector(forecaster, L, params, lanes);
  std::vector<double> latencies_ms;
  latencies_ms.reserve(series.size());
  ScoreStream stream;
  for (size_t i = 0; i < series.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    auto rec = detector.feed(series.timestamp(i), series.values(i));
    const auto t1 = std::chrono::steady_clock::now();
    latencies_ms.push_back(
        std::chrono::duration<double, std::milli>(t1 - t0).count());
    if (rec) stream.records.push_back(std::move(*rec));
  }
  if (out_scores != nullptr) *out_scores = std::move(stream);

  BenchReport report;
  report.L = L;
  report.channels = series.channel_count();
  report.lanes = lanes;
  report.frames = latencies_ms.size();
  double sum = 0.0;
  for (double v : latencies_ms) sum += v;
  report.mean_ms = sum / static_cast<double>(latencies_ms.size());
  std::vector<double> sorted = latencies_ms;
  std::sort(sorted.begin(), sorted.end());
  report.p50_ms = sorted[sorted.size() / 2];
  report.p99_ms = sorted[std::min(sorted.size() - 1,
                                  static_cast<size_t>(sorted.size() * 0.99))];
  return report;
}

}  // namespace adlti
