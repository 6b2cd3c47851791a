#include "adlti/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "adlti/civil_time.hpp"
#include "adlti/errors.hpp"

namespace adlti {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_real(const std::string& field, size_t row, size_t col) {
  const std::string t = strip(field);
  double v = 0.0;
  const char* begin = t.data();
  const char* end = begin + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw DataError("malformed value at row " + std::to_string(row) +
                    ", column " + std::to_string(col) + ": '" + field + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  // %.17g round-trips every finite double.
  int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
  std::string s(buf, n);
  double back = std::strtod(s.c_str(), nullptr);
  if (back == v) {
    // Prefer the shortest form that still round-trips.
    for (int prec = 1; prec < 17; ++prec) {
      n = std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
      if (std::strtod(buf, nullptr) == v) return std::string(buf, n);
    }
  }
  return s;
}

TimeSeries load_series_csv(const std::string& path, GapPolicy gaps) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: '" + path + "'");
  std::vector<std::string> header = split_line(line);
  if (header.size() < 2)
    throw DataError("header needs a timestamp and at least one channel: '" +
                    path + "'");
  std::vector<std::string> channels(header.begin() + 1, header.end());
  for (auto& c : channels) c = strip(c);
  const size_t m = channels.size();

  std::vector<int64_t> timestamps;
  std::vector<ValueFrame> values;
  size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (strip(line).empty()) continue;
    std::vector<std::string> fields = split_line(line);
    if (fields.size() != m + 1)
      throw DataError("row " + std::to_string(row) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(m + 1));
    int64_t ts;
    try {
      ts = parse_iso8601(strip(fields[0]));
    } catch (const DataError& e) {
      throw DataError("row " + std::to_string(row) + ", column 1: " + e.what());
    }
    ValueFrame v(m);
    for (size_t c = 0; c < m; ++c) v[c] = parse_real(fields[c + 1], row, c + 2);
    if (!timestamps.empty() && ts <= timestamps.back())
      throw DataError("non-monotonic timestamp at row " + std::to_string(row) +
                      " (" + format_iso8601(ts) + ")");
    timestamps.push_back(ts);
    values.push_back(std::move(v));
  }
  if (timestamps.empty()) throw DataError("no data rows in '" + path + "'");
  if (timestamps.size() == 1)
    return TimeSeries(channels, 3600, std::move(timestamps), std::move(values));

  // The grid interval is the smallest observed spacing; larger deltas are
  // gaps on that grid.
  int64_t interval = timestamps[1] - timestamps[0];
  for (size_t i = 2; i < timestamps.size(); ++i)
    interval = std::min(interval, timestamps[i] - timestamps[i - 1]);
  // Gap check / fill.
  std::vector<int64_t> full_ts;
  std::vector<ValueFrame> full_vals;
  full_ts.push_back(timestamps[0]);
  full_vals.push_back(values[0]);
  for (size_t i = 1; i < timestamps.size(); ++i) {
    const int64_t gap = timestamps[i] - timestamps[i - 1];
    if (gap == interval) {
      full_ts.push_back(timestamps[i]);
      full_vals.push_back(values[i]);
      continue;
    }
    if (gap % interval != 0)
      throw DataError("timestamp off the " + std::to_string(interval) +
                      "s grid at " + format_iso8601(timestamps[i]));
    if (gaps == GapPolicy::error)
      throw DataError("missing frame at " +
                      format_iso8601(timestamps[i - 1] + interval));
    const int64_t steps = gap / interval;
    for (int64_t s = 1; s < steps; ++s) {
      const double frac = static_cast<double>(s) / static_cast<double>(steps);
      ValueFrame v(m);
      for (size_t c = 0; c < m; ++c)
        v[c] = values[i - 1][c] + frac * (values[i][c] - values[i - 1][c]);
      full_ts.push_back(timestamps[i - 1] + s * interval);
      full_vals.push_back(std::move(v));
    }
    full_ts.push_back(timestamps[i]);
    full_vals.push_back(values[i]);
  }
  return TimeSeries(channels, interval, std::move(full_ts),
                    std::move(full_vals));
}

void write_series_csv(const std::string& path, const TimeSeries& series) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "timestamp";
  for (const auto& c : series.channel_names()) out << ',' << c;
  out << '\n';
  for (size_t i = 0; i < series.size(); ++i) {
    out << format_iso8601(series.timestamp(i));
    for (double v : series.values(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

LabelTrack load_labels_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: '" + path + "'");
  LabelTrack track;
  size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (strip(line).empty()) continue;
    std::vector<std::string> fields = split_line(line);
    if (fields.size() != 2)
      throw DataError("label row " + std::to_string(row) +
                      " needs 2 fields, has " + std::to_string(fields.size()));
    int64_t ts;
    try {
      ts = parse_iso8601(strip(fields[0]));
    } catch (const DataError& e) {
      throw DataError("row " + std::to_string(row) + ", column 1: " + e.what());
    }
    const std::string lab = strip(fields[1]);
    if (lab != "0" && lab != "1")
      throw DataError("label at row " + std::to_string(row) +
                      " must be 0 or 1, got '" + lab + "'");
    track.timestamps.push_back(ts);
    track.labels.push_back(lab == "1" ? 1 : 0);
  }
  return track;
}

void write_labels_csv(const std::string& path, const LabelTrack& labels) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "timestamp,label\n";
  for (size_t i = 0; i < labels.size(); ++i)
    out << format_iso8601(labels.timestamps[i]) << ','
        << static_cast<int>(labels.labels[i]) << '\n';
}

}  // namespace adlti
