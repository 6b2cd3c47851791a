#include "adlti/decompose.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <future>
#include <numbers>
#include <sstream>

#include "adlti/civil_time.hpp"
#include "adlti/errors.hpp"
#include "json.hpp"

namespace adlti {

namespace {

constexpr int64_t kTwoWeeks = 2 * 7 * 86400;

double knot_position(int k, int knot_count) {
  return static_cast<double>(k) / static_cast<double>(knot_count + 1);
}

ChannelProfile fit_channel(const TimeSeries& series, size_t channel,
                           const DecompositionConfig& config,
                           int utc_offset_seconds, double time_span) {
  const size_t n = series.size();
  const int dord = config.daily_fourier_order;
  const int word = config.weekly_fourier_order;
  const int hinge_cols =
      config.trend == DecompositionConfig::Trend::piecewise_linear
          ? config.trend_knots
          : 0;
  const int cols = 2 + hinge_cols + 2 * dord + 2 * word;

  Eigen::MatrixXd design(n, cols);
  Eigen::VectorXd target(n);
  const int64_t start = series.timestamp(0);
  for (size_t i = 0; i < n; ++i) {
    const int64_t ts = series.timestamp(i);
    const double tn = static_cast<double>(ts - start) / time_span;
    int col = 0;
    design(i, col++) = 1.0;
    design(i, col++) = tn;
    for (int k = 1; k <= hinge_cols; ++k)
      design(i, col++) = std::max(0.0, tn - knot_position(k, hinge_cols));
    const int hour = hour_of_day(ts, utc_offset_seconds);
    for (int k = 1; k <= dord; ++k) {
      const double phase = 2.0 * std::numbers::pi * k * hour / 24.0;
      design(i, col++) = std::sin(phase);
      design(i, col++) = std::cos(phase);
    }
    const int dow = day_of_week(ts, utc_offset_seconds);
    for (int k = 1; k <= word; ++k) {
      const double phase = 2.0 * std::numbers::pi * k * dow / 7.0;
      design(i, col++) = std::sin(phase);
      design(i, col++) = std::cos(phase);
    }
    target(i) = series.values(i)[channel];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < cols)
    throw NumericError("rank-deficient seasonal design matrix for channel '" +
                       series.channel_names()[channel] + "'");
  Eigen::VectorXd beta = qr.solve(target);

  ChannelProfile prof;
  int col = 0;
  prof.trend_intercept = beta(col++);
  prof.trend_slope = beta(col++);
  for (int k = 0; k < hinge_cols; ++k) prof.hinge_coeffs.push_back(beta(col++));

  const int daily_base = col;
  for (int h = 0; h < 24; ++h) {
    double v = 0.0;
    for (int k = 1; k <= dord; ++k) {
      const double phase = 2.0 * std::numbers::pi * k * h / 24.0;
      v += beta(daily_base + 2 * (k - 1)) * std::sin(phase);
      v += beta(daily_base + 2 * (k - 1) + 1) * std::cos(phase);
    }
    prof.daily[h] = v;
  }
  const int weekly_base = daily_base + 2 * dord;
  for (int d = 0; d < 7; ++d) {
    double v = 0.0;
    for (int k = 1; k <= word; ++k) {
      const double phase = 2.0 * std::numbers::pi * k * d / 7.0;
      v += beta(weekly_base + 2 * (k - 1)) * std::sin(phase);
      v += beta(weekly_base + 2 * (k - 1) + 1) * std::cos(phase);
    }
    prof.weekly[d] = v;
  }

  // Seasonal tables are deviations from trend: center them and fold the
  // means into the intercept.
  double dmean = 0.0, wmean = 0.0;
  for (double v : prof.daily) dmean += v;
  dmean /= 24.0;
  for (double v : prof.weekly) wmean += v;
  wmean /= 7.0;
  for (double& v : prof.daily) v -= dmean;
  for (double& v : prof.weekly) v -= wmean;
  prof.trend_intercept += dmean + wmean;

  // Residual spread of the quantized reconstruction actually used downstream.
  double ss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const int64_t ts = series.timestamp(i);
    const double tn = static_cast<double>(ts - start) / time_span;
    double trend = prof.trend_intercept + prof.trend_slope * tn;
    for (size_t k = 0; k < prof.hinge_coeffs.size(); ++k)
      trend += prof.hinge_coeffs[k] *
               std::max(0.0, tn - knot_position(static_cast<int>(k) + 1,
                                                hinge_cols));
    const double recon = trend +
                         prof.daily[hour_of_day(ts, utc_offset_seconds)] +
                         prof.weekly[day_of_week(ts, utc_offset_seconds)];
    const double r = target(i) - recon;
    ss += r * r;
  }
  prof.residual_std = std::sqrt(ss / static_cast<double>(n));
  return prof;
}

}  // namespace

double SeasonalProfile::trend_at(int64_t timestamp, size_t channel) const {
  const ChannelProfile& p = channels[channel];
  const double span = static_cast<double>(fit_end - fit_start);
  const double tn = static_cast<double>(timestamp - fit_start) / span;
  double v = p.trend_intercept + p.trend_slope * tn;
  const int knots = static_cast<int>(p.hinge_coeffs.size());
  for (int k = 1; k <= knots; ++k)
    v += p.hinge_coeffs[k - 1] * std::max(0.0, tn - knot_position(k, knots));
  return v;
}

std::vector<double> SeasonalProfile::seasonal_features(int64_t timestamp) const {
  const int hour = hour_of_day(timestamp, utc_offset_seconds);
  const int dow = day_of_week(timestamp, utc_offset_seconds);
  std::vector<double> f;
  f.reserve(2 * channels.size());
  for (const ChannelProfile& c : channels) {
    f.push_back(c.daily[hour]);
    f.push_back(c.weekly[dow]);
  }
  return f;
}

SeasonalProfile fit_decomposition(const TimeSeries& series,
                                  const DecompositionConfig& config,
                                  int utc_offset_seconds) {
  if (config.daily_fourier_order < 1 || config.weekly_fourier_order < 1)
    throw ConfigError("fourier orders must be >= 1");
  if (series.empty() ||
      static_cast<int64_t>(series.size()) * series.interval() < kTwoWeeks)
    throw DataError("series too short for seasonal fit: need two full weeks, have " +
                    std::to_string(series.size()) + " frames of " +
                    std::to_string(series.interval()) + "s");

  SeasonalProfile profile;
  profile.config = config;
  profile.utc_offset_seconds = utc_offset_seconds;
  profile.fit_start = series.timestamp(0);
  profile.fit_end = series.timestamp(series.size() - 1);
  profile.channel_names = series.channel_names();
  const double time_span = static_cast<double>(profile.fit_end - profile.fit_start);

  // Channels are independent fits.
  std::vector<std::future<ChannelProfile>> fits;
  fits.reserve(series.channel_count());
  for (size_t c = 0; c < series.channel_count(); ++c)
    fits.push_back(std::async(std::launch::async, [&, c] {
      return fit_channel(series, c, config, utc_offset_seconds, time_span);
    }));
  for (auto& f : fits) profile.channels.push_back(f.get());
  return profile;
}

namespace {

using nlohmann::json;

json trend_to_json(const ChannelProfile& p, const DecompositionConfig& cfg) {
  json t;
  t["type"] = cfg.trend == DecompositionConfig::Trend::linear
                  ? "linear"
                  : "piecewise_linear";
  t["intercept"] = p.trend_intercept;
  t["slope"] = p.trend_slope;
  if (!p.hinge_coeffs.empty()) t["hinge_coeffs"] = p.hinge_coeffs;
  return t;
}

}  // namespace

std::string SeasonalProfile::to_json() const {
  json doc;
  doc["config"] = {
      {"daily_fourier_order", config.daily_fourier_order},
      {"weekly_fourier_order", config.weekly_fourier_order},
      {"trend", config.trend == DecompositionConfig::Trend::linear
                    ? "linear"
                    : "piecewise_linear"},
      {"trend_knots", config.trend_knots}};
  doc["utc_offset_seconds"] = utc_offset_seconds;
  doc["fit_start"] = format_iso8601(fit_start);
  doc["fit_end"] = format_iso8601(fit_end);
  doc["channel_order"] = channel_names;
  json chans = json::object();
  for (size_t c = 0; c < channels.size(); ++c) {
    const ChannelProfile& p = channels[c];
    json entry;
    entry["daily"] = p.daily;
    entry["weekly"] = p.weekly;
    entry["trend"] = trend_to_json(p, config);
    entry["residual_std"] = p.residual_std;
    chans[channel_names[c]] = entry;
  }
  doc["channels"] = chans;
  if (normalization) {
    json norm = json::object();
    for (size_t c = 0; c < channel_names.size(); ++c)
      norm[channel_names[c]] = {{"min", normalization->min[c]},
                                {"max", normalization->max[c]}};
    doc["normalization"] = norm;
  }
  return doc.dump(2) + "\n";
}

SeasonalProfile SeasonalProfile::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("invalid profile JSON: ") + e.what());
  }
  SeasonalProfile prof;
  const json& cfg = doc.at("config");
  prof.config.daily_fourier_order = cfg.at("daily_fourier_order").get<int>();
  prof.config.weekly_fourier_order = cfg.at("weekly_fourier_order").get<int>();
  prof.config.trend = cfg.at("trend").get<std::string>() == "linear"
                          ? DecompositionConfig::Trend::linear
                          : DecompositionConfig::Trend::piecewise_linear;
  prof.config.trend_knots = cfg.at("trend_knots").get<int>();
  prof.utc_offset_seconds = doc.at("utc_offset_seconds").get<int>();
  prof.fit_start = parse_iso8601(doc.at("fit_start").get<std::string>());
  prof.fit_end = parse_iso8601(doc.at("fit_end").get<std::string>());
  prof.channel_names = doc.at("channel_order").get<std::vector<std::string>>();
  for (const std::string& name : prof.channel_names) {
    const json& entry = doc.at("channels").at(name);
    ChannelProfile p;
    const auto daily = entry.at("daily").get<std::vector<double>>();
    const auto weekly = entry.at("weekly").get<std::vector<double>>();
    if (daily.size() != 24 || weekly.size() != 7)
      throw DataError("profile tables for '" + name + "' have wrong lengths");
    std::copy(daily.begin(), daily.end(), p.daily.begin());
    std::copy(weekly.begin(), weekly.end(), p.weekly.begin());
    const json& trend = entry.at("trend");
    p.trend_intercept = trend.at("intercept").get<double>();
    p.trend_slope = trend.at("slope").get<double>();
    if (trend.contains("hinge_coeffs"))
      p.hinge_coeffs = trend.at("hinge_coeffs").get<std::vector<double>>();
    p.residual_std = entry.at("residual_std").get<double>();
    prof.channels.push_back(std::move(p));
  }
  if (doc.contains("normalization")) {
    NormalizationParams norm;
    for (const std::string& name : prof.channel_names) {
      const json& entry = doc.at("normalization").at(name);
      norm.min.push_back(entry.at("min").get<double>());
      norm.max.push_back(entry.at("max").get<double>());
    }
    prof.normalization = std::move(norm);
  }
  return prof;
}

void SeasonalProfile::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << to_json();
}

SeasonalProfile SeasonalProfile::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace adlti
