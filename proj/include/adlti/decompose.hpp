#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "adlti/timeseries.hpp"

namespace adlti {

struct DecompositionConfig {
  enum class Trend { linear, piecewise_linear };

  int daily_fourier_order = 4;
  int weekly_fourier_order = 3;
  Trend trend = Trend::linear;
  int trend_knots = 3;  // interior knots for piecewise_linear
};

// Per-channel additive fit: trend(t) + daily[hour] + weekly[dow] + residual.
struct ChannelProfile {
  std::array<double, 24> daily{};
  std::array<double, 7> weekly{};
  double trend_intercept = 0.0;
  double trend_slope = 0.0;               // per unit of normalized fit time
  std::vector<double> hinge_coeffs;       // piecewise_linear only
  double residual_std = 0.0;
};

class SeasonalProfile {
 public:
  DecompositionConfig config;
  int utc_offset_seconds = 0;
  int64_t fit_start = 0;  // normalized-time anchors for trend evaluation
  int64_t fit_end = 0;
  std::vector<std::string> channel_names;
  std::vector<ChannelProfile> channels;
  std::optional<NormalizationParams> normalization;

  size_t channel_count() const { return channels.size(); }

  double trend_at(int64_t timestamp, size_t channel) const;

  // 2m features, channel-major, (daily[hour], weekly[dow]) within channel.
  std::vector<double> seasonal_features(int64_t timestamp) const;

  std::string to_json() const;
  static SeasonalProfile from_json(const std::string& text);
  void save(const std::string& path) const;
  static SeasonalProfile load(const std::string& path);
};

// Least-squares fit of trend plus daily/weekly Fourier terms per channel,
// then evaluation into the 24/7 lookup tables (centered to zero mean).
// Requires at least two full weeks of frames.
SeasonalProfile fit_decomposition(const TimeSeries& series,
                                  const DecompositionConfig& config,
                                  int utc_offset_seconds = 0);

}  // namespace adlti
