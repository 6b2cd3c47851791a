#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>

#include "adlti/civil_time.hpp"
#include "adlti/decompose.hpp"
#include "adlti/errors.hpp"
#include "doctest.h"
#include "testutil.hpp"

using namespace adlti;
using testutil::kMonday;
using testutil::make_series;

namespace {

double reconstruction(const SeasonalProfile& p, size_t c, int64_t ts) {
  return p.trend_at(ts, c) + p.channels[c].daily[hour_of_day(ts)] +
         p.channels[c].weekly[day_of_week(ts)];
}

}  // namespace

TEST_CASE("constant channel decomposes to zero seasonal terms") {
  const TimeSeries s = make_series(1, 2 * 168, 3600, kMonday,
                                   [](size_t, size_t) { return 0.42; });
  const SeasonalProfile p = fit_decomposition(s, DecompositionConfig{});
  for (double v : p.channels[0].daily) CHECK(std::abs(v) < 1e-9);
  for (double v : p.channels[0].weekly) CHECK(std::abs(v) < 1e-9);
  CHECK(p.channels[0].trend_slope == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(reconstruction(p, 0, s.timestamp(17)) ==
        doctest::Approx(0.42).epsilon(1e-9));
  CHECK(p.channels[0].residual_std < 1e-9);
}

TEST_CASE("daily sinusoid is recovered exactly, weekly stays flat") {
  const TimeSeries s =
      make_series(1, 3 * 168, 3600, kMonday, [](size_t i, size_t) {
        return std::sin(2.0 * std::numbers::pi * (i % 24) / 24.0);
      });
  const SeasonalProfile p = fit_decomposition(s, DecompositionConfig{});
  for (int h = 0; h < 24; ++h) {
    const double expect = std::sin(2.0 * std::numbers::pi * h / 24.0);
    CHECK(std::abs(p.channels[0].daily[h] - expect) < 1e-6);
  }
  for (double v : p.channels[0].weekly) CHECK(std::abs(v) < 1e-6);
  CHECK(p.channels[0].residual_std < 1e-6);
}

TEST_CASE("weekday/weekend step recovered within 2% of step height") {
  // Linear ramp plus a two-level week: +0.10 weekdays, -0.25 weekends.
  const double step_height = 0.35;
  const size_t n = 6 * 168;
  const TimeSeries s = make_series(1, n, 3600, kMonday, [](size_t i, size_t) {
    const int dow = static_cast<int>((i / 24) % 7);
    return 0.0002 * static_cast<double>(i) + (dow < 5 ? 0.10 : -0.25);
  });
  const SeasonalProfile p = fit_decomposition(s, DecompositionConfig{});

  // Brute-force oracle: least-squares linear detrend, then per-day means.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i), y = s.values(i)[0];
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double nb = static_cast<double>(n);
  const double slope = (nb * sxy - sx * sy) / (nb * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / nb;
  double day_sum[7] = {0};
  size_t day_count[7] = {0};
  for (size_t i = 0; i < n; ++i) {
    const int dow = static_cast<int>((i / 24) % 7);
    day_sum[dow] += s.values(i)[0] - (intercept + slope * i);
    day_count[dow] += 1;
  }
  double oracle[7];
  double mean = 0;
  for (int d = 0; d < 7; ++d) {
    oracle[d] = day_sum[d] / day_count[d];
    mean += oracle[d];
  }
  mean /= 7.0;
  for (int d = 0; d < 7; ++d)
    CHECK(std::abs(p.channels[0].weekly[d] - (oracle[d] - mean)) <
          0.02 * step_height);
}

TEST_CASE("seasonal tables are centered and sized") {
  const TimeSeries s =
      make_series(3, 2 * 168 + 5, 3600, kMonday, [](size_t i, size_t c) {
        return std::sin(2.0 * std::numbers::pi * (i % 24) / 24.0 + c) +
               0.1 * ((i / 24) % 7);
      });
  const SeasonalProfile p = fit_decomposition(s, DecompositionConfig{});
  for (const ChannelProfile& ch : p.channels) {
    double dsum = 0, wsum = 0;
    for (double v : ch.daily) dsum += v;
    for (double v : ch.weekly) wsum += v;
    CHECK(std::abs(dsum) <= 1e-6);
    CHECK(std::abs(wsum) <= 1e-6);
  }
}

TEST_CASE("seasonal_features width and ordering") {
  const TimeSeries s2 =
      make_series(2, 2 * 168, 3600, kMonday, [](size_t i, size_t c) {
        return std::sin(2.0 * std::numbers::pi * (i % 24 + 6.0 * c) / 24.0);
      });
  const SeasonalProfile p2 = fit_decomposition(s2, DecompositionConfig{});
  const std::vector<double> f2 = p2.seasonal_features(kMonday + 7 * 3600);
  REQUIRE(f2.size() == 4);  // raw 2 + seasonal 4 = the "2+4" input row
  CHECK(f2[0] == p2.channels[0].daily[7]);
  CHECK(f2[1] == p2.channels[0].weekly[0]);
  CHECK(f2[2] == p2.channels[1].daily[7]);
  CHECK(f2[3] == p2.channels[1].weekly[0]);

  const TimeSeries s5 =
      make_series(5, 2 * 168, 3600, kMonday, [](size_t i, size_t c) {
        return std::cos(2.0 * std::numbers::pi * (i % 24) / 24.0 + c);
      });
  const SeasonalProfile p5 = fit_decomposition(s5, DecompositionConfig{});
  CHECK(p5.seasonal_features(kMonday).size() == 10);  // the "5+10" row

  SeasonalProfile zero = p2;
  for (ChannelProfile& ch : zero.channels) {
    ch.daily.fill(0.0);
    ch.weekly.fill(0.0);
  }
  for (double v : zero.seasonal_features(kMonday + 12345 * 3600))
    CHECK(v == 0.0);
}

TEST_CASE("seasonal_features is periodic in the civil week") {
  const TimeSeries s =
      make_series(2, 3 * 168, 3600, kMonday, [](size_t i, size_t c) {
        return std::sin(2.0 * std::numbers::pi * (i % 168) / 168.0 + c);
      });
  const SeasonalProfile p = fit_decomposition(s, DecompositionConfig{});
  for (int probe = 0; probe < 10; ++probe) {
    const int64_t ts = kMonday + probe * 97 * 3600;
    CHECK(p.seasonal_features(ts) ==
          p.seasonal_features(ts + 7 * 86400));  // identical, not just close
  }
}

TEST_CASE("fitting is deterministic") {
  const TimeSeries s =
      make_series(2, 400, 3600, kMonday, [](size_t i, size_t c) {
        return std::sin(0.1 * i + c) + 0.01 * i;
      });
  const SeasonalProfile a = fit_decomposition(s, DecompositionConfig{});
  const SeasonalProfile b = fit_decomposition(s, DecompositionConfig{});
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("reconstruction self-consistency") {
  const TimeSeries s =
      make_series(1, 4 * 168, 3600, kMonday, [](size_t i, size_t) {
        return 0.3 + 0.001 * i + 0.2 * std::sin(2.0 * std::numbers::pi * (i % 24) / 24.0) +
               0.05 * std::cos(2.0 * std::numbers::pi * (i % 168) / 168.0);
      });
  const SeasonalProfile p = fit_decomposition(s, DecompositionConfig{});
  double ss = 0.0;
  for (size_t i = 0; i < s.size(); ++i) {
    const double r = s.values(i)[0] - reconstruction(p, 0, s.timestamp(i));
    ss += r * r;
  }
  const double rms = std::sqrt(ss / s.size());
  CHECK(rms <= p.channels[0].residual_std + 1e-12);
}

TEST_CASE("piecewise trend recovers a kink at the knot") {
  DecompositionConfig cfg;
  cfg.trend = DecompositionConfig::Trend::piecewise_linear;
  cfg.trend_knots = 1;  // knot at normalized time 0.5
  const size_t n = 4 * 168;
  const TimeSeries s = make_series(1, n, 3600, kMonday, [n](size_t i, size_t) {
    const double tn = static_cast<double>(i) / (n - 1);
    return tn < 0.5 ? tn : 0.5 + 3.0 * (tn - 0.5);
  });
  const SeasonalProfile p = fit_decomposition(s, cfg);
  for (size_t i : {size_t(10), n / 2, n - 20})
    CHECK(p.trend_at(s.timestamp(i), 0) ==
          doctest::Approx(s.values(i)[0]).epsilon(1e-6));
  CHECK(p.channels[0].residual_std < 1e-6);
}

TEST_CASE("profile JSON round trip is exact") {
  const TimeSeries s =
      make_series(2, 2 * 168, 3600, kMonday, [](size_t i, size_t c) {
        return std::sin(0.3 * i) * (c + 1.0);
      });
  SeasonalProfile p = fit_decomposition(s, DecompositionConfig{});
  NormalizationParams norm;
  norm.min = {0.0, -1.0};
  norm.max = {1.0, 2.0};
  p.normalization = norm;
  const SeasonalProfile q = SeasonalProfile::from_json(p.to_json());
  CHECK(q.to_json() == p.to_json());
  CHECK(q.channels[0].daily == p.channels[0].daily);
  CHECK(q.channels[1].weekly == p.channels[1].weekly);
  REQUIRE(q.normalization.has_value());
  CHECK(q.normalization->max[1] == 2.0);
}

TEST_CASE("errors: short series, bad orders, rank deficiency") {
  const TimeSeries tiny = make_series(1, 100, 3600, kMonday,
                                      [](size_t i, size_t) { return double(i); });
  CHECK_THROWS_AS(fit_decomposition(tiny, DecompositionConfig{}), DataError);

  DecompositionConfig bad;
  bad.daily_fourier_order = 0;
  const TimeSeries ok = make_series(1, 2 * 168, 3600, kMonday,
                                    [](size_t i, size_t) { return double(i % 5); });
  CHECK_THROWS_AS(fit_decomposition(ok, bad), ConfigError);

  // Order 12 on an hourly grid makes sin(pi * h) a zero column.
  DecompositionConfig aliased;
  aliased.daily_fourier_order = 12;
  CHECK_THROWS_WITH_AS(fit_decomposition(ok, aliased),
                       doctest::Contains("ch0"), NumericError);
}
