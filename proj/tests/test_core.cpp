#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "adlti/civil_time.hpp"
#include "adlti/csv.hpp"
#include "adlti/errors.hpp"
#include "adlti/timeseries.hpp"
#include "doctest.h"
#include "testutil.hpp"

using namespace adlti;
using testutil::kMonday;
using testutil::make_series;

TEST_CASE("civil time conversions") {
  CHECK(days_from_civil(1970, 1, 1) == 0);
  CHECK(parse_iso8601("1970-01-01 00:00:00") == 0);
  CHECK(parse_iso8601("1970-01-05T00:00:00") == kMonday);
  CHECK(day_of_week(kMonday) == 0);  // Monday
  CHECK(day_of_week(kMonday + 6 * 86400) == 6);
  // 2005-04-10 was a Sunday.
  CHECK(day_of_week(parse_iso8601("2005-04-10 12:00:00")) == 6);
  CHECK(hour_of_day(parse_iso8601("2005-04-10 17:30:00")) == 17);
  CHECK(format_iso8601(parse_iso8601("2026-08-09 23:59:59")) ==
        "2026-08-09 23:59:59");
  // Fixed offset shifts the civil fields.
  CHECK(hour_of_day(kMonday, -3600) == 23);
  CHECK(day_of_week(kMonday, -3600) == 6);
  CHECK_THROWS_AS(parse_iso8601("not a date"), DataError);
  CHECK_THROWS_AS(parse_iso8601("2026-13-01 00:00:00"), DataError);
}

TEST_CASE("load_csv parses a small two-channel file") {
  testutil::TempDir dir("core_csv");
  testutil::write_file(dir.path("a.csv"),
                       "timestamp,in_flow,out_flow\n"
                       "2005-07-24 00:00:00,1,2\n"
                       "2005-07-24 01:00:00,3,4\n"
                       "2005-07-24 02:00:00,5,6\n");
  const TimeSeries s = load_series_csv(dir.path("a.csv"));
  CHECK(s.channel_count() == 2);
  CHECK(s.size() == 3);
  CHECK(s.interval() == 3600);
  CHECK(s.values(1)[0] == 3.0);
  CHECK(s.channel_names()[1] == "out_flow");
}

TEST_CASE("load_csv gap handling") {
  testutil::TempDir dir("core_gap");
  testutil::write_file(dir.path("gap.csv"),
                       "timestamp,x\n"
                       "2020-01-01 00:00:00,1\n"
                       "2020-01-01 01:00:00,3\n"
                       "2020-01-01 03:00:00,7\n");  // 02:00 missing
  CHECK_THROWS_WITH_AS(load_series_csv(dir.path("gap.csv")),
                       doctest::Contains("2020-01-01 02:00:00"), DataError);
  const TimeSeries filled =
      load_series_csv(dir.path("gap.csv"), GapPolicy::interpolate);
  CHECK(filled.size() == 4);
  CHECK(filled.values(2)[0] == doctest::Approx(5.0));  // linear midpoint
}

TEST_CASE("load_csv error reporting") {
  testutil::TempDir dir("core_err");
  testutil::write_file(dir.path("bad.csv"),
                       "timestamp,x\n"
                       "2020-01-01 00:00:00,1\n"
                       "2020-01-01 01:00:00,oops\n");
  CHECK_THROWS_WITH_AS(load_series_csv(dir.path("bad.csv")),
                       doctest::Contains("row 3"), DataError);
  testutil::write_file(dir.path("mono.csv"),
                       "timestamp,x\n"
                       "2020-01-01 01:00:00,1\n"
                       "2020-01-01 00:00:00,2\n");
  CHECK_THROWS_WITH_AS(load_series_csv(dir.path("mono.csv")),
                       doctest::Contains("non-monotonic"), DataError);
  testutil::write_file(dir.path("empty.csv"), "");
  CHECK_THROWS_AS(load_series_csv(dir.path("empty.csv")), DataError);
  CHECK_THROWS_AS(load_series_csv(dir.path("missing.csv")), DataError);
}

TEST_CASE("aggregate_to_interval reduces full windows") {
  // Half-hourly counts -> hourly; same shape as the in/out flow pipeline.
  const TimeSeries half =
      make_series(2, 4800, 1800, kMonday, [](size_t i, size_t c) {
        return static_cast<double>((i + c) % 7);
      });
  const TimeSeries hourly = aggregate_to_interval(half, 3600, Reducer::sum);
  CHECK(hourly.size() == 2400);
  CHECK(hourly.channel_count() == 2);
  CHECK(hourly.interval() == 3600);
  CHECK(hourly.values(0)[0] == half.values(0)[0] + half.values(1)[0]);
  CHECK(hourly.timestamp(0) == half.timestamp(0));

  SUBCASE("identity when already at target") {
    const TimeSeries same = aggregate_to_interval(hourly, 3600, Reducer::sum);
    CHECK(same.size() == hourly.size());
    CHECK(same.values(7) == hourly.values(7));
  }
  SUBCASE("non-divisible target errors") {
    CHECK_THROWS_AS(aggregate_to_interval(half, 2700, Reducer::sum), DataError);
  }
  SUBCASE("partial trailing window dropped") {
    const TimeSeries odd = make_series(
        1, 25, 1800, kMonday, [](size_t i, size_t) { return double(i); });
    CHECK(aggregate_to_interval(odd, 3600, Reducer::sum).size() == 12);
  }
}

TEST_CASE("five-minute counts to hourly sums match a brute-force oracle") {
  // 48 five-minute frames, integer counts like a loop sensor.
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dist(0, 50);
  std::vector<double> counts(48);
  for (double& v : counts) v = dist(rng);
  const TimeSeries five = make_series(
      1, 48, 300, kMonday, [&](size_t i, size_t) { return counts[i]; });
  const TimeSeries hourly = aggregate_to_interval(five, 3600, Reducer::sum);
  REQUIRE(hourly.size() == 4);
  for (size_t w = 0; w < 4; ++w) {
    double expect = 0.0;  // independent windowed summation
    for (size_t j = 0; j < 12; ++j) expect += counts[w * 12 + j];
    CHECK(hourly.values(w)[0] == expect);
  }

  SUBCASE("mean reducer divides by the window") {
    const TimeSeries m = aggregate_to_interval(five, 3600, Reducer::mean);
    double expect = 0.0;
    for (size_t j = 0; j < 12; ++j) expect += counts[j];
    CHECK(m.values(0)[0] == doctest::Approx(expect / 12.0));
  }
}

TEST_CASE("sum aggregation conserves integer channel totals exactly") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> dist(0, 100);
  const TimeSeries s = make_series(2, 360, 300, kMonday, [&](size_t, size_t) {
    return static_cast<double>(dist(rng));
  });
  const TimeSeries agg = aggregate_to_interval(s, 3600, Reducer::sum);
  for (size_t c = 0; c < 2; ++c) {
    double before = 0.0, after = 0.0;
    for (size_t i = 0; i < agg.size() * 12; ++i) before += s.values(i)[c];
    for (size_t i = 0; i < agg.size(); ++i) after += agg.values(i)[c];
    CHECK(before == after);
  }
}

TEST_CASE("fit_normalization per-channel extrema") {
  const TimeSeries s = make_series(2, 3, 3600, kMonday, [](size_t i, size_t c) {
    return c == 0 ? 2.0 + 2.0 * i : 5.0;  // {2,4,6} and constant {5,5,5}
  });
  const NormalizationParams p = fit_normalization(s);
  CHECK(p.min[0] == 2.0);
  CHECK(p.max[0] == 6.0);
  CHECK(p.min[1] == 5.0);
  CHECK(p.max[1] == 5.0);
  CHECK(p.degenerate(1));
  CHECK_FALSE(p.degenerate(0));
}

TEST_CASE("normalize endpoints, midpoint, clamping, degenerate channels") {
  const TimeSeries train = make_series(
      1, 3, 3600, kMonday, [](size_t i, size_t) { return 2.0 + 2.0 * i; });
  const NormalizationParams p = fit_normalization(train);
  const TimeSeries probe =
      make_series(1, 4, 3600, kMonday, [](size_t i, size_t) {
        const double vals[] = {2.0, 6.0, 4.0, 9.0};  // min, max, mid, over
        return vals[i];
      });
  const TimeSeries out = normalize(probe, p);
  CHECK(out.values(0)[0] == 0.0);
  CHECK(out.values(1)[0] == 1.0);
  CHECK(out.values(2)[0] == 0.5);
  CHECK(out.values(3)[0] == 1.0);  // clamped

  const TimeSeries constant =
      make_series(1, 3, 3600, kMonday, [](size_t, size_t) { return 5.0; });
  const NormalizationParams pc = fit_normalization(constant);
  CHECK(normalize(constant, pc).values(1)[0] == 0.0);

  const TimeSeries wide =
      make_series(2, 3, 3600, kMonday, [](size_t, size_t) { return 0.0; });
  CHECK_THROWS_AS(normalize(wide, p), DataError);
}

TEST_CASE("normalize then denormalize round-trips") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-5.0, 20.0);
  const TimeSeries s = make_series(3, 200, 3600, kMonday,
                                   [&](size_t, size_t) { return dist(rng); });
  const NormalizationParams p = fit_normalization(s);
  const TimeSeries back = denormalize(normalize(s, p), p);
  for (size_t i = 0; i < s.size(); ++i)
    for (size_t c = 0; c < 3; ++c)
      CHECK(back.values(i)[c] ==
            doctest::Approx(s.values(i)[c]).epsilon(1e-12));
}

TEST_CASE("split produces contiguous chronological views") {
  const TimeSeries s = make_series(2, 2700, 3600, kMonday,
                                   [](size_t i, size_t) { return double(i); });
  const SeriesSplits splits = split(s, 1900, 300, 500);
  CHECK(splits.train.size() == 1900);
  CHECK(splits.validation.size() == 300);
  CHECK(splits.test.size() == 500);
  CHECK(splits.validation.timestamp(0) == s.timestamp(1900));
  CHECK(splits.test.timestamp(0) == s.timestamp(2200));

  SUBCASE("partition property: concatenation equals the prefix") {
    size_t i = 0;
    for (const TimeSeries* part :
         {&splits.train, &splits.validation, &splits.test}) {
      for (size_t j = 0; j < part->size(); ++j, ++i) {
        CHECK(part->timestamp(j) == s.timestamp(i));
        CHECK(part->values(j) == s.values(i));
      }
    }
    CHECK(i == 2700);
  }
  SUBCASE("3000/500/1000 protocol") {
    const TimeSeries big = make_series(
        1, 4500, 3600, kMonday, [](size_t i, size_t) { return double(i); });
    const SeriesSplits sp = split(big, 3000, 500, 1000);
    CHECK(sp.test.size() == 1000);
  }
  SUBCASE("whole series as train") {
    const SeriesSplits sp = split(s, 2700, 0, 0);
    CHECK(sp.train.size() == 2700);
    CHECK(sp.validation.empty());
  }
  SUBCASE("lengths exceeding the series error") {
    CHECK_THROWS_AS(split(s, 2700, 1, 0), DataError);
  }
}

TEST_CASE("series CSV round trip preserves values exactly") {
  testutil::TempDir dir("core_rt");
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  const TimeSeries s = make_series(2, 50, 3600, kMonday,
                                   [&](size_t, size_t) { return dist(rng); });
  write_series_csv(dir.path("s.csv"), s);
  const TimeSeries back = load_series_csv(dir.path("s.csv"));
  REQUIRE(back.size() == s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    CHECK(back.timestamp(i) == s.timestamp(i));
    CHECK(back.values(i) == s.values(i));  // exact via round-trip formatting
  }
}

TEST_CASE("labels CSV round trip") {
  testutil::TempDir dir("core_lab");
  LabelTrack t;
  for (int i = 0; i < 10; ++i) {
    t.timestamps.push_back(kMonday + i * 3600);
    t.labels.push_back(i % 3 == 0 ? 1 : 0);
  }
  write_labels_csv(dir.path("l.csv"), t);
  const LabelTrack back = load_labels_csv(dir.path("l.csv"));
  CHECK(back.timestamps == t.timestamps);
  CHECK(back.labels == t.labels);
}

TEST_CASE("local_sequence bounds and length") {
  const TimeSeries s = make_series(1, 10, 3600, kMonday,
                                   [](size_t i, size_t) { return double(i); });
  const LocalSequence seq = local_sequence(s, 2, 5);
  CHECK(seq.length() == 4);
  CHECK(seq.frames[0][0] == 2.0);
  CHECK(seq.frames[3][0] == 5.0);
  CHECK_THROWS_AS(local_sequence(s, 5, 2), DataError);
  CHECK_THROWS_AS(local_sequence(s, 0, 10), DataError);
}
