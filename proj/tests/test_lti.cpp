#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "adlti/errors.hpp"
#include "adlti/lti.hpp"
#include "doctest.h"

using namespace adlti;

namespace {

PredictedSequence make_seq(size_t source, std::vector<ValueFrame> frames) {
  PredictedSequence s;
  s.source_index = source;
  s.frames = std::move(frames);
  return s;
}

// Buffer with actual frames 0..t and forecasts from sources 0..t-1, all
// values uniform in [0,1]; the live sources get scores in [0, 0.95].
PredictionBuffer random_buffer(int L, int m, size_t t, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PredictionBuffer buf(L);
  for (size_t i = 0; i <= t; ++i) {
    ValueFrame v(m);
    for (double& x : v) x = unit(rng);
    buf.push_actual(i, v);
    if (i < t) {
      std::vector<ValueFrame> frames(L, ValueFrame(m));
      for (auto& f : frames)
        for (double& x : f) x = unit(rng);
      buf.push_forecast(make_seq(i, frames));
    }
  }
  for (size_t i = t - L; i < t; ++i)
    buf.record_score(i, 0.95 * unit(rng));
  return buf;
}

}  // namespace

TEST_CASE("dfdist hand evaluations") {
  CHECK(dfdist({0.3, 0.9}, {0.3, 0.9}) == 0.0);
  CHECK(dfdist({1.0, 0.0}, {0.0, 1.0}) == 1.0);
  CHECK(dfdist({0.3}, {0.7}) == doctest::Approx(0.16).epsilon(1e-12));
  CHECK_THROWS_AS(dfdist({0.1}, {0.1, 0.2}), DataError);
}

TEST_CASE("lsdist hand evaluations") {
  const std::vector<ValueFrame> a = {{0.0}, {0.0}};
  const std::vector<ValueFrame> b = {{0.2}, {0.4}};
  CHECK(lsdist(a, a) == 0.0);
  CHECK(lsdist(std::span(a.data(), 1), std::span(b.data(), 1)) ==
        dfdist(a[0], b[0]));
  CHECK(lsdist(a, b) == doctest::Approx(0.10).epsilon(1e-12));
  CHECK_THROWS_AS(lsdist(a, std::span(b.data(), 1)), DataError);
}

TEST_CASE("decay weights and normalizers") {
  SUBCASE("single-term series") {
    const DecayVector v = decay_weights(1);
    CHECK(v.d == std::vector<double>{1.0});
    CHECK(v.D == std::vector<double>{1.0});
  }
  SUBCASE("L = 3 against direct summation") {
    const DecayVector v = decay_weights(3);
    CHECK(v.d[0] == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
    CHECK(v.d[1] == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(v.d[2] == 1.0);
    CHECK(v.d[0] == doctest::Approx(0.13534).epsilon(1e-4));
    CHECK(v.d[1] == doctest::Approx(0.36788).epsilon(1e-4));
    double direct = 0.0;  // independent summation oracle
    for (int i = 1; i <= 3; ++i) direct += std::exp(-(3 - i));
    CHECK(v.D[2] == doctest::Approx(direct).epsilon(1e-15));
    CHECK(v.D[2] == doctest::Approx(1.50321).epsilon(1e-4));
  }
  SUBCASE("normalizer approaches the geometric limit") {
    const DecayVector v = decay_weights(20);
    const double limit = 1.0 / (1.0 - std::exp(-1.0));  // ~1.58198
    CHECK(std::abs(v.D[19] - limit) < 1e-8);
  }
  SUBCASE("invariants") {
    const DecayVector v = decay_weights(7);
    CHECK(v.d.back() == 1.0);
    for (size_t i = 0; i + 1 < v.d.size(); ++i)
      CHECK(v.d[i] / v.d[i + 1] == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    for (int j = 1; j <= 7; ++j)
      CHECK(v.D[j - 1] == doctest::Approx((1.0 - std::exp(-j)) /
                                          (1.0 - std::exp(-1.0)))
                              .epsilon(1e-13));
  }
  SUBCASE("L = 0 rejected") { CHECK_THROWS_AS(decay_weights(0), ConfigError); }
}

TEST_CASE("wlsdist hand evaluations") {
  const DecayVector decay = decay_weights(5);
  const std::vector<ValueFrame> a = {{0.0}, {0.0}};
  const std::vector<ValueFrame> b = {{0.2}, {0.4}};
  CHECK(wlsdist(a, a, decay) == 0.0);
  CHECK(wlsdist(std::span(a.data(), 1), std::span(b.data(), 1), decay) ==
        doctest::Approx(dfdist(a[0], b[0])).epsilon(1e-15));
  // Per-frame dfdists (0.04, 0.16), most recent weighted 1.
  const double expect =
      (std::exp(-1.0) * 0.04 + 1.0 * 0.16) / (1.0 + std::exp(-1.0));
  CHECK(wlsdist(a, b, decay) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(expect == doctest::Approx(0.1277).epsilon(1e-3));
  CHECK_THROWS_AS(wlsdist(a, std::span(b.data(), 1), decay), DataError);
  const std::vector<ValueFrame> empty;
  CHECK_THROWS_AS(wlsdist(empty, empty, decay), DataError);
}

TEST_CASE("prediction buffer mechanics") {
  PredictionBuffer buf(2);
  buf.push_actual(0, {0.5});
  buf.push_forecast(make_seq(0, {{0.4}, {0.6}}));
  buf.push_actual(1, {0.7});
  buf.push_forecast(make_seq(1, {{0.1}, {0.2}}));
  CHECK(buf.warm(2));
  CHECK(buf.oldest_source() == 0);
  CHECK(buf.predicted_frame(0, 1)[0] == 0.4);
  CHECK(buf.predicted_frame(0, 2)[0] == 0.6);
  CHECK(buf.predicted_frame(1, 2)[0] == 0.1);
  CHECK(buf.score_of(0) == 0.0);  // warm-up default
  buf.record_score(1, 0.25);
  CHECK(buf.score_of(1) == 0.25);
  CHECK_THROWS_AS(buf.push_actual(5, {0.0}), DataError);
  CHECK_THROWS_AS(buf.record_score(1, 1.5), NumericError);
  CHECK_THROWS_AS(buf.predicted_frame(1, 1), DataError);

  buf.push_actual(2, {0.9});
  buf.push_forecast(make_seq(2, {{0.3}, {0.3}}));
  CHECK(buf.oldest_source() == 1);  // source 0 evicted
  CHECK_THROWS_AS(buf.forecast_by(0), DataError);
}

TEST_CASE("lti_scalar zero and uniform cases") {
  SUBCASE("forecasts equal to actuals give zero") {
    PredictionBuffer buf(3);
    for (size_t i = 0; i <= 3; ++i) {
      buf.push_actual(i, {0.4, 0.6});
      if (i < 3)
        buf.push_forecast(make_seq(i, {{0.4, 0.6}, {0.4, 0.6}, {0.4, 0.6}}));
    }
    buf.record_score(1, 0.7);  // AS history must not matter at zero distance
    const DecayVector decay = decay_weights(3);
    const LtiResult r = lti_scalar(3, buf, decay);
    CHECK(r.lti == 0.0);
    CHECK_FALSE(r.low_confidence);
  }
  SUBCASE("uniform WLSDist v with zero scores gives v") {
    // Constant per-frame distance q makes every window's WLSDist equal q.
    const double q = 0.09;
    PredictionBuffer buf(3);
    for (size_t i = 0; i <= 3; ++i) {
      buf.push_actual(i, {0.0});
      if (i < 3) {
        std::vector<ValueFrame> fr(3, ValueFrame{std::sqrt(q)});
        buf.push_forecast(make_seq(i, fr));
      }
    }
    const LtiResult r = lti_scalar(3, buf, decay_weights(3));
    CHECK(r.lti == doctest::Approx(q).epsilon(1e-14));
    CHECK(r.z == doctest::Approx(3.0));
  }
}

TEST_CASE("lti_scalar weighted hand evaluation") {
  // L = 2, AS = (0, 0.5), WLSDist terms (0.2, 0.4):
  // source 0 probes frames {1,2} with both per-frame distances 0.2,
  // source 1 probes frame {2} with distance 0.4.
  PredictionBuffer buf(2);
  buf.push_actual(0, {0.0});
  buf.push_forecast(
      make_seq(0, {{std::sqrt(0.2)}, {std::sqrt(0.2)}}));
  buf.push_actual(1, {0.0});
  buf.push_forecast(make_seq(1, {{std::sqrt(0.4)}, {0.0}}));
  buf.record_score(0, 0.0);
  buf.record_score(1, 0.5);
  buf.push_actual(2, {0.0});
  const LtiResult r = lti_scalar(2, buf, decay_weights(2));
  CHECK(r.per_source[0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(r.per_source[1] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(r.z == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(r.lti == doctest::Approx(0.4 / 1.5).epsilon(1e-12));
  CHECK(r.lti == doctest::Approx(0.26667).epsilon(1e-4));
}

TEST_CASE("lti matrix form agrees with the scalar form") {
  std::mt19937_64 rng(2024);
  for (int L : {2, 5, 10}) {
    for (int m : {1, 3, 5}) {
      for (int rep = 0; rep < 12; ++rep) {
        const size_t t = L + 2 + rep % 3;
        PredictionBuffer buf = random_buffer(L, m, t, rng);
        const DecayVector decay = decay_weights(L);
        const LtiResult s = lti_scalar(t, buf, decay);
        const LtiResult mtx = lti_matrix(t, buf, decay);
        CHECK(std::abs(s.lti - mtx.lti) <= 1e-12);
        for (int k = 0; k < L; ++k)
          CHECK(std::abs(s.per_source[k] - mtx.per_source[k]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("lti matrix with zero distances is zero") {
  PredictionBuffer buf(4);
  for (size_t i = 0; i <= 4; ++i) {
    buf.push_actual(i, {0.25, 0.75});
    if (i < 4)
      buf.push_forecast(make_seq(
          i, std::vector<ValueFrame>(4, ValueFrame{0.25, 0.75})));
  }
  CHECK(lti_matrix(4, buf, decay_weights(4)).lti == 0.0);
}

TEST_CASE("parallel lanes are bit-identical") {
  std::mt19937_64 rng(99);
  const int L = 10;
  const size_t t = 15;
  PredictionBuffer buf = random_buffer(L, 3, t, rng);
  const DecayVector decay = decay_weights(L);
  const LtiResult serial = lti_matrix(t, buf, decay, nullptr, nullptr);
  for (unsigned lanes : {1u, 2u, 4u}) {
    LanePool pool(lanes);
    const LtiResult r = lti_matrix(t, buf, decay, nullptr, &pool);
    CHECK(r.lti == serial.lti);  // exactly equal
    CHECK(r.per_source == serial.per_source);
  }
}

TEST_CASE("incremental frame-distance rows match the batch rebuild") {
  std::mt19937_64 rng(4);
  const int L = 5, m = 2;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PredictionBuffer buf(L);
  FrameDistanceMatrix dfm(L);
  const DecayVector decay = decay_weights(L);
  for (size_t i = 0; i <= 40; ++i) {
    ValueFrame v(m);
    for (double& x : v) x = unit(rng);
    buf.push_actual(i, v);
    dfm.on_actual(i, buf.actual(i), buf);
    if (buf.warm(i)) {
      const LtiResult inc = lti_matrix(i, buf, decay, &dfm);
      const LtiResult batch = lti_matrix(i, buf, decay);
      CHECK(inc.lti == batch.lti);
      const LtiResult s = lti_scalar(i, buf, decay);
      CHECK(std::abs(inc.lti - s.lti) <= 1e-12);
    }
    std::vector<ValueFrame> frames(L, ValueFrame(m));
    for (auto& f : frames)
      for (double& x : f) x = unit(rng);
    buf.push_forecast(make_seq(i, frames));
    dfm.on_forecast(i);
    if (i >= static_cast<size_t>(L))
      buf.record_score(i, 0.5 * unit(rng));
  }
}

TEST_CASE("boundedness for normalized inputs") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 50; ++rep) {
    const int L = 1 + static_cast<int>(rng() % 8);
    const int m = 1 + static_cast<int>(rng() % 4);
    const size_t t = L + rng() % 4;
    PredictionBuffer buf = random_buffer(L, m, t, rng);
    const LtiResult r = lti_scalar(t, buf, decay_weights(L));
    CHECK(r.lti >= 0.0);
    CHECK(r.lti <= 1.0);
    for (double w : r.per_source) {
      CHECK(w >= 0.0);
      CHECK(w <= 1.0);
    }
  }
}

TEST_CASE("zero law: nonzero iff some forecast misses") {
  PredictionBuffer buf(2);
  for (size_t i = 0; i <= 2; ++i) {
    buf.push_actual(i, {0.5});
    if (i < 2) {
      std::vector<ValueFrame> fr(2, ValueFrame{0.5});
      if (i == 1) fr[0][0] = 0.5001;  // one forecast misses frame 2
      buf.push_forecast(make_seq(i, fr));
    }
  }
  CHECK(lti_scalar(2, buf, decay_weights(2)).lti > 0.0);
}

TEST_CASE("discounting the largest-term source never raises LTI") {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 100; ++rep) {
    const int L = 2 + static_cast<int>(rng() % 6);
    const size_t t = L + rng() % 3;
    PredictionBuffer buf = random_buffer(L, 2, t, rng);
    const DecayVector decay = decay_weights(L);
    const LtiResult base = lti_scalar(t, buf, decay);
    size_t max_k = 0;
    for (size_t k = 1; k < base.per_source.size(); ++k)
      if (base.per_source[k] > base.per_source[max_k]) max_k = k;
    const size_t src = t - L + max_k;
    const double old_as = buf.score_of(src);
    const double raised = std::min(1.0, old_as + 0.3 * (1.0 - old_as) + 0.1);
    buf.record_score(src, raised);
    const LtiResult after = lti_scalar(t, buf, decay);
    CHECK(after.lti <= base.lti + 1e-15);
  }
}

TEST_CASE("recency dominance of decay weights") {
  // WLSDist is linear in the per-frame distances, so a bump at offset i from
  // the end moves the result e^{i} times less than the same bump at the end.
  const int len = 6;
  const DecayVector decay = decay_weights(8);
  std::vector<ValueFrame> actual(len, ValueFrame{0.0});
  std::vector<ValueFrame> base(len, ValueFrame{0.2});
  const double w0 = wlsdist(actual, base, decay);
  const double delta = 0.05;
  for (int offset = 1; offset < len; ++offset) {
    auto bump_end = base, bump_old = base;
    bump_end[len - 1][0] = std::sqrt(0.04 + delta);
    bump_old[len - 1 - offset][0] = std::sqrt(0.04 + delta);
    const double d_end = wlsdist(actual, bump_end, decay) - w0;
    const double d_old = wlsdist(actual, bump_old, decay) - w0;
    CHECK(d_end / d_old == doctest::Approx(std::exp(offset)).epsilon(1e-9));
  }
}

TEST_CASE("Z underflow falls back to uniform weights and flags the frame") {
  PredictionBuffer buf(2);
  buf.push_actual(0, {0.0});
  buf.push_forecast(make_seq(0, {{std::sqrt(0.2)}, {std::sqrt(0.2)}}));
  buf.push_actual(1, {0.0});
  buf.push_forecast(make_seq(1, {{std::sqrt(0.4)}, {0.0}}));
  buf.record_score(0, 1.0);
  buf.record_score(1, 1.0);
  buf.push_actual(2, {0.0});
  const LtiResult r = lti_scalar(2, buf, decay_weights(2));
  CHECK(r.low_confidence);
  CHECK(r.lti == doctest::Approx((0.2 + 0.4) / 2.0).epsilon(1e-12));
  const LtiResult m = lti_matrix(2, buf, decay_weights(2));
  CHECK(m.low_confidence);
  CHECK(std::abs(m.lti - r.lti) <= 1e-12);
}

TEST_CASE("warm-up and coverage errors") {
  PredictionBuffer buf(3);
  buf.push_actual(0, {0.1});
  CHECK_THROWS_AS(lti_scalar(0, buf, decay_weights(3)), DataError);
  buf.push_forecast(make_seq(0, {{0.1}, {0.1}, {0.1}}));
  buf.push_actual(1, {0.1});
  // Buffer's newest source is 0; asking for frame 3 skips ahead.
  CHECK_THROWS_AS(lti_scalar(3, buf, decay_weights(3)), DataError);
}
