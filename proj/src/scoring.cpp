#include "adlti/scoring.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "adlti/civil_time.hpp"
#include "adlti/csv.hpp"
#include "adlti/errors.hpp"
#include "json.hpp"

namespace adlti {

double phi(double x, const ScoringParams& params) {
  const double a = params.k * (x - params.x0);
  if (a >= 0.0) {
    const double e = std::exp(-a);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(a);
  return e / (1.0 + e);
}

std::string ScoringParams::to_json() const {
  nlohmann::json doc;
  doc["k"] = k;
  doc["x0"] = x0;
  doc["c"] = c;
  doc["calibrated_on"] = calibrated_on;
  doc["iterations"] = iterations;
  return doc.dump(2) + "\n";
}

ScoringParams ScoringParams::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("invalid scoring-params JSON: ") + e.what());
  }
  ScoringParams p;
  p.k = doc.at("k").get<double>();
  p.x0 = doc.at("x0").get<double>();
  p.c = doc.at("c").get<double>();
  p.calibrated_on = doc.value("calibrated_on", std::string());
  p.iterations = doc.value("iterations", 0);
  if (p.k <= 0.0) throw DataError("scoring params need k > 0");
  return p;
}

void ScoringParams::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << to_json();
}

ScoringParams ScoringParams::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ScoringParams::from_json(ss.str());
}

// --------------------------------------------------------------- calibrate

std::pair<ScoringParams, CalibrationReport> calibrate(
    const std::vector<ValueFrame>& reference,
    const std::vector<PredictedSequence>& forecasts, int L, double c,
    int max_iterations) {
  const size_t r = reference.size();
  if (L < 1) throw ConfigError("calibrate needs L >= 1");
  if (r <= static_cast<size_t>(L))
    throw DataError("reference series must be longer than L");
  if (forecasts.size() < r - 1)
    throw DataError("calibrate needs forecasts for sources 0.." +
                    std::to_string(r - 2));
  for (size_t i = 0; i + 1 < r; ++i)
    if (forecasts[i].source_index != i)
      throw DataError("forecast " + std::to_string(i) +
                      " is attributed to source " +
                      std::to_string(forecasts[i].source_index));

  const DecayVector decay = decay_weights(L);

  // WLSDist terms are invariant across sweeps; only the weights change.
  // w_terms[t - L][k] probes source t - L + k, oldest first.
  std::vector<std::vector<double>> w_terms(r - L, std::vector<double>(L));
  std::vector<ValueFrame> window;
  for (size_t t = L; t < r; ++t) {
    for (int k = 0; k < L; ++k) {
      const size_t src = t - L + k;
      const size_t len = t - src;
      window.assign(reference.begin() + src + 1, reference.begin() + t + 1);
      const PredictedSequence& seq = forecasts[src];
      if (seq.horizon() < len)
        throw DataError("forecast from source " + std::to_string(src) +
                        " is shorter than its probe window");
      w_terms[t - L][k] =
          wlsdist(std::span<const ValueFrame>(window),
                  std::span<const ValueFrame>(seq.frames.data(), len), decay);
    }
  }

  ScoringParams params;
  params.k = 1.0;
  params.x0 = 0.5;
  params.c = c;
  std::vector<double> as(r, 0.0);
  std::vector<double> lti(r - L, 0.0);

  CalibrationReport report;
  for (int iter = 1; iter <= max_iterations; ++iter) {
    for (size_t t = L; t < r; ++t) {
      const std::vector<double>& terms = w_terms[t - L];
      double z = 0.0;
      for (int k = 0; k < L; ++k) z += 1.0 - as[t - L + k];
      double value = 0.0;
      if (z < 1e-9) {
        for (int k = 0; k < L; ++k)
          value += terms[k] / static_cast<double>(L);
      } else {
        for (int k = 0; k < L; ++k)
          value += ((1.0 - as[t - L + k]) / z) * terms[k];
      }
      lti[t - L] = value;
      as[t] = phi(value, params);
    }

    double mean = 0.0;
    for (double v : lti) mean += v;
    mean /= static_cast<double>(lti.size());
    double var = 0.0;
    for (double v : lti) var += (v - mean) * (v - mean);
    var /= static_cast<double>(lti.size());
    const double stdev = std::sqrt(var);
    if (stdev < 1e-9)
      throw NumericError(
          "degenerate reference: stdev(LTI) below 1e-9, cannot set k");

    const double new_k = c / stdev;
    const double new_x0 = mean;
    report.trace.emplace_back(new_k, new_x0);
    report.iterations = iter;
    const bool converged =
        std::abs(new_k - params.k) <= 0.001 * std::abs(params.k) &&
        std::abs(new_x0 - params.x0) <= 0.001 * std::abs(params.x0);
    params.k = new_k;
    params.x0 = new_x0;
    if (converged) {
      report.converged = true;
      break;
    }
  }
  report.k = params.k;
  report.x0 = params.x0;
  params.iterations = report.iterations;
  return {params, report};
}

// ------------------------------------------------------------------ detect

ScoreRecord detect(size_t t, int64_t timestamp, PredictionBuffer& buffer,
                   const DecayVector& decay, const ScoringParams& params,
                   const FrameDistanceMatrix* cached, LanePool* pool) {
  const LtiResult r = lti_matrix(t, buffer, decay, cached, pool);
  ScoreRecord rec;
  rec.index = t;
  rec.timestamp = timestamp;
  rec.lti = r.lti;
  rec.as = phi(r.lti, params);
  rec.z = r.z;
  rec.flags = r.low_confidence ? kFlagLowConfidence : kFlagNone;
  rec.per_source = r.per_source;
  return rec;
}

// ----------------------------------------------------------- ScoreStream IO

void ScoreStream::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "timestamp,lti,as,flags\n";
  for (const ScoreRecord& r : records) {
    out << format_iso8601(r.timestamp) << ',' << format_double(r.lti) << ','
        << format_double(r.as) << ','
        << ((r.flags & kFlagLowConfidence) ? "low_confidence" : "ok") << '\n';
  }
}

ScoreStream ScoreStream::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("timestamp,lti,as,flags", 0) != 0)
    throw DataError("'" + path + "' is not a score CSV");
  ScoreStream stream;
  size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string ts, lti, as, flags;
    if (!std::getline(ss, ts, ',') || !std::getline(ss, lti, ',') ||
        !std::getline(ss, as, ',') || !std::getline(ss, flags))
      throw DataError("malformed score row " + std::to_string(row));
    ScoreRecord rec;
    rec.index = row - 2;
    rec.timestamp = parse_iso8601(ts);
    rec.lti = std::strtod(lti.c_str(), nullptr);
    rec.as = std::strtod(as.c_str(), nullptr);
    rec.flags = flags == "low_confidence" ? kFlagLowConfidence : kFlagNone;
    stream.records.push_back(std::move(rec));
  }
  return stream;
}

void ScoreStream::write_diagnostics_jsonl(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (const ScoreRecord& r : records) {
    nlohmann::json line;
    line["t"] = r.index;
    line["timestamp"] = format_iso8601(r.timestamp);
    line["lti"] = r.lti;
    line["z"] = r.z;
    line["wlsdist"] = r.per_source;
    nlohmann::json flags = nlohmann::json::array();
    if (r.flags & kFlagLowConfidence) flags.push_back("low_confidence");
    line["flags"] = flags;
    out << line.dump() << '\n';
  }
}

// ------------------------------------------------------------ StreamDetector

StreamDetector::StreamDetector(Forecaster& forecaster, int L,
                               const ScoringParams& params, unsigned lanes,
                               bool diagnostics)
    : forecaster_(&forecaster),
      decay_(decay_weights(L)),
      params_(params),
      buffer_(L),
      distances_(L),
      diagnostics_(diagnostics) {
  if (params.k <= 0.0) throw ConfigError("detector needs calibrated k > 0");
  if (lanes > 1) pool_ = std::make_unique<LanePool>(lanes);
}

void StreamDetector::reset() {
  buffer_ = PredictionBuffer(decay_.length);
  distances_.clear();
  forecaster_->reset();
  next_index_ = 0;
  primed_ = 0;
}

void StreamDetector::prime(int64_t timestamp, const ValueFrame& values) {
  if (next_index_ > 0)
    throw DataError("prime must happen before the first scored frame");
  forecaster_->next(primed_++, timestamp, values);
}

std::optional<ScoreRecord> StreamDetector::feed(int64_t timestamp,
                                                const ValueFrame& values) {
  const size_t i = next_index_++;
  buffer_.push_actual(i, values);
  distances_.on_actual(i, buffer_.actual(i), buffer_);

  std::optional<ScoreRecord> record;
  if (buffer_.warm(i)) {
    ScoreRecord rec = detect(i, timestamp, buffer_, decay_, params_,
                             &distances_, pool_.get());
    if (!diagnostics_) rec.per_source.clear();
    record = std::move(rec);
  }

  PredictedSequence seq = forecaster_->next(i, timestamp, values);
  if (seq.source_index != i ||
      seq.horizon() != static_cast<size_t>(decay_.length))
    throw DataError("forecaster returned a malformed sequence for frame " +
                    std::to_string(i));
  buffer_.push_forecast(std::move(seq));
  distances_.on_forecast(i);
  if (record) buffer_.record_score(i, record->as);
  return record;
}

}  // namespace adlti
