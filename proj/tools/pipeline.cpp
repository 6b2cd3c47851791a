#include "pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adlti/civil_time.hpp"
#include "adlti/config.hpp"
#include "adlti/csv.hpp"
#include "adlti/decompose.hpp"
#include "adlti/errors.hpp"
#include "adlti/evaluate.hpp"
#include "adlti/gru.hpp"
#include "adlti/scoring.hpp"
#include "adlti/timeseries.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace adlti::pipeline {

namespace {

// Every config key, overridable by a same-named command-line flag.
struct KeySpec {
  const char* key;
  const char* help;
};

const std::vector<KeySpec> kKeys = {
    {"data.series", "input series CSV (timestamp + channels)"},
    {"data.labels", "label CSV (timestamp, {0,1})"},
    {"data.gap_fill", "off | interpolate (default off)"},
    {"data.aggregate", "none | sum | mean (default none)"},
    {"data.interval_hours", "target grid interval in hours (default 1)"},
    {"data.utc_offset_hours", "civil-time offset for seasonal keys (default 0)"},
    {"split.train", "training frames"},
    {"split.val", "validation frames"},
    {"split.test", "test frames"},
    {"decomp.daily_order", "daily Fourier order (default 4)"},
    {"decomp.weekly_order", "weekly Fourier order (default 3)"},
    {"decomp.trend", "linear | piecewise (default linear)"},
    {"decomp.knots", "knots for piecewise trend (default 3)"},
    {"model.L", "prediction span / probe length (default 5)"},
    {"model.hidden", "recurrent units per layer (default 20)"},
    {"model.depth", "recurrent layers (default 2)"},
    {"model.seasonal", "on | off: feed seasonal features (default on)"},
    {"train.lr", "learning rate (default 0.001)"},
    {"train.weight_decay", "L2 weight decay (default 6e-6)"},
    {"train.time_steps", "TBPTT window (default 72)"},
    {"train.max_epochs", "epoch cap (default 200)"},
    {"train.patience", "early-stop patience (default 10)"},
    {"train.early_stop", "on | off (default on)"},
    {"train.seed", "RNG seed (default 1)"},
    {"score.c", "dispersion multiplier in k = c/stdev (default 1.0)"},
    {"score.max_iterations", "calibration iteration cap (default 100)"},
    {"detect.lanes", "worker lanes for LTI evaluation (default 1)"},
    {"detect.diagnostics", "on | off: per-source JSONL sidecar (default off)"},
    {"detect.threshold", "optional AS filter for printed alarms"},
    {"bench.lanes", "max lanes benched (default 4)"},
    {"out.dir", "artifact directory (default out)"},
    {"synth.channels", "synthetic: channel count"},
    {"synth.length", "synthetic: frame count"},
    {"synth.daily_amp", "synthetic: daily amplitude"},
    {"synth.weekly_amp", "synthetic: weekly amplitude"},
    {"synth.noise_std", "synthetic: noise std"},
    {"synth.trend_rise", "synthetic: total drift"},
    {"synth.base", "synthetic: base level"},
    {"synth.seed", "synthetic: RNG seed"},
    {"synth.events", "synthetic: injected anomaly count"},
    {"synth.min_duration", "synthetic: min event frames"},
    {"synth.max_duration", "synthetic: max event frames"},
    {"synth.min_magnitude", "synthetic: min |event magnitude|"},
    {"synth.max_magnitude", "synthetic: max |event magnitude|"},
    {"synth.min_index", "synthetic: first injectable frame"},
};

struct LoadedData {
  TimeSeries full;
  SeriesSplits splits;
};

GapPolicy gap_policy(const Config& cfg) {
  const std::string v = cfg.get_string("data.gap_fill", "off");
  if (v == "off") return GapPolicy::error;
  if (v == "interpolate") return GapPolicy::interpolate;
  throw ConfigError("data.gap_fill must be off or interpolate, got '" + v + "'");
}

LoadedData load_data(const Config& cfg) {
  const std::string path = cfg.get_string("data.series");
  TimeSeries series = load_series_csv(path, gap_policy(cfg));
  const std::string agg = cfg.get_string("data.aggregate", "none");
  if (agg != "none") {
    const int64_t target = cfg.get_int("data.interval_hours", 1) * 3600;
    Reducer reducer;
    if (agg == "sum")
      reducer = Reducer::sum;
    else if (agg == "mean")
      reducer = Reducer::mean;
    else
      throw ConfigError("data.aggregate must be none, sum or mean");
    series = aggregate_to_interval(series, target, reducer);
  }
  LoadedData data;
  data.splits = split(series, cfg.get_int("split.train"),
                      cfg.get_int("split.val"), cfg.get_int("split.test"));
  data.full = std::move(series);
  return data;
}

std::string out_path(const Config& cfg, const std::string& name) {
  const fs::path dir = cfg.get_string("out.dir", "out");
  fs::create_directories(dir);
  return (dir / name).string();
}

bool seasonal_on(const Config& cfg) {
  return cfg.get_bool("model.seasonal", true);
}

std::string model_path(const Config& cfg) {
  return out_path(cfg, seasonal_on(cfg) ? "model_st.ckpt" : "model_gru.ckpt");
}

std::string metrics_path(const Config& cfg) {
  return out_path(cfg, seasonal_on(cfg) ? "train_metrics_st.json"
                                        : "train_metrics_gru.json");
}

NetworkTopology topology_from(const Config& cfg, size_t channels) {
  NetworkTopology topo;
  topo.channels = static_cast<int>(channels);
  topo.horizon = static_cast<int>(cfg.get_int("model.L", 5));
  topo.hidden_width = static_cast<int>(cfg.get_int("model.hidden", 20));
  topo.depth = static_cast<int>(cfg.get_int("model.depth", 2));
  topo.seasonal = seasonal_on(cfg);
  if (topo.horizon < 1) throw ConfigError("model.L must be >= 1");
  return topo;
}

TrainingConfig training_from(const Config& cfg) {
  TrainingConfig t;
  t.learning_rate = cfg.get_real("train.lr", 1e-3);
  t.weight_decay = cfg.get_real("train.weight_decay", 6e-6);
  t.time_steps = static_cast<int>(cfg.get_int("train.time_steps", 72));
  t.max_epochs = static_cast<int>(cfg.get_int("train.max_epochs", 200));
  t.patience = static_cast<int>(cfg.get_int("train.patience", 10));
  t.early_stop = cfg.get_bool("train.early_stop", true);
  t.rng_seed = static_cast<uint64_t>(cfg.get_int("train.seed", 1));
  if (t.time_steps < 1) throw ConfigError("train.time_steps must be >= 1");
  return t;
}

SeasonalProfile load_profile(const Config& cfg) {
  return SeasonalProfile::load(out_path(cfg, "profile.json"));
}

NormalizationParams profile_norm(const SeasonalProfile& profile) {
  if (!profile.normalization)
    throw DataError("profile has no normalization block; rerun decompose");
  return *profile.normalization;
}

std::vector<PredictedSequence> collect_forecasts(Forecaster& forecaster,
                                                 const TimeSeries& series,
                                                 const TimeSeries* warmup) {
  forecaster.reset();
  size_t consumed = 0;
  if (warmup != nullptr)
    for (size_t i = 0; i < warmup->size(); ++i)
      forecaster.next(consumed++, warmup->timestamp(i), warmup->values(i));
  std::vector<PredictedSequence> out;
  out.reserve(series.size());
  for (size_t i = 0; i < series.size(); ++i) {
    PredictedSequence seq =
        forecaster.next(consumed + i, series.timestamp(i), series.values(i));
    seq.source_index = i;
    out.push_back(std::move(seq));
  }
  forecaster.reset();
  return out;
}

// ------------------------------------------------------------- subcommands

int cmd_generate(const Config& cfg) {
  SyntheticSpec spec;
  spec.channels = cfg.get_int("synth.channels", 2);
  spec.length = cfg.get_int("synth.length", 3000);
  spec.daily_amplitude = {cfg.get_real("synth.daily_amp", 0.15)};
  spec.weekly_amplitude = {cfg.get_real("synth.weekly_amp", 0.3)};
  spec.noise_std = cfg.get_real("synth.noise_std", 0.05);
  spec.trend_rise = cfg.get_real("synth.trend_rise", 0.0);
  spec.base = cfg.get_real("synth.base", 1.0);
  spec.rng_seed = cfg.get_int("synth.seed", 42);
  const size_t events = cfg.get_int("synth.events", 0);
  if (events > 0)
    spec.injections = random_injections(
        spec.length, events, cfg.get_int("synth.min_duration", 2),
        cfg.get_int("synth.max_duration", 6),
        cfg.get_real("synth.min_magnitude", 0.3),
        cfg.get_real("synth.max_magnitude", 0.6),
        cfg.get_int("synth.min_index", 200), spec.rng_seed + 1);
  auto [series, labels] = generate_synthetic(spec);
  write_series_csv(cfg.get_string("data.series"), series);
  if (cfg.has("data.labels")) write_labels_csv(cfg.get_string("data.labels"), labels);
  size_t anomalous = 0;
  for (uint8_t l : labels.labels) anomalous += l;
  std::cout << "generated " << series.size() << " frames x "
            << series.channel_count() << " channels, " << anomalous
            << " anomalous\n";
  return 0;
}

int cmd_decompose(const Config& cfg) {
  LoadedData data = load_data(cfg);
  const NormalizationParams norm = fit_normalization(data.splits.train);
  const TimeSeries train_norm = normalize(data.splits.train, norm);

  DecompositionConfig dcfg;
  dcfg.daily_fourier_order = cfg.get_int("decomp.daily_order", 4);
  dcfg.weekly_fourier_order = cfg.get_int("decomp.weekly_order", 3);
  const std::string trend = cfg.get_string("decomp.trend", "linear");
  if (trend == "linear")
    dcfg.trend = DecompositionConfig::Trend::linear;
  else if (trend == "piecewise")
    dcfg.trend = DecompositionConfig::Trend::piecewise_linear;
  else
    throw ConfigError("decomp.trend must be linear or piecewise");
  dcfg.trend_knots = cfg.get_int("decomp.knots", 3);

  const auto t0 = std::chrono::steady_clock::now();
  SeasonalProfile profile = fit_decomposition(
      train_norm, dcfg, cfg.get_int("data.utc_offset_hours", 0) * 3600);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  profile.normalization = norm;
  profile.save(out_path(cfg, "profile.json"));
  std::printf("decomposition fitted in %.2fs (%zu channels)\n", secs,
              profile.channel_count());
  return 0;
}

int cmd_train(const Config& cfg) {
  LoadedData data = load_data(cfg);
  const SeasonalProfile profile = load_profile(cfg);
  const NormalizationParams norm = profile_norm(profile);
  const TimeSeries train_norm = normalize(data.splits.train, norm);
  const TimeSeries val_norm = normalize(data.splits.validation, norm);
  const TimeSeries test_norm = normalize(data.splits.test, norm);

  const NetworkTopology topo = topology_from(cfg, data.full.channel_count());
  const TrainingConfig tcfg = training_from(cfg);
  ForecastModel model = ForecastModel::init(topo, tcfg.rng_seed);
  const TrainStats stats = train(model, train_norm, val_norm,
                                 topo.seasonal ? &profile : nullptr, tcfg);
  model.save(model_path(cfg));

  const TimeSeries* mse_warmup = val_norm.size() > 0 ? &val_norm : &train_norm;
  const double test_mse = sequence_mse(
      model, test_norm, topo.seasonal ? &profile : nullptr, mse_warmup);
  nlohmann::json metrics;
  metrics["seasonal"] = topo.seasonal;
  metrics["epochs_run"] = stats.epochs_run;
  metrics["best_val_mse"] = stats.best_val_mse;
  metrics["test_mse"] = test_mse;
  metrics["wall_seconds"] = stats.wall_seconds;
  metrics["L"] = topo.horizon;
  metrics["output_width"] = topo.output_width();
  metrics["time_steps"] = tcfg.time_steps;
  metrics["seed"] = tcfg.rng_seed;
  std::ofstream mout(metrics_path(cfg), std::ios::binary);
  mout << metrics.dump(2) << "\n";
  std::printf("trained %d epochs in %.1fs, val MSE %.6f, test MSE %.6f\n",
              stats.epochs_run, stats.wall_seconds, stats.best_val_mse,
              test_mse);
  return 0;
}

int cmd_calibrate(const Config& cfg) {
  LoadedData data = load_data(cfg);
  const SeasonalProfile profile = load_profile(cfg);
  const NormalizationParams norm = profile_norm(profile);
  const TimeSeries ref_norm = normalize(data.splits.validation, norm);

  ForecastModel model = ForecastModel::load(model_path(cfg));
  GruForecaster forecaster(model, &profile);
  const TimeSeries train_norm = normalize(data.splits.train, norm);
  const std::vector<PredictedSequence> forecasts =
      collect_forecasts(forecaster, ref_norm, &train_norm);

  const int L = model.topology().horizon;
  const double c = cfg.get_real("score.c", 1.0);
  auto [params, report] =
      calibrate(ref_norm.all_values(), forecasts, L, c,
                static_cast<int>(cfg.get_int("score.max_iterations", 100)));
  params.calibrated_on = "validation split (" +
                         std::to_string(ref_norm.size()) + " frames)";
  params.save(out_path(cfg, "scoring_params.json"));

  nlohmann::json rep;
  rep["iterations"] = report.iterations;
  rep["converged"] = report.converged;
  rep["k"] = report.k;
  rep["x0"] = report.x0;
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& [k, x0] : report.trace)
    trace.push_back({{"k", k}, {"x0", x0}});
  rep["trace"] = trace;
  std::ofstream rout(out_path(cfg, "calibration_report.json"),
                     std::ios::binary);
  rout << rep.dump(2) << "\n";
  std::printf("calibrated in %d iterations: k = %.6g, x0 = %.6g%s\n",
              report.iterations, params.k, params.x0,
              report.converged ? "" : " (not converged)");
  return 0;
}

int cmd_detect(const Config& cfg) {
  LoadedData data = load_data(cfg);
  const SeasonalProfile profile = load_profile(cfg);
  const NormalizationParams norm = profile_norm(profile);
  const TimeSeries test_norm = normalize(data.splits.test, norm);

  ForecastModel model = ForecastModel::load(model_path(cfg));
  const ScoringParams params =
      ScoringParams::load(out_path(cfg, "scoring_params.json"));
  GruForecaster forecaster(model, &profile);
  const bool diagnostics = cfg.get_bool("detect.diagnostics", false);
  StreamDetector detector(forecaster, model.topology().horizon, params,
                          static_cast<unsigned>(cfg.get_int("detect.lanes", 1)),
                          diagnostics);
  // Chronological replay: the recurrent state enters the test split warm.
  for (const TimeSeries* prior :
       {&data.splits.train, &data.splits.validation}) {
    const TimeSeries prior_norm = normalize(*prior, norm);
    for (size_t i = 0; i < prior_norm.size(); ++i)
      detector.prime(prior_norm.timestamp(i), prior_norm.values(i));
  }
  ScoreStream stream;
  for (size_t i = 0; i < test_norm.size(); ++i) {
    auto rec = detector.feed(test_norm.timestamp(i), test_norm.values(i));
    if (rec) stream.records.push_back(std::move(*rec));
  }
  stream.write_csv(out_path(cfg, "scores.csv"));
  if (diagnostics)
    stream.write_diagnostics_jsonl(out_path(cfg, "diagnostics.jsonl"));
  if (cfg.has("detect.threshold")) {
    const double thr = cfg.get_real("detect.threshold");
    for (const ScoreRecord& r : stream.records)
      if (r.as >= thr)
        std::cout << "alarm " << format_iso8601(r.timestamp) << " as="
                  << r.as << "\n";
  }
  std::printf("scored %zu frames (%zu warm-up)\n", stream.records.size(),
              test_norm.size() - stream.records.size());
  return 0;
}

int cmd_evaluate(const Config& cfg) {
  const ScoreStream stream = ScoreStream::load_csv(out_path(cfg, "scores.csv"));
  const LabelTrack labels = load_labels_csv(cfg.get_string("data.labels"));
  auto [scores, truth] = align_scores_labels(stream, labels);
  const RocCurve curve = roc_auc(scores, truth);
  curve.write_csv(out_path(cfg, "roc.csv"));
  std::printf("AUC = %.6f over %zu frames\n", curve.auc, scores.size());
  return 0;
}

int cmd_bench(const Config& cfg) {
  LoadedData data = load_data(cfg);
  const SeasonalProfile profile = load_profile(cfg);
  const NormalizationParams norm = profile_norm(profile);
  const TimeSeries test_norm = normalize(data.splits.test, norm);
  ForecastModel model = ForecastModel::load(model_path(cfg));
  const ScoringParams params =
      ScoringParams::load(out_path(cfg, "scoring_params.json"));
  const int L = model.topology().horizon;
  const unsigned max_lanes =
      static_cast<unsigned>(cfg.get_int("bench.lanes", 4));

  nlohmann::json reports = nlohmann::json::array();
  std::string reference_csv;
  for (unsigned lanes = 1; lanes <= max_lanes; lanes *= 2) {
    GruForecaster forecaster(model, &profile);
    ScoreStream stream;
    const BenchReport report =
        bench_detection(forecaster, test_norm, L, params, lanes, &stream);
    reports.push_back(nlohmann::json::parse(report.to_json()));
    std::string csv;
    for (const ScoreRecord& r : stream.records)
      csv += format_double(r.as) + "\n";
    if (lanes == 1)
      reference_csv = csv;
    else if (csv != reference_csv)
      throw NumericError("lane count changed the scores");
    std::printf("lanes=%u mean %.4f ms/frame (p99 %.4f)\n", lanes,
                report.mean_ms, report.p99_ms);
    model.reset_state();
  }
  std::ofstream out(out_path(cfg, "bench.json"), std::ios::binary);
  out << reports.dump(2) << "\n";
  return 0;
}

int run_subcommand(const std::string& name, const Config& cfg) {
  if (name == "generate") return cmd_generate(cfg);
  if (name == "decompose") return cmd_decompose(cfg);
  if (name == "train") return cmd_train(cfg);
  if (name == "calibrate") return cmd_calibrate(cfg);
  if (name == "detect") return cmd_detect(cfg);
  if (name == "evaluate") return cmd_evaluate(cfg);
  if (name == "bench") return cmd_bench(cfg);
  throw ConfigError("unknown command '" + name + "'");
}

int cmd_repro(const Config& base, const std::string& preset,
              const std::string& configs_dir) {
  const fs::path conf = fs::path(configs_dir) / (preset + ".conf");
  if (!fs::exists(conf))
    throw ConfigError("unknown preset '" + preset + "' (no " + conf.string() +
                      ")");
  Config cfg = Config::parse_file(conf.string());
  for (const auto& [k, v] : base.entries()) cfg.set(k, v);

  if (cfg.get_int("synth.channels", 0) > 0) {
    fs::create_directories(fs::path(cfg.get_string("data.series")).parent_path());
    run_subcommand("generate", cfg);
  }
  for (const char* step : {"decompose", "train", "calibrate", "detect",
                           "evaluate"}) {
    std::cout << "== " << step << "\n";
    const int rc = run_subcommand(step, cfg);
    if (rc != 0) return rc;
  }
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Streaming anomaly detection for seasonal multi-channel time "
               "series"};
  app.require_subcommand(1);

  std::string config_path;
  std::string preset;
  std::string configs_dir = "configs";
  std::map<std::string, std::string> overrides;

  const std::vector<std::string> names = {
      "generate", "decompose", "train","calibrate",
      "detect",   "evaluate",  "bench"};
  std::vector<CLI::App*> subs;
  for (const std::string& name : names) {
    CLI::App* sub = app.add_subcommand(name, name + " step");
    sub->add_option("--config", config_path, "config file");
    for (const KeySpec& spec : kKeys)
      sub->add_option_function<std::string>(
          "--" + std::string(spec.key),
          [&overrides, key = std::string(spec.key)](const std::string& v) {
            overrides[key] = v;
          },
          spec.help);
    // Convenience alias for the ablation switch.
    sub->add_option_function<std::string>(
        "--seasonal",
        [&overrides](const std::string& v) { overrides["model.seasonal"] = v; },
        "alias for --model.seasonal");
    subs.push_back(sub);
  }
  CLI::App* repro = app.add_subcommand(
      "repro", "run decompose/train/calibrate/detect/evaluate for a preset");
  repro->add_option("preset", preset, "calit2 | dodgers | synthetic5")
      ->required();
  repro->add_option("--configs-dir", configs_dir, "preset directory");
  for (const KeySpec& spec : kKeys)
    repro->add_option_function<std::string>(
        "--" + std::string(spec.key),
        [&overrides, key = std::string(spec.key)](const std::string& v) {
          overrides[key] = v;
        },
        spec.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    Config cfg;
    if (!config_path.empty()) cfg = Config::parse_file(config_path);
    for (const auto& [k, v] : overrides) cfg.set(k, v);

    if (repro->parsed()) return cmd_repro(cfg, preset, configs_dir);
    for (size_t i = 0; i < subs.size(); ++i)
      if (subs[i]->parsed()) return run_subcommand(names[i], cfg);
    throw ConfigError("no command given");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace adlti::pipeline
