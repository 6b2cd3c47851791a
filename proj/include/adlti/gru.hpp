#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "adlti/decompose.hpp"
#include "adlti/lti.hpp"
#include "adlti/timeseries.hpp"

namespace adlti {

struct NetworkTopology {
  int channels = 0;  // m
  int horizon = 0;   // L, forecast length
  bool seasonal = true;
  int hidden_width = 20;
  int depth = 2;

  int input_width() const { return seasonal ? 3 * channels : channels; }
  int output_width() const { return channels * horizon; }
};

struct TrainingConfig {
  double learning_rate = 1e-3;
  double weight_decay = 6e-6;
  int time_steps = 72;  // TBPTT window
  int max_epochs = 200;
  int patience = 10;  // early-stop patience on validation MSE
  bool early_stop = true;
  uint64_t rng_seed = 1;
};

struct GruCellParams {
  Eigen::MatrixXd w_update, u_update;
  Eigen::VectorXd b_update;
  Eigen::MatrixXd w_reset, u_reset;
  Eigen::VectorXd b_reset;
  Eigen::MatrixXd w_cand, u_cand;
  Eigen::VectorXd b_cand;
};

struct GruCellCache {
  Eigen::VectorXd z, r, n, u;  // u = u_cand * h_prev
};

// Standard update/reset/candidate cell: sigmoid gates, tanh candidate,
// h' = z.*h + (1-z).*n. Pure function of its arguments.
Eigen::VectorXd gru_cell_forward(const GruCellParams& p,
                                 const Eigen::VectorXd& input,
                                 const Eigen::VectorXd& hidden,
                                 GruCellCache* cache = nullptr);

// Flat view of one parameter block; the manifest order is the canonical
// order for the optimizer, serialization and gradient checks.
struct ParamView {
  std::string name;
  double* data;
  size_t rows;
  size_t cols;

  size_t size() const { return rows * cols; }
};

struct ParamSet {
  std::vector<GruCellParams> layers;
  Eigen::MatrixXd w_out;
  Eigen::VectorXd b_out;

  std::vector<ParamView> views();
  void set_zero();
};

struct TrainStats {
  int epochs_run = 0;
  double best_val_mse = 0.0;
  std::vector<double> epoch_train_loss;
  std::vector<double> epoch_val_mse;
  double wall_seconds = 0.0;
};

// Frame-to-sequence forecaster: consumes frames chronologically, emitting an
// L-frame prediction from each. Inference state lives in the model; calls
// must be serialized per instance.
class ForecastModel {
 public:
  ForecastModel() = default;
  static ForecastModel init(const NetworkTopology& topology, uint64_t seed);

  const NetworkTopology& topology() const { return topo_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  void reset_state();
  // Raw head output for the current step (advances the hidden state).
  Eigen::VectorXd step(const Eigen::VectorXd& input);
  // Full inference surface: concatenates frame and seasonal features, runs
  // one step and reshapes the head output to L frames clamped to [0,1].
  // Throws on a timestamp regression.
  PredictedSequence forward(const ValueFrame& frame,
                            std::span<const double> seasonal,
                            int64_t timestamp, size_t source_index);

  void save(const std::string& path) const;
  static ForecastModel load(const std::string& path);

  TrainStats stats;

 private:
  NetworkTopology topo_;
  ParamSet params_;
  std::vector<Eigen::VectorXd> hidden_;
  int64_t last_timestamp_ = 0;
  bool consumed_any_ = false;
};

// Adam with L2-style weight decay folded into the gradient; truncated BPTT
// with the hidden state carried (detached) across windows; keeps the
// checkpoint with the best validation MSE. Deterministic for a fixed seed.
TrainStats train(ForecastModel& model, const TimeSeries& train_split,
                 const TimeSeries& val_split, const SeasonalProfile* profile,
                 const TrainingConfig& config);

// Mean squared error of the clamped L-frame forecasts over a split.
// When `warmup` is given, its frames are consumed first (uncounted) so the
// recurrent state enters the split already phase-locked.
double sequence_mse(ForecastModel& model, const TimeSeries& series,
                    const SeasonalProfile* profile,
                    const TimeSeries* warmup = nullptr);

// Decomposition-only baseline: trend + seasonal terms at each horizon step.
PredictedSequence seasonal_naive_forecast(const SeasonalProfile& profile,
                                          const TimeSeries& series,
                                          size_t source_index, int L);

// Chronological forecast source used by the detector.
class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual void reset() = 0;
  virtual PredictedSequence next(size_t index, int64_t timestamp,
                                 const ValueFrame& frame) = 0;
};

class GruForecaster final : public Forecaster {
 public:
  GruForecaster(ForecastModel& model, const SeasonalProfile* profile)
      : model_(&model), profile_(profile) {}
  void reset() override { model_->reset_state(); }
  PredictedSequence next(size_t index, int64_t timestamp,
                         const ValueFrame& frame) override;

 private:
  ForecastModel* model_;
  const SeasonalProfile* profile_;
};

class SeasonalNaiveForecaster final : public Forecaster {
 public:
  SeasonalNaiveForecaster(const SeasonalProfile& profile, int64_t interval,
                          int L)
      : profile_(&profile), interval_(interval), horizon_(L) {}
  void reset() override {}
  PredictedSequence next(size_t index, int64_t timestamp,
                         const ValueFrame& frame) override;

 private:
  const SeasonalProfile* profile_;
  int64_t interval_;
  int horizon_;
};

namespace detail {

// One TBPTT window, exposed for the finite-difference oracle. `targets[i]`
// may be empty (masked step near the split end). Loss is the mean squared
// error over all target cells in the window; gradients exclude weight decay.
struct WindowData {
  std::vector<Eigen::VectorXd> inputs;
  std::vector<Eigen::VectorXd> targets;
};

struct WindowResult {
  double loss = 0.0;       // sq_sum / (target_steps * output_width)
  double sq_sum = 0.0;
  size_t target_steps = 0;
};

WindowResult window_loss(const ForecastModel& model, const WindowData& window,
                         const std::vector<Eigen::VectorXd>& h0);

WindowResult window_loss_and_grads(const ForecastModel& model,
                                   const WindowData& window,
                                   const std::vector<Eigen::VectorXd>& h0,
                                   ParamSet& grads,
                                   std::vector<Eigen::VectorXd>* h_final);

}  // namespace detail

}  // namespace adlti
