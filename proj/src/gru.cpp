#include "adlti/gru.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "adlti/errors.hpp"
#include "json.hpp"

namespace adlti {

namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& a) {
  return a.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

void check_topology(const NetworkTopology& t) {
  if (t.channels < 1 || t.horizon < 1 || t.hidden_width < 1 || t.depth < 1)
    throw ConfigError("network topology widths must be positive");
}

Eigen::VectorXd make_input(const NetworkTopology& topo, const ValueFrame& v,
                           std::span<const double> seasonal) {
  if (v.size() != static_cast<size_t>(topo.channels))
    throw DataError("frame has " + std::to_string(v.size()) +
                    " channels, model expects " + std::to_string(topo.channels));
  Eigen::VectorXd x(topo.input_width());
  for (int c = 0; c < topo.channels; ++c) x(c) = v[c];
  if (topo.seasonal) {
    if (seasonal.size() != static_cast<size_t>(2 * topo.channels))
      throw DataError("expected " + std::to_string(2 * topo.channels) +
                      " seasonal features, got " +
                      std::to_string(seasonal.size()));
    for (int i = 0; i < 2 * topo.channels; ++i)
      x(topo.channels + i) = seasonal[i];
  }
  return x;
}

}  // namespace

Eigen::VectorXd gru_cell_forward(const GruCellParams& p,
                                 const Eigen::VectorXd& input,
                                 const Eigen::VectorXd& hidden,
                                 GruCellCache* cache) {
  if (p.w_update.cols() != input.size() || p.u_update.cols() != hidden.size())
    throw DataError("gru cell shape mismatch");
  const Eigen::VectorXd z =
      sigmoid(p.w_update * input + p.u_update * hidden + p.b_update);
  const Eigen::VectorXd r =
      sigmoid(p.w_reset * input + p.u_reset * hidden + p.b_reset);
  const Eigen::VectorXd u = p.u_cand * hidden;
  const Eigen::VectorXd n =
      (p.w_cand * input + r.cwiseProduct(u) + p.b_cand).array().tanh();
  Eigen::VectorXd h =
      z.cwiseProduct(hidden) + (Eigen::VectorXd::Ones(z.size()) - z).cwiseProduct(n);
  if (cache != nullptr) {
    cache->z = z;
    cache->r = r;
    cache->n = n;
    cache->u = u;
  }
  return h;
}

std::vector<ParamView> ParamSet::views() {
  std::vector<ParamView> out;
  auto add_m = [&](const std::string& name, Eigen::MatrixXd& m) {
    out.push_back(ParamView{name, m.data(), static_cast<size_t>(m.rows()),
                            static_cast<size_t>(m.cols())});
  };
  auto add_v = [&](const std::string& name, Eigen::VectorXd& v) {
    out.push_back(
        ParamView{name, v.data(), static_cast<size_t>(v.size()), 1});
  };
  for (size_t l = 0; l < layers.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    GruCellParams& p = layers[l];
    add_m(prefix + "w_update", p.w_update);
    add_m(prefix + "u_update", p.u_update);
    add_v(prefix + "b_update", p.b_update);
    add_m(prefix + "w_reset", p.w_reset);
    add_m(prefix + "u_reset", p.u_reset);
    add_v(prefix + "b_reset", p.b_reset);
    add_m(prefix + "w_cand", p.w_cand);
    add_m(prefix + "u_cand", p.u_cand);
    add_v(prefix + "b_cand", p.b_cand);
  }
  add_m("head.w_out", w_out);
  add_v("head.b_out", b_out);
  return out;
}

void ParamSet::set_zero() {
  for (ParamView& v : views()) std::fill(v.data, v.data + v.size(), 0.0);
}

namespace {

ParamSet allocate_params(const NetworkTopology& topo) {
  ParamSet params;
  const int h = topo.hidden_width;
  for (int l = 0; l < topo.depth; ++l) {
    const int in = l == 0 ? topo.input_width() : h;
    GruCellParams p;
    p.w_update = Eigen::MatrixXd::Zero(h, in);
    p.u_update = Eigen::MatrixXd::Zero(h, h);
    p.b_update = Eigen::VectorXd::Zero(h);
    p.w_reset = Eigen::MatrixXd::Zero(h, in);
    p.u_reset = Eigen::MatrixXd::Zero(h, h);
    p.b_reset = Eigen::VectorXd::Zero(h);
    p.w_cand = Eigen::MatrixXd::Zero(h, in);
    p.u_cand = Eigen::MatrixXd::Zero(h, h);
    p.b_cand = Eigen::VectorXd::Zero(h);
    params.layers.push_back(std::move(p));
  }
  params.w_out = Eigen::MatrixXd::Zero(topo.output_width(), h);
  params.b_out = Eigen::VectorXd::Zero(topo.output_width());
  return params;
}

}  // namespace

ForecastModel ForecastModel::init(const NetworkTopology& topology,
                                  uint64_t seed) {
  check_topology(topology);
  ForecastModel model;
  model.topo_ = topology;
  model.params_ = allocate_params(topology);
  const double scale = 1.0 / std::sqrt(static_cast<double>(topology.hidden_width));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (ParamView& v : model.params_.views())
    for (size_t i = 0; i < v.size(); ++i) v.data[i] = dist(rng);
  model.reset_state();
  return model;
}

void ForecastModel::reset_state() {
  hidden_.assign(topo_.depth, Eigen::VectorXd::Zero(topo_.hidden_width));
  consumed_any_ = false;
  last_timestamp_ = 0;
}

Eigen::VectorXd ForecastModel::step(const Eigen::VectorXd& input) {
  Eigen::VectorXd x = input;
  for (int l = 0; l < topo_.depth; ++l) {
    hidden_[l] = gru_cell_forward(params_.layers[l], x, hidden_[l]);
    x = hidden_[l];
  }
  return params_.w_out * hidden_.back() + params_.b_out;
}

PredictedSequence ForecastModel::forward(const ValueFrame& frame,
                                         std::span<const double> seasonal,
                                         int64_t timestamp,
                                         size_t source_index) {
  if (consumed_any_ && timestamp <= last_timestamp_)
    throw DataError("out-of-order forecast call: timestamp " +
                    std::to_string(timestamp) + " after " +
                    std::to_string(last_timestamp_));
  const Eigen::VectorXd y = step(make_input(topo_, frame, seasonal));
  consumed_any_ = true;
  last_timestamp_ = timestamp;

  PredictedSequence seq;
  seq.source_index = source_index;
  seq.frames.resize(topo_.horizon, ValueFrame(topo_.channels));
  for (int j = 0; j < topo_.horizon; ++j)
    for (int c = 0; c < topo_.channels; ++c)
      seq.frames[j][c] = std::clamp(y(j * topo_.channels + c), 0.0, 1.0);
  return seq;
}

// ----------------------------------------------------------------- training

namespace detail {

namespace {

struct StepCache {
  std::vector<Eigen::VectorXd> x;       // input per layer
  std::vector<Eigen::VectorXd> h_prev;  // per layer
  std::vector<GruCellCache> cell;       // per layer
  std::vector<Eigen::VectorXd> h;       // per layer
};

}  // namespace

WindowResult window_loss_and_grads(const ForecastModel& model,
                                   const WindowData& window,
                                   const std::vector<Eigen::VectorXd>& h0,
                                   ParamSet& grads,
                                   std::vector<Eigen::VectorXd>* h_final) {
  const NetworkTopology& topo = model.topology();
  const ParamSet& params = model.params();
  const size_t T = window.inputs.size();
  const int depth = topo.depth;
  const int out_w = topo.output_width();

  std::vector<StepCache> caches(T);
  std::vector<Eigen::VectorXd> outputs(T);
  std::vector<Eigen::VectorXd> h = h0;

  WindowResult res;
  for (size_t t = 0; t < T; ++t) {
    StepCache& sc = caches[t];
    sc.x.resize(depth);
    sc.h_prev.resize(depth);
    sc.cell.resize(depth);
    sc.h.resize(depth);
    Eigen::VectorXd x = window.inputs[t];
    for (int l = 0; l < depth; ++l) {
      sc.x[l] = x;
      sc.h_prev[l] = h[l];
      h[l] = gru_cell_forward(params.layers[l], x, h[l], &sc.cell[l]);
      sc.h[l] = h[l];
      x = h[l];
    }
    if (window.targets[t].size() > 0) {
      outputs[t] = params.w_out * h.back() + params.b_out;
      const Eigen::VectorXd err = outputs[t] - window.targets[t];
      res.sq_sum += err.squaredNorm();
      ++res.target_steps;
    }
  }
  if (h_final != nullptr) *h_final = h;
  if (res.target_steps == 0) {
    res.loss = 0.0;
    return res;
  }
  const double denom = static_cast<double>(res.target_steps) * out_w;
  res.loss = res.sq_sum / denom;

  // Backward pass, newest step first.
  std::vector<Eigen::VectorXd> dh_next(
      depth, Eigen::VectorXd::Zero(topo.hidden_width));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(topo.hidden_width);
  for (size_t ti = T; ti-- > 0;) {
    const StepCache& sc = caches[ti];
    std::vector<Eigen::VectorXd> dcur = dh_next;
    if (window.targets[ti].size() > 0) {
      const Eigen::VectorXd dy =
          2.0 * (outputs[ti] - window.targets[ti]) / denom;
      grads.w_out.noalias() += dy * sc.h[depth - 1].transpose();
      grads.b_out += dy;
      dcur[depth - 1].noalias() += params.w_out.transpose() * dy;
    }
    for (int l = depth - 1; l >= 0; --l) {
      const GruCellParams& p = params.layers[l];
      GruCellParams& g = grads.layers[l];
      const GruCellCache& c = sc.cell[l];
      const Eigen::VectorXd& dh = dcur[l];

      const Eigen::VectorXd dz = dh.cwiseProduct(sc.h_prev[l] - c.n);
      const Eigen::VectorXd da_z =
          dz.cwiseProduct(c.z).cwiseProduct(ones - c.z);
      const Eigen::VectorXd dn = dh.cwiseProduct(ones - c.z);
      const Eigen::VectorXd da_n =
          dn.cwiseProduct(ones - c.n.cwiseProduct(c.n));
      const Eigen::VectorXd dr = da_n.cwiseProduct(c.u);
      const Eigen::VectorXd da_r =
          dr.cwiseProduct(c.r).cwiseProduct(ones - c.r);
      const Eigen::VectorXd du = da_n.cwiseProduct(c.r);

      g.w_cand.noalias() += da_n * sc.x[l].transpose();
      g.u_cand.noalias() += du * sc.h_prev[l].transpose();
      g.b_cand += da_n;
      g.w_reset.noalias() += da_r * sc.x[l].transpose();
      g.u_reset.noalias() += da_r * sc.h_prev[l].transpose();
      g.b_reset += da_r;
      g.w_update.noalias() += da_z * sc.x[l].transpose();
      g.u_update.noalias() += da_z * sc.h_prev[l].transpose();
      g.b_update += da_z;

      dh_next[l] = dh.cwiseProduct(c.z);
      dh_next[l].noalias() += p.u_cand.transpose() * du;
      dh_next[l].noalias() += p.u_reset.transpose() * da_r;
      dh_next[l].noalias() += p.u_update.transpose() * da_z;
      if (l > 0) {
        Eigen::VectorXd dx = p.w_cand.transpose() * da_n;
        dx.noalias() += p.w_reset.transpose() * da_r;
        dx.noalias() += p.w_update.transpose() * da_z;
        dcur[l - 1] += dx;
      }
    }
  }
  return res;
}

WindowResult window_loss(const ForecastModel& model, const WindowData& window,
                         const std::vector<Eigen::VectorXd>& h0) {
  const NetworkTopology& topo = model.topology();
  const ParamSet& params = model.params();
  std::vector<Eigen::VectorXd> h = h0;
  WindowResult res;
  for (size_t t = 0; t < window.inputs.size(); ++t) {
    Eigen::VectorXd x = window.inputs[t];
    for (int l = 0; l < topo.depth; ++l) {
      h[l] = gru_cell_forward(params.layers[l], x, h[l]);
      x = h[l];
    }
    if (window.targets[t].size() > 0) {
      const Eigen::VectorXd y = params.w_out * h.back() + params.b_out;
      res.sq_sum += (y - window.targets[t]).squaredNorm();
      ++res.target_steps;
    }
  }
  if (res.target_steps > 0)
    res.loss = res.sq_sum /
               (static_cast<double>(res.target_steps) * topo.output_width());
  return res;
}

}  // namespace detail

namespace {

class Adam {
 public:
  Adam(std::vector<ParamView> views, double lr, double weight_decay)
      : views_(std::move(views)), lr_(lr), wd_(weight_decay) {
    for (const ParamView& v : views_) {
      m_.emplace_back(Eigen::ArrayXd::Zero(v.size()));
      v_.emplace_back(Eigen::ArrayXd::Zero(v.size()));
    }
  }

  void step(std::vector<ParamView> grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t i = 0; i < views_.size(); ++i) {
      Eigen::Map<Eigen::ArrayXd> theta(views_[i].data, views_[i].size());
      Eigen::Map<Eigen::ArrayXd> g(grads[i].data, grads[i].size());
      const Eigen::ArrayXd geff = g + wd_ * theta;
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * geff;
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * geff.square();
      theta -= lr_ * (m_[i] / bc1) / ((v_[i] / bc2).sqrt() + eps_);
    }
  }

 private:
  std::vector<ParamView> views_;
  std::vector<Eigen::ArrayXd> m_, v_;
  double lr_;
  double wd_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
};

std::vector<double> snapshot_params(ParamSet& params) {
  std::vector<double> out;
  for (const ParamView& v : params.views())
    out.insert(out.end(), v.data, v.data + v.size());
  return out;
}

void restore_params(ParamSet& params, const std::vector<double>& snap) {
  size_t off = 0;
  for (ParamView& v : params.views()) {
    std::memcpy(v.data, snap.data() + off, v.size() * sizeof(double));
    off += v.size();
  }
}

}  // namespace

TrainStats train(ForecastModel& model, const TimeSeries& train_split,
                 const TimeSeries& val_split, const SeasonalProfile* profile,
                 const TrainingConfig& config) {
  const NetworkTopology& topo = model.topology();
  if (config.time_steps < 1) throw ConfigError("time_steps must be >= 1");
  if (config.learning_rate <= 0.0)
    throw ConfigError("learning_rate must be > 0");
  if (config.max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (topo.seasonal && profile == nullptr)
    throw ConfigError("seasonal topology requires a fitted profile");
  const size_t n = train_split.size();
  const int L = topo.horizon;
  if (n < static_cast<size_t>(config.time_steps + L))
    throw DataError("training series has " + std::to_string(n) +
                    " frames, need at least " +
                    std::to_string(config.time_steps + L));

  const auto t_begin = std::chrono::steady_clock::now();

  // Inputs and L-step-ahead targets; frames too close to the end are masked.
  std::vector<Eigen::VectorXd> inputs(n);
  std::vector<Eigen::VectorXd> targets(n);
  for (size_t i = 0; i < n; ++i) {
    std::vector<double> feats;
    if (topo.seasonal) feats = profile->seasonal_features(train_split.timestamp(i));
    inputs[i] = make_input(topo, train_split.values(i), feats);
    if (i + L < n) {
      Eigen::VectorXd g(topo.output_width());
      for (int j = 0; j < L; ++j) {
        const ValueFrame& v = train_split.values(i + 1 + j);
        for (int c = 0; c < topo.channels; ++c) g(j * topo.channels + c) = v[c];
      }
      targets[i] = std::move(g);
    }
  }

  Adam adam(model.params().views(), config.learning_rate, config.weight_decay);
  ParamSet grads = allocate_params(topo);
  const bool has_val = val_split.size() > static_cast<size_t>(L);
  // Validation forecasts start phase-locked: wash the state in on the final
  // week of training data before scoring the validation split.
  TimeSeries val_warmup;
  if (has_val) {
    const size_t wlen = std::min<size_t>(n, 168);
    val_warmup = train_split.slice(n - wlen, wlen);
  }

  TrainStats stats;
  std::vector<double> best;
  double best_val = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::vector<Eigen::VectorXd> h(topo.depth,
                                   Eigen::VectorXd::Zero(topo.hidden_width));
    double sq_sum = 0.0;
    size_t target_steps = 0;
    for (size_t start = 0; start < n;
         start += static_cast<size_t>(config.time_steps)) {
      const size_t end = std::min(n, start + config.time_steps);
      detail::WindowData window;
      window.inputs.assign(inputs.begin() + start, inputs.begin() + end);
      window.targets.assign(targets.begin() + start, targets.begin() + end);
      grads.set_zero();
      std::vector<Eigen::VectorXd> h_out;
      const detail::WindowResult res =
          detail::window_loss_and_grads(model, window, h, grads, &h_out);
      if (!std::isfinite(res.loss))
        throw NumericError("training diverged (non-finite loss) at epoch " +
                           std::to_string(epoch));
      if (res.target_steps > 0) adam.step(grads.views());
      h = std::move(h_out);  // carried detached across the window boundary
      sq_sum += res.sq_sum;
      target_steps += res.target_steps;
    }
    stats.epoch_train_loss.push_back(
        sq_sum / (static_cast<double>(target_steps) * topo.output_width()));
    stats.epochs_run = epoch;

    if (has_val) {
      const double val_mse = sequence_mse(model, val_split, profile, &val_warmup);
      stats.epoch_val_mse.push_back(val_mse);
      if (val_mse < best_val) {
        best_val = val_mse;
        best = snapshot_params(model.params());
        bad_epochs = 0;
      } else if (config.early_stop && ++bad_epochs >= config.patience) {
        break;
      }
    }
  }

  if (!best.empty()) restore_params(model.params(), best);
  stats.best_val_mse = has_val ? best_val : -1.0;
  stats.wall_seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - t_begin)
                           .count();
  model.stats = stats;
  model.reset_state();
  return stats;
}

double sequence_mse(ForecastModel& model, const TimeSeries& series,
                    const SeasonalProfile* profile, const TimeSeries* warmup) {
  const NetworkTopology& topo = model.topology();
  const int L = topo.horizon;
  const size_t n = series.size();
  if (n <= static_cast<size_t>(L))
    throw DataError("series too short to score forecasts");
  if (topo.seasonal && profile == nullptr)
    throw ConfigError("seasonal topology requires a profile");
  model.reset_state();
  size_t consumed = 0;
  if (warmup != nullptr) {
    for (size_t i = 0; i < warmup->size(); ++i) {
      std::vector<double> feats;
      if (topo.seasonal) feats = profile->seasonal_features(warmup->timestamp(i));
      model.forward(warmup->values(i), feats, warmup->timestamp(i), consumed++);
    }
  }
  double sq = 0.0;
  size_t cells = 0;
  for (size_t i = 0; i + L < n; ++i) {
    std::vector<double> feats;
    if (topo.seasonal) feats = profile->seasonal_features(series.timestamp(i));
    const PredictedSequence seq =
        model.forward(series.values(i), feats, series.timestamp(i),
                      consumed + i);
    for (int j = 0; j < L; ++j) {
      const ValueFrame& actual = series.values(i + 1 + j);
      for (int c = 0; c < topo.channels; ++c) {
        const double e = seq.frames[j][c] - actual[c];
        sq += e * e;
        ++cells;
      }
    }
  }
  model.reset_state();
  return sq / static_cast<double>(cells);
}

PredictedSequence seasonal_naive_forecast(const SeasonalProfile& profile,
                                          const TimeSeries& series,
                                          size_t source_index, int L) {
  if (source_index >= series.size())
    throw DataError("seasonal_naive_forecast: source index out of range");
  const size_t m = profile.channel_count();
  PredictedSequence seq;
  seq.source_index = source_index;
  seq.frames.resize(L, ValueFrame(m));
  for (int j = 1; j <= L; ++j) {
    const int64_t ts = series.timestamp(source_index) + j * series.interval();
    const std::vector<double> feats = profile.seasonal_features(ts);
    for (size_t c = 0; c < m; ++c)
      seq.frames[j - 1][c] =
          std::clamp(profile.trend_at(ts, c) + feats[2 * c] + feats[2 * c + 1],
                     0.0, 1.0);
  }
  return seq;
}

PredictedSequence GruForecaster::next(size_t index, int64_t timestamp,
                                      const ValueFrame& frame) {
  std::vector<double> feats;
  if (model_->topology().seasonal) {
    if (profile_ == nullptr)
      throw ConfigError("seasonal model requires a profile");
    feats = profile_->seasonal_features(timestamp);
  }
  return model_->forward(frame, feats, timestamp, index);
}

PredictedSequence SeasonalNaiveForecaster::next(size_t index,
                                                int64_t timestamp,
                                                const ValueFrame& frame) {
  (void)frame;
  const size_t m = profile_->channel_count();
  PredictedSequence seq;
  seq.source_index = index;
  seq.frames.resize(horizon_, ValueFrame(m));
  for (int j = 1; j <= horizon_; ++j) {
    const int64_t ts = timestamp + j * interval_;
    const std::vector<double> feats = profile_->seasonal_features(ts);
    for (size_t c = 0; c < m; ++c)
      seq.frames[j - 1][c] = std::clamp(
          profile_->trend_at(ts, c) + feats[2 * c] + feats[2 * c + 1], 0.0,
          1.0);
  }
  return seq;
}

// ------------------------------------------------------------- checkpoints

namespace {

constexpr char kMagic[8] = {'A', 'D', 'L', 'T', 'I', 'M', 'D', 'L'};

}  // namespace

void ForecastModel::save(const std::string& path) const {
  nlohmann::json meta;
  meta["topology"] = {{"channels", topo_.channels},
                      {"horizon", topo_.horizon},
                      {"seasonal", topo_.seasonal},
                      {"hidden_width", topo_.hidden_width},
                      {"depth", topo_.depth}};
  meta["stats"] = {{"epochs_run", stats.epochs_run},
                   {"best_val_mse", stats.best_val_mse}};
  nlohmann::json manifest = nlohmann::json::array();
  ParamSet& mutable_params = const_cast<ParamSet&>(params_);
  for (const ParamView& v : mutable_params.views())
    manifest.push_back({{"name", v.name}, {"rows", v.rows}, {"cols", v.cols}});
  meta["params"] = manifest;
  const std::string meta_str = meta.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out.write(kMagic, sizeof(kMagic));
  const uint32_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const uint64_t meta_len = meta_str.size();
  out.write(reinterpret_cast<const char*>(&meta_len), sizeof(meta_len));
  out.write(meta_str.data(), meta_str.size());
  for (const ParamView& v : mutable_params.views())
    out.write(reinterpret_cast<const char*>(v.data),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!out) throw DataError("short write to '" + path + "'");
}

ForecastModel ForecastModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError("'" + path + "' is not a model checkpoint");
  uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != 1)
    throw DataError("unsupported checkpoint version " +
                    std::to_string(version));
  uint64_t meta_len = 0;
  in.read(reinterpret_cast<char*>(&meta_len), sizeof(meta_len));
  std::string meta_str(meta_len, '\0');
  in.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
  if (!in) throw DataError("truncated checkpoint '" + path + "'");

  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_str);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("corrupt checkpoint metadata: ") + e.what());
  }
  NetworkTopology topo;
  const nlohmann::json& jt = meta.at("topology");
  topo.channels = jt.at("channels").get<int>();
  topo.horizon = jt.at("horizon").get<int>();
  topo.seasonal = jt.at("seasonal").get<bool>();
  topo.hidden_width = jt.at("hidden_width").get<int>();
  topo.depth = jt.at("depth").get<int>();
  check_topology(topo);

  ForecastModel model;
  model.topo_ = topo;
  model.params_ = allocate_params(topo);
  model.stats.epochs_run = meta.at("stats").at("epochs_run").get<int>();
  model.stats.best_val_mse = meta.at("stats").at("best_val_mse").get<double>();

  std::vector<ParamView> views = model.params_.views();
  const nlohmann::json& manifest = meta.at("params");
  if (manifest.size() != views.size())
    throw DataError("checkpoint has " + std::to_string(manifest.size()) +
                    " parameter blocks, topology implies " +
                    std::to_string(views.size()));
  for (size_t i = 0; i < views.size(); ++i) {
    const nlohmann::json& entry = manifest[i];
    if (entry.at("name").get<std::string>() != views[i].name ||
        entry.at("rows").get<size_t>() != views[i].rows ||
        entry.at("cols").get<size_t>() != views[i].cols)
      throw DataError("checkpoint parameter block '" +
                      entry.at("name").get<std::string>() +
                      "' does not match the declared topology");
    in.read(reinterpret_cast<char*>(views[i].data),
            static_cast<std::streamsize>(views[i].size() * sizeof(double)));
  }
  if (!in) throw DataError("truncated checkpoint '" + path + "'");
  model.reset_state();
  return model;
}

}  // namespace adlti
