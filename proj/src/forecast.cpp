#include "avmig/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "avmig/errors.hpp"
#include "avmig/nn/adam.hpp"
#include "avmig/nn/checkpoint.hpp"

namespace avmig {

Normalizer Normalizer::fit(std::span<const MobilityTrace> traces) {
  Normalizer n;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  n.lo = Eigen::Vector2d::Constant(kInf);
  n.hi = Eigen::Vector2d::Constant(-kInf);
  for (const auto& trace : traces) {
    for (const auto& s : trace.samples) {
      n.lo = n.lo.cwiseMin(s.position);
      n.hi = n.hi.cwiseMax(s.position);
    }
  }
  if (!n.lo.allFinite()) {
    n.lo.setZero();
    n.hi.setOnes();
  }
  return n;
}

Eigen::Vector2d Normalizer::normalize(const Position& p) const {
  Eigen::Vector2d u;
  for (int k = 0; k < 2; ++k) {
    const double range = hi[k] - lo[k];
    u[k] = range > 0.0 ? (p[k] - lo[k]) / range : 0.5;
  }
  return u;
}

Position Normalizer::denormalize(const Eigen::Vector2d& u) const {
  Position p;
  for (int k = 0; k < 2; ++k) {
    const double range = hi[k] - lo[k];
    p[k] = range > 0.0 ? lo[k] + u[k] * range : lo[k];
  }
  return p;
}

WindowSet window_dataset(std::span<const MobilityTrace> traces, int history,
                         int horizon) {
  return window_dataset(traces, Normalizer::fit(traces), history, horizon);
}

WindowSet window_dataset(std::span<const MobilityTrace> traces,
                         const Normalizer& normalizer, int history, int horizon) {
  if (history < 1 || horizon < 1) throw ConfigError("window lengths must be positive");
  WindowSet set;
  set.normalizer = normalizer;
  const auto need = static_cast<std::size_t>(history + horizon);
  for (std::size_t ti = 0; ti < traces.size(); ++ti) {
    const auto& samples = traces[ti].samples;
    if (samples.size() < need) {
      ++set.skipped_traces;
      continue;
    }
    for (std::size_t start = 0; start + need <= samples.size(); ++start) {
      TrajWindow w;
      w.trace_index = static_cast<int>(ti);
      w.history.reserve(static_cast<std::size_t>(history));
      for (int k = 0; k < history; ++k) {
        w.history.push_back(normalizer.normalize(samples[start + k].position));
      }
      w.target = normalizer.normalize(samples[start + history + horizon - 1].position);
      set.windows.push_back(std::move(w));
    }
  }
  return set;
}

WindowSplit split_windows(std::span<const TrajWindow> windows, double holdout) {
  std::vector<int> per_trace;
  for (const auto& w : windows) {
    if (w.trace_index >= static_cast<int>(per_trace.size())) per_trace.resize(w.trace_index + 1, 0);
    ++per_trace[w.trace_index];
  }
  std::vector<int> seen(per_trace.size(), 0);
  WindowSplit split;
  for (const auto& w : windows) {
    const int n = per_trace[w.trace_index];
    const int held = static_cast<int>(std::floor(holdout * n));
    if (seen[w.trace_index]++ >= n - held) {
      split.test.push_back(w);
    } else {
      split.train.push_back(w);
    }
  }
  return split;
}

ForecastModel::ForecastModel(int hidden, int history)
    : history_(history),
      lstm1_("lstm1", 2, hidden),
      lstm2_("lstm2", hidden, hidden),
      dense_("dense", hidden, 2) {
  if (hidden < 1 || history < 1) throw ConfigError("forecaster sizes must be positive");
}

void ForecastModel::init_uniform(nn::Rng& rng) {
  lstm1_.init_uniform(rng);
  lstm2_.init_uniform(rng);
  dense_.init_uniform(rng);
  // Start mid-range so the output ReLU is active for every coordinate.
  dense_.bias.value.setConstant(0.5);
}

std::vector<nn::Parameter*> ForecastModel::parameters() {
  std::vector<nn::Parameter*> out = lstm1_.parameters();
  for (auto* p : lstm2_.parameters()) out.push_back(p);
  for (auto* p : dense_.parameters()) out.push_back(p);
  return out;
}

void ForecastModel::check_windows(std::span<const TrajWindow> windows) const {
  for (const auto& w : windows) {
    if (static_cast<int>(w.history.size()) != history_) {
      throw ContractViolation("forecaster expects " + std::to_string(history_) +
                              " history steps, got " + std::to_string(w.history.size()));
    }
  }
}

namespace {

nn::Matrix step_inputs(std::span<const TrajWindow> windows, int t) {
  nn::Matrix x(2, static_cast<Eigen::Index>(windows.size()));
  for (std::size_t j = 0; j < windows.size(); ++j) x.col(j) = windows[j].history[t];
  return x;
}

}  // namespace

Eigen::Vector2d ForecastModel::predict(const TrajWindow& window) const {
  return predict_batch(std::span<const TrajWindow>(&window, 1)).col(0);
}

Eigen::Matrix2Xd ForecastModel::predict_batch(std::span<const TrajWindow> windows) const {
  check_windows(windows);
  const auto b = static_cast<Eigen::Index>(windows.size());
  const auto h = lstm1_.hidden();
  nn::LstmState s1{nn::Matrix::Zero(h, b), nn::Matrix::Zero(h, b)};
  nn::LstmState s2 = s1;
  for (int t = 0; t < history_; ++t) {
    s1 = nn::lstm_cell(lstm1_, step_inputs(windows, t), s1.h, s1.c);
    s2 = nn::lstm_cell(lstm2_, s1.h, s2.h, s2.c);
  }
  return nn::dense_forward(dense_, s2.h).cwiseMax(0.0);
}

nn::Var ForecastModel::loss(nn::Tape& tape, std::span<const TrajWindow> windows,
                            double dropout, nn::Rng* rng) {
  check_windows(windows);
  const auto b = static_cast<Eigen::Index>(windows.size());
  const auto h = lstm1_.hidden();
  nn::LstmVars s1{tape.constant(nn::Matrix::Zero(h, b)), tape.constant(nn::Matrix::Zero(h, b))};
  nn::LstmVars s2 = s1;
  std::bernoulli_distribution keep(1.0 - dropout);
  const bool use_dropout = rng != nullptr && dropout > 0.0;
  for (int t = 0; t < history_; ++t) {
    s1 = nn::lstm_cell(tape, lstm1_, tape.constant(step_inputs(windows, t)), s1.h, s1.c);
    nn::Var inter = s1.h;
    if (use_dropout) {
      nn::Matrix mask(h, b);
      for (Eigen::Index j = 0; j < b; ++j) {
        for (Eigen::Index i = 0; i < h; ++i) mask(i, j) = keep(*rng) ? 1.0 / (1.0 - dropout) : 0.0;
      }
      inter = nn::hadamard(tape.constant(std::move(mask)), inter);
    }
    s2 = nn::lstm_cell(tape, lstm2_, inter, s2.h, s2.c);
  }
  nn::Var out = nn::relu(nn::dense_forward(tape, dense_, s2.h));
  nn::Matrix target(2, b);
  for (Eigen::Index j = 0; j < b; ++j) target.col(j) = windows[j].target;
  return nn::mean(nn::square(out - tape.constant(std::move(target))));
}

void ForecastModel::save(std::ostream& out) const {
  nlohmann::json meta;
  meta["hidden"] = hidden();
  meta["history"] = history_;
  meta["normalizer"] = {{"lo", {normalizer.lo[0], normalizer.lo[1]}},
                        {"hi", {normalizer.hi[0], normalizer.hi[1]}}};
  auto params = const_cast<ForecastModel*>(this)->parameters();
  nn::write_checkpoint(out, "forecaster", meta, params);
}

ForecastModel ForecastModel::load(std::istream& in) {
  const nn::Checkpoint ckpt = nn::read_checkpoint(in);
  if (ckpt.kind != "forecaster") throw ValidationError("checkpoint is not a forecaster");
  try {
    ForecastModel model(ckpt.meta.at("hidden").get<int>(), ckpt.meta.at("history").get<int>());
    const auto& n = ckpt.meta.at("normalizer");
    model.normalizer.lo = {n.at("lo").at(0).get<double>(), n.at("lo").at(1).get<double>()};
    model.normalizer.hi = {n.at("hi").at(0).get<double>(), n.at("hi").at(1).get<double>()};
    nn::restore(ckpt, model.parameters());
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("forecaster checkpoint metadata: ") + e.what());
  }
}

TrainResult train_forecaster(std::span<const TrajWindow> windows,
                             const Normalizer& normalizer,
                             const ForecastConfig& config) {
  if (windows.empty()) throw ConfigError("cannot train a forecaster on an empty dataset");
  if (config.batch < 1 || config.epochs < 0) throw ConfigError("invalid forecaster training config");
  nn::Rng rng(config.seed);
  TrainResult result{ForecastModel(config.hidden, config.history), {}, 0};
  ForecastModel& model = result.model;
  model.normalizer = normalizer;
  model.init_uniform(rng);
  nn::Adam adam(model.parameters(), {.learning_rate = config.learning_rate});

  Eigen::MatrixXd targets(2, static_cast<Eigen::Index>(windows.size()));
  for (std::size_t j = 0; j < windows.size(); ++j) targets.col(j) = windows[j].target;

  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<TrajWindow> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      const std::size_t end = std::min(order.size(), start + config.batch);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(windows[order[k]]);
      nn::Tape tape;
      adam.zero_grad();
      tape.backward(model.loss(tape, batch, config.dropout, &rng));
      if (!adam.step().applied) ++result.skipped_steps;
    }
    result.epoch_mse.push_back((model.predict_batch(windows) - targets).squaredNorm() /
                               static_cast<double>(targets.size()));
  }
  return result;
}

ForecastMetrics eval_metrics(const Eigen::MatrixXd& preds, const Eigen::MatrixXd& targets) {
  if (preds.rows() != targets.rows() || preds.cols() != targets.cols() || preds.size() < 2) {
    throw ContractViolation("eval_metrics needs equal shapes with at least 2 entries");
  }
  const Eigen::ArrayXd err = (preds - targets).reshaped().array();
  const double n = static_cast<double>(err.size());
  ForecastMetrics m;
  m.mse = err.square().mean();
  m.mae = err.abs().mean();
  std::vector<double> abs(err.size());
  for (Eigen::Index k = 0; k < err.size(); ++k) abs[k] = std::abs(err[k]);
  std::sort(abs.begin(), abs.end());
  const std::size_t mid = abs.size() / 2;
  m.medae = abs.size() % 2 ? abs[mid] : 0.5 * (abs[mid - 1] + abs[mid]);
  const Eigen::ArrayXd t = targets.reshaped().array();
  const double ss_tot = (t - t.mean()).square().sum();
  if (t.maxCoeff() > t.minCoeff()) m.r2 = 1.0 - m.mse * n / ss_tot;
  return m;
}

std::vector<int> region_count(std::span<const Position> positions,
                              std::span<const RsuSpec> rsus) {
  std::vector<int> z(rsus.size(), 0);
  for (const auto& p : positions) {
    int best = -1;
    double best_d = 0.0;
    for (std::size_t m = 0; m < rsus.size(); ++m) {
      const double d = distance(p, rsus[m].position);
      if (d > rsus[m].coverage_radius) continue;
      if (best < 0 || d < best_d || (d == best_d && rsus[m].id < rsus[best].id)) {
        best = static_cast<int>(m);
        best_d = d;
      }
    }
    if (best >= 0) ++z[best];
  }
  return z;
}

double predict_workload(double prior, double zeta, int z, double cap) {
  return std::max(0.0, std::min(prior + zeta * z, cap));
}

std::vector<Position> LstmForecaster::forecast(const World& world, int slot) const {
  const int hist = model_->history();
  std::vector<TrajWindow> windows(world.vehicles().size());
  for (std::size_t v = 0; v < windows.size(); ++v) {
    windows[v].history.reserve(hist);
    for (int k = slot - hist; k < slot; ++k) {
      windows[v].history.push_back(model_->normalizer.normalize(world.position(v, k)));
    }
  }
  const Eigen::Matrix2Xd u = model_->predict_batch(windows);
  std::vector<Position> out;
  out.reserve(windows.size());
  for (Eigen::Index j = 0; j < u.cols(); ++j) out.push_back(model_->normalizer.denormalize(u.col(j)));
  return out;
}

}  // namespace avmig
