#ifndef AVMIG_FORECAST_HPP_
#define AVMIG_FORECAST_HPP_

#include <cstdint>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "avmig/nn/layers.hpp"
#include "avmig/world.hpp"

// Coverage-aware workload forecasting: a two-layer LSTM predicts each
// vehicle's next position from its recent history; predicted positions are
// binned into RSU coverage regions and turned into workload estimates.
namespace avmig {

// Per-axis min-max scaling into [0,1]. An axis with zero range maps to 0.5.
struct Normalizer {
  Eigen::Vector2d lo = Eigen::Vector2d::Zero();
  Eigen::Vector2d hi = Eigen::Vector2d::Ones();

  static Normalizer fit(std::span<const MobilityTrace> traces);
  Eigen::Vector2d normalize(const Position& p) const;
  Position denormalize(const Eigen::Vector2d& u) const;
};

struct TrajWindow {
  std::vector<Eigen::Vector2d> history;  // normalized, oldest first
  Eigen::Vector2d target = Eigen::Vector2d::Zero();
  int trace_index = 0;
};

struct WindowSet {
  std::vector<TrajWindow> windows;
  Normalizer normalizer;
  int skipped_traces = 0;  // shorter than history + horizon
};

// Every maximal sliding window of every trace. The target is the sample
// `horizon` steps after the last history sample.
WindowSet window_dataset(std::span<const MobilityTrace> traces, int history = 12,
                         int horizon = 1);
WindowSet window_dataset(std::span<const MobilityTrace> traces,
                         const Normalizer& normalizer, int history = 12,
                         int horizon = 1);

// Holds out the last `holdout` share (rounded down) of each trace's windows.
struct WindowSplit {
  std::vector<TrajWindow> train;
  std::vector<TrajWindow> test;
};
WindowSplit split_windows(std::span<const TrajWindow> windows, double holdout = 0.2);

struct ForecastConfig {
  int hidden = 256;
  int history = 12;
  int horizon = 1;
  double dropout = 0.05;
  int epochs = 500;
  int batch = 40;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

// lstm1 -> dropout -> lstm2 -> dense -> ReLU. Parameters start at zero;
// call init_uniform() before training.
class ForecastModel {
 public:
  ForecastModel() : ForecastModel(256, 12) {}
  ForecastModel(int hidden, int history);

  void init_uniform(nn::Rng& rng);
  int hidden() const { return static_cast<int>(lstm1_.hidden()); }
  int history() const { return history_; }
  std::vector<nn::Parameter*> parameters();

  Normalizer normalizer;

  // Dropout-free forward pass; `windows` must all have history() steps.
  Eigen::Vector2d predict(const TrajWindow& window) const;
  // One column per window.
  Eigen::Matrix2Xd predict_batch(std::span<const TrajWindow> windows) const;

  // Mean squared error over a batch, recorded on `tape`. Dropout with rate
  // `dropout` is applied when `rng` is non-null.
  nn::Var loss(nn::Tape& tape, std::span<const TrajWindow> windows,
               double dropout, nn::Rng* rng);

  void save(std::ostream& out) const;
  static ForecastModel load(std::istream& in);

 private:
  void check_windows(std::span<const TrajWindow> windows) const;

  int history_;
  nn::LstmCell lstm1_;
  nn::LstmCell lstm2_;
  nn::DenseLayer dense_;
};

struct TrainResult {
  ForecastModel model;
  // Full training-set MSE (dropout off) after each epoch.
  std::vector<double> epoch_mse;
  int skipped_steps = 0;
};

// Throws ConfigError for an empty dataset.
TrainResult train_forecaster(std::span<const TrajWindow> windows,
                             const Normalizer& normalizer,
                             const ForecastConfig& config);

struct ForecastMetrics {
  double mse = 0.0;
  double mae = 0.0;
  std::optional<double> r2;  // undefined when targets have zero variance
  double medae = 0.0;
};

// Over flattened coordinate errors. Requires equal shapes with >= 2 entries.
ForecastMetrics eval_metrics(const Eigen::MatrixXd& preds,
                             const Eigen::MatrixXd& targets);

// Vehicles whose predicted position lies in some coverage disk, each counted
// once toward the nearest covering RSU (smallest id on ties). Aligned with
// `rsus`.
std::vector<int> region_count(std::span<const Position> positions,
                              std::span<const RsuSpec> rsus);

// min(prior + zeta * z, cap), floored at 0.
double predict_workload(double prior, double zeta, int z, double cap);

// Source of predicted vehicle positions for a slot, used by the environment.
class PositionForecaster {
 public:
  virtual ~PositionForecaster() = default;
  // Predicted positions of every vehicle (World::vehicles() order) at `slot`
  // using only positions from earlier slots.
  virtual std::vector<Position> forecast(const World& world, int slot) const = 0;
};

class LstmForecaster : public PositionForecaster {
 public:
  explicit LstmForecaster(std::shared_ptr<const ForecastModel> model)
      : model_(std::move(model)) {}
  std::vector<Position> forecast(const World& world, int slot) const override;

 private:
  std::shared_ptr<const ForecastModel> model_;
};

}  // namespace avmig

#endif  // AVMIG_FORECAST_HPP_
