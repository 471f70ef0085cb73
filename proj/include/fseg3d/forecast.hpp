#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fseg3d/geometry.hpp"

namespace fseg3d {

/// Past ego-motions, oldest first.
using TrajectoryHistory = std::vector<EgoMotion>;

/// Repeats the most recent motion. Throws InvalidArgument on empty history.
EgoMotion copy_forecast(const TrajectoryHistory& history);

/// Weights of one LSTM cell. Gate rows are stacked in the order
/// input, forget, candidate, output (4 * hidden rows).
struct LstmLayer {
  static constexpr int kUnits = 6;
  using GateMatrix = Eigen::Matrix<double, 4 * kUnits, kUnits>;
  using GateVector = Eigen::Matrix<double, 4 * kUnits, 1>;

  GateMatrix w_in = GateMatrix::Zero();   // 4H x input
  GateMatrix w_rec = GateMatrix::Zero();  // 4H x H
  GateVector bias = GateVector::Zero();   // 4H

  bool operator==(const LstmLayer& o) const {
    return w_in == o.w_in && w_rec == o.w_rec && bias == o.bias;
  }
};

/// Stacked LSTM weights; also used as the gradient type.
struct LstmParams {
  std::vector<LstmLayer> layers;

  std::size_t parameter_count() const;
  /// Concatenation of every layer's w_in, w_rec, bias, each row-major.
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> values);
  LstmParams zeros_like() const;
  bool all_finite() const;

  bool operator==(const LstmParams&) const = default;
};

struct LstmModel {
  static constexpr int kLayers = 3;
  static constexpr int kHidden = LstmLayer::kUnits;
  static constexpr int kInput = LstmLayer::kUnits;
  using ComponentScale = Eigen::Matrix<double, kInput, 1>;

  LstmParams params;
  /// Fixed (not trained) per-component scale: the cells see motion / scale
  /// and the prediction is scale * h_top. All ones means raw ego-motion in
  /// and out.
  ComponentScale component_scale = ComponentScale::Ones();
  std::int64_t step = 0;

  /// Forget-gate biases 1.0, every other weight uniform in [-0.1, 0.1].
  static LstmModel initialize(std::uint64_t seed);
  /// All weights and biases zero.
  static LstmModel zeros();

  bool operator==(const LstmModel& o) const {
    return params == o.params && component_scale == o.component_scale && step == o.step;
  }
};

/// 1.25 x the largest absolute value of each component over all histories
/// and targets, so scaled inputs stay inside (-0.8, 0.8). Components that are
/// identically zero keep scale 1.
LstmModel::ComponentScale fit_component_scale(std::span<const struct TrainingSample> samples);

/// Runs the history through the stack from zero state and returns the top
/// layer's final hidden state.
EgoMotion lstm_forward(const LstmModel& model, const TrajectoryHistory& history);

/// Sum of absolute component differences.
double lstm_loss(const EgoMotion& pred, const EgoMotion& target);

/// Exact BPTT gradient of lstm_loss(lstm_forward(model, history), target).
/// The l1 subgradient at a zero residual is taken as 0.
LstmParams lstm_gradient(const LstmModel& model, const TrajectoryHistory& history,
                         const EgoMotion& target);

/// Returns the prediction together with the gradient.
std::pair<EgoMotion, LstmParams> lstm_forward_backward(const LstmModel& model,
                                                       const TrajectoryHistory& history,
                                                       const EgoMotion& target);

struct TrainingSample {
  TrajectoryHistory history;
  EgoMotion target;
};

struct TrainConfig {
  double lr_start = 1e-4;
  double lr_end = 1e-6;
  double momentum = 0.9;
  std::int64_t total_steps = 50'000;
  int batch_size = 32;
  std::uint64_t seed = 0;
  /// Fit LstmModel::component_scale to the dataset before training.
  bool normalize = false;
  /// Full-dataset loss is recorded every log_interval steps (and at both ends).
  std::int64_t log_interval = 1'000;

  /// 1e-4 -> 1e-6, momentum 0.9, raw ego-motion. Tuned for ~1M steps.
  static TrainConfig long_schedule() { return {}; }
  /// 1e-1 -> 1e-3, momentum 0.9, fitted component scale; converges within
  /// the default 50k steps.
  static TrainConfig desk_scale() {
    TrainConfig cfg;
    cfg.lr_start = 1e-1;
    cfg.lr_end = 1e-3;
    cfg.normalize = true;
    return cfg;
  }

  void validate() const;
};

/// lr(s) = lr_start * (lr_end / lr_start)^(s / total_steps).
double learning_rate(const TrainConfig& cfg, std::int64_t step);

struct LossPoint {
  std::int64_t step = 0;
  double learning_rate = 0.0;
  double loss = 0.0;
};

struct TrainResult {
  LstmModel model;
  std::vector<LossPoint> loss_curve;
};

/// Mean l1 loss of the model over the samples.
double mean_loss(const LstmModel& model, std::span<const TrainingSample> samples);
/// Mean l1 loss of copy_forecast over the samples.
double copy_mean_loss(std::span<const TrainingSample> samples);

/// Momentum SGD (v <- mu v + g; w <- w - lr v) on mean batch l1 loss,
/// batches drawn with replacement from a generator seeded by cfg.seed.
/// Throws InvalidArgument for an empty dataset.
TrainResult lstm_train(std::span<const TrainingSample> dataset, const TrainConfig& cfg);
/// Continues training an existing model.
TrainResult lstm_train(std::span<const TrainingSample> dataset, const TrainConfig& cfg,
                       LstmModel initial);

/// Slides a window of `history_length` motions over the trajectory; each
/// window's successor becomes the target.
std::vector<TrainingSample> make_samples(const std::vector<EgoMotion>& trajectory,
                                         int history_length);

/// Autoregressive roll-out: each prediction is appended to the history.
std::vector<EgoMotion> lstm_rollout(const LstmModel& model, TrajectoryHistory history, int steps,
                                    int history_length);

/// Checkpoint layout: the line "FSEG3D-LSTM", one line of JSON header
/// (format_version, layers, hidden_size, input_size, step, gate_order,
/// blocks), then as little-endian float64: component_scale (6 values),
/// followed by every layer's w_in, w_rec (row-major) and bias.
std::string encode_checkpoint(const LstmModel& model);
LstmModel decode_checkpoint(std::string_view bytes);
void save_checkpoint(const LstmModel& model, const std::filesystem::path& path);
LstmModel load_checkpoint(const std::filesystem::path& path);

}  // namespace fseg3d
