#pragma once

#include <functional>
#include <span>
#include <vector>

#include "fseg3d/forecast.hpp"
#include "fseg3d/simulator.hpp"

namespace fseg3d {

/// Street-canyon runs with accelerating ego-motion, used to study how
/// prediction quality falls off with the number of motion transforms.
/// Every sequence is predicted towards the same target frame from
/// target - T for T = 1..max_transforms.
struct HorizonBenchmark {
  Scene scene;
  CameraIntrinsics intrinsics;
  std::vector<TrajectorySpec> trajectories;
  std::vector<std::vector<SimFrame>> sequences;
  int target_frame = 9;
  int max_transforms = 5;
};

/// 24 runs of 10 frames: forward speed 0.3 growing by 0.05 per frame,
/// lateral drift +-0.05, yaw rate {-0.01, 0, 0.01} with matching yaw
/// acceleration, four start depths along the street.
std::vector<TrajectorySpec> accelerating_trajectories();
HorizonBenchmark make_accelerating_benchmark();

/// Given the motions observed up to the source frame (oldest first), returns
/// `steps` future motions.
using EgoForecaster = std::function<std::vector<EgoMotion>(std::span<const EgoMotion>, int)>;

EgoForecaster copy_forecaster();
EgoForecaster lstm_forecaster(LstmModel model, int history_length);
/// The true motions of each sequence; for upper-bound comparisons.
EgoForecaster exact_forecaster(const std::vector<EgoMotion>& truth);

/// Mean IoU (missing counted as wrong) at one transform count, averaged
/// over sequences.
struct HorizonRow {
  int transforms = 0;
  double segmentation_copy = 0.0;  ///< source frame used unchanged
  double transform = 0.0;          ///< warped, holes left MISSING
  double transform_inpaint = 0.0;  ///< warped and inpainted
};

/// Rows ordered by transform count, 1 first. `forecaster_for(i)` supplies
/// the forecaster for sequence i.
std::vector<HorizonRow> run_horizon_benchmark(
    const HorizonBenchmark& bench, const std::function<EgoForecaster(std::size_t)>& forecaster_for);

}  // namespace fseg3d
