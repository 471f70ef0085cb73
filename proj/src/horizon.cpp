#include "fseg3d/horizon.hpp"

#include <utility>

#include "fseg3d/errors.hpp"
#include "fseg3d/eval.hpp"
#include "fseg3d/warp.hpp"

namespace fseg3d {

std::vector<TrajectorySpec> accelerating_trajectories() {
  std::vector<TrajectorySpec> out;
  for (double z0 : {0.0, 2.0, 4.0, 6.0}) {
    for (double yaw_rate : {-0.01, 0.0, 0.01}) {
      for (double drift : {-0.05, 0.05}) {
        TrajectorySpec t;
        t.kind = TrajectoryKind::kConstantAcceleration;
        t.velocity = {drift, 0.0, -0.3, 0.0, yaw_rate, 0.0};
        const double yaw_accel = yaw_rate < 0.0 ? -0.005 : 0.005;
        t.acceleration = {0.0, 0.0, -0.05, 0.0, yaw_accel, 0.0};
        t.num_steps = 9;
        t.start_pose.world_from_camera.translation = Eigen::Vector3d(0.0, 0.0, z0);
        out.push_back(t);
      }
    }
  }
  return out;
}

HorizonBenchmark make_accelerating_benchmark() {
  HorizonBenchmark b;
  b.scene = street_canyon_scene();
  b.intrinsics = street_canyon_intrinsics();
  b.trajectories = accelerating_trajectories();
  for (const auto& t : b.trajectories) {
    b.sequences.push_back(generate_sequence(b.scene, t, b.intrinsics));
  }
  return b;
}

EgoForecaster copy_forecaster() {
  return [](std::span<const EgoMotion> observed, int steps) {
    if (observed.empty()) throw InvalidArgument("copy forecaster: no observed motion");
    return std::vector<EgoMotion>(static_cast<std::size_t>(steps), observed.back());
  };
}

EgoForecaster lstm_forecaster(LstmModel model, int history_length) {
  return [model = std::move(model), history_length](std::span<const EgoMotion> observed, int steps) {
    if (static_cast<int>(observed.size()) < history_length) {
      throw InvalidArgument("lstm forecaster: fewer observed motions than history length");
    }
    TrajectoryHistory history(observed.end() - history_length, observed.end());
    return lstm_rollout(model, std::move(history), steps, history_length);
  };
}

EgoForecaster exact_forecaster(const std::vector<EgoMotion>& truth) {
  return [truth](std::span<const EgoMotion> observed, int steps) {
    const std::size_t from = observed.size();
    if (from + static_cast<std::size_t>(steps) > truth.size()) {
      throw InvalidArgument("exact forecaster: horizon beyond known trajectory");
    }
    return std::vector<EgoMotion>(truth.begin() + from, truth.begin() + from + steps);
  };
}

std::vector<HorizonRow> run_horizon_benchmark(
    const HorizonBenchmark& bench, const std::function<EgoForecaster(std::size_t)>& forecaster_for) {
  if (bench.sequences.empty()) throw InvalidArgument("horizon benchmark: no sequences");
  if (bench.max_transforms < 1 || bench.max_transforms > bench.target_frame) {
    throw InvalidArgument("horizon benchmark: max_transforms out of range");
  }
  std::vector<HorizonRow> rows(bench.max_transforms);
  for (int t = 1; t <= bench.max_transforms; ++t) rows[t - 1].transforms = t;

  for (std::size_t i = 0; i < bench.sequences.size(); ++i) {
    const auto& frames = bench.sequences[i];
    if (static_cast<int>(frames.size()) <= bench.target_frame) {
      throw InvalidArgument("horizon benchmark: sequence shorter than target frame");
    }
    const EgoForecaster forecast = forecaster_for(i);
    std::vector<EgoMotion> observed;
    for (int f = 0; f < bench.target_frame; ++f) observed.push_back(*frames[f].motion_to_next);

    const SegmentationMap& truth = frames[bench.target_frame].segmentation;
    for (auto& row : rows) {
      const int source = bench.target_frame - row.transforms;
      const auto motions =
          forecast(std::span<const EgoMotion>(observed.data(), source), row.transforms);
      const PredictionSequence seq = predict_future(frames[source].depth, frames[source].segmentation,
                                                    bench.intrinsics, motions);
      row.segmentation_copy += evaluate(frames[source].segmentation, truth, false).mean_iou;
      row.transform += evaluate(seq.steps.back().raw.segmentation, truth, false).mean_iou;
      row.transform_inpaint += evaluate(seq.steps.back().segmentation, truth, false).mean_iou;
    }
  }
  const double n = static_cast<double>(bench.sequences.size());
  for (auto& row : rows) {
    row.segmentation_copy /= n;
    row.transform /= n;
    row.transform_inpaint /= n;
  }
  return rows;
}

}  // namespace fseg3d
