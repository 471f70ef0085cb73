#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "fseg3d/geometry.hpp"

namespace fseg3d {

struct Box {
  Eigen::Vector3d min_corner;
  Eigen::Vector3d max_corner;
};

/// Parallelogram centred at `center`, spanning center +- axis_u +- axis_v.
/// The axes must be orthogonal; their lengths are the half extents.
struct FinitePlane {
  Eigen::Vector3d center;
  Eigen::Vector3d axis_u;
  Eigen::Vector3d axis_v;
};

struct Sphere {
  Eigen::Vector3d center;
  double radius = 1.0;
};

struct Primitive {
  std::variant<Box, FinitePlane, Sphere> shape;
  int class_index = 0;
};

/// Ray parameter of the nearest hit with t > kMinRayT, if any.
std::optional<double> intersect(const Primitive& prim, const Eigen::Vector3d& origin,
                                const Eigen::Vector3d& dir);

struct Scene {
  std::vector<Primitive> primitives;
  int num_classes = 1;
  /// Class name for rays that hit nothing; render() still reports those
  /// pixels as missing with invalid depth.
  int background_class = 0;

  /// Throws InvalidArgument on out-of-range classes or degenerate shapes.
  void validate() const;
};

/// Camera pose in the world: world_from_camera maps camera coordinates to
/// world coordinates.
struct CameraPose {
  Se3 world_from_camera;
};

struct RenderResult {
  DepthMap depth;
  SegmentationMap segmentation;
};

/// Casts one ray per pixel centre; depth is the camera-frame z of the
/// nearest hit. Pixels whose ray hits nothing are missing/invalid.
RenderResult render(const Scene& scene, const CameraPose& pose, const CameraIntrinsics& k);

enum class TrajectoryKind { kConstantVelocity, kConstantAcceleration, kCircularTurn };

std::string to_string(TrajectoryKind kind);
TrajectoryKind trajectory_kind_from_string(const std::string& name);

/// Trajectory parameters live in ego-motion space (the transform applied to
/// camera-frame points): step s uses
///   constant_velocity:     velocity
///   constant_acceleration: velocity + s * acceleration
///   circular_turn:         (turn_translation, yaw = total_angle / num_steps)
struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::kConstantVelocity;
  EgoMotion velocity;
  EgoMotion acceleration;
  Eigen::Vector3d turn_translation = Eigen::Vector3d::Zero();
  double total_angle = 0.0;
  int num_steps = 2;
  /// Per-component standard deviation of the noise added to emitted vectors.
  std::array<double, 6> noise_sigma{};
  std::uint64_t seed = 0;
  CameraPose start_pose;

  void validate() const;
  /// Noise-free step motions.
  std::vector<EgoMotion> exact_motions() const;
};

struct SimFrame {
  CameraPose pose;
  DepthMap depth;
  SegmentationMap segmentation;
  /// Motion from this frame to the next; absent for the last frame.
  std::optional<EgoMotion> motion_to_next;
};

/// Renders num_steps + 1 frames. Poses follow the exact motions; emitted
/// vectors carry the seeded Gaussian noise.
std::vector<SimFrame> generate_sequence(const Scene& scene, const TrajectorySpec& spec,
                                        const CameraIntrinsics& k);

/// Relative transform taking camera-`from` coordinates to camera-`to`
/// coordinates.
Se3 relative_motion(const CameraPose& from, const CameraPose& to);

/// Uniform box of trajectory parameters for drawing random ego-motion
/// sequences (training data for the forecaster).
struct TrajectorySampling {
  EgoMotion velocity_min;
  EgoMotion velocity_max;
  EgoMotion acceleration_min;
  EgoMotion acceleration_max;
  /// Per-component noise added to every emitted vector.
  std::array<double, 6> noise_sigma{};

  /// Slow urban driving: forward speed 0.1-0.5 units per step with small
  /// lateral drift and yaw, accelerations up to 0.08 units per step^2.
  static TrajectorySampling urban_driving();
};

/// `count` ego-motion sequences of `length` steps each. Velocity and (for
/// constant_acceleration) acceleration are drawn per sequence; circular_turn
/// is not supported here. Deterministic in `seed`.
std::vector<std::vector<EgoMotion>> sample_trajectories(TrajectoryKind kind,
                                                        const TrajectorySampling& sampling,
                                                        int count, int length, std::uint64_t seed);

/// Ground plane, two side walls, an end wall and three boxes; classes
/// road(0), building(1), car(2), truck(3), far wall(4).
Scene street_canyon_scene();
/// 256 x 128 camera used with street_canyon_scene().
CameraIntrinsics street_canyon_intrinsics();

}  // namespace fseg3d
