#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "fseg3d/image.hpp"

namespace fseg3d {

/// Pinhole intrinsics. Pixel centres sit at integer coordinates; i is the
/// column, j the row.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  /// Throws InvalidArgument unless fx, fy > 0 and the principal point lies
  /// inside the image.
  void validate() const;
  Eigen::Matrix3d matrix() const;

  bool operator==(const CameraIntrinsics&) const = default;
};

/// Camera motion between two frames: translation in depth units, rotation in
/// radians. Maps frame-t camera coordinates into frame-(t+1) coordinates.
struct EgoMotion {
  double tx = 0.0;
  double ty = 0.0;
  double tz = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
  double roll = 0.0;

  static constexpr std::size_t kDim = 6;

  std::array<double, kDim> as_array() const { return {tx, ty, tz, pitch, yaw, roll}; }
  static EgoMotion from_array(const std::array<double, kDim>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5]};
  }
  bool is_finite() const;

  bool operator==(const EgoMotion&) const = default;
};

/// Rigid transform p -> R p + t.
struct Se3 {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Se3 identity() { return {}; }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }
  Se3 inverse() const;

  bool operator==(const Se3& other) const {
    return rotation == other.rotation && translation == other.translation;
  }
};

/// R = Rz(roll) * Ry(yaw) * Rx(pitch); camera axes x right, y down, z forward.
/// Throws InvalidArgument for non-finite components.
Se3 egomotion_to_se3(const EgoMotion& v);

/// Inverse of egomotion_to_se3 (yaw restricted to (-pi/2, pi/2)).
EgoMotion se3_to_egomotion(const Se3& t);

/// (a o b)(p) = a(b(p)).
Se3 se3_compose(const Se3& a, const Se3& b);

/// Largest deviation of R^T R from identity and of det R from one.
double rotation_orthonormality_error(const Eigen::Matrix3d& r);

/// Class-index grid. kMissing marks pixels with no label.
struct SegmentationMap {
  static constexpr std::uint8_t kMissing = 255;
  static constexpr int kCityscapesClasses = 19;

  Image<std::uint8_t> classes;
  int num_classes = kCityscapesClasses;

  SegmentationMap() = default;
  SegmentationMap(int width, int height, int num_classes_, std::uint8_t fill = kMissing)
      : classes(width, height, fill), num_classes(num_classes_) {}

  int width() const { return classes.width(); }
  int height() const { return classes.height(); }
  std::size_t size() const { return classes.size(); }
  bool is_missing(std::size_t idx) const { return classes[idx] == kMissing; }
  std::size_t missing_count() const;

  /// Throws InvalidArgument if any non-missing entry is >= num_classes.
  void validate() const;

  bool operator==(const SegmentationMap&) const = default;
};

/// Per-pixel depth in scene units. Entries that are not finite and > 0 are
/// invalid; kInvalid is the canonical invalid value.
struct DepthMap {
  static constexpr double kInvalid = 0.0;

  Image<double> values;

  DepthMap() = default;
  DepthMap(int width, int height, double fill = kInvalid) : values(width, height, fill) {}

  int width() const { return values.width(); }
  int height() const { return values.height(); }
  std::size_t size() const { return values.size(); }
  static bool is_valid_value(double d);
  bool is_valid(std::size_t idx) const { return is_valid_value(values[idx]); }

  bool operator==(const DepthMap&) const = default;
};

/// Structured point cloud: one slot per source pixel, in camera coordinates.
struct LabeledPointCloud {
  int width = 0;
  int height = 0;
  int num_classes = SegmentationMap::kCityscapesClasses;
  std::vector<Eigen::Vector3d> points;
  std::vector<std::uint8_t> labels;
  std::vector<std::uint8_t> valid;

  LabeledPointCloud() = default;
  LabeledPointCloud(int width_, int height_, int num_classes_);

  std::size_t size() const { return points.size(); }
  std::size_t valid_count() const;
};

/// Lifts every pixel with valid depth and a label to d * K^-1 [i, j, 1]^T.
/// Throws InvalidArgument when the three inputs disagree on dimensions.
LabeledPointCloud depth_to_pointcloud(const DepthMap& depth, const SegmentationMap& seg,
                                      const CameraIntrinsics& k);

/// Applies t to every valid point; points that end up with z <= 0 become
/// invalid. Labels are carried through unchanged.
LabeledPointCloud transform_pointcloud(const LabeledPointCloud& cloud, const Se3& t);

}  // namespace fseg3d
