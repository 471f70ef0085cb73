#include "fseg3d/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/LU>

#include "fseg3d/errors.hpp"

namespace fseg3d {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw InvalidArgument("intrinsics: focal lengths must be finite and positive");
  }
  if (width < 1 || height < 1) {
    throw InvalidArgument("intrinsics: width and height must be positive");
  }
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw InvalidArgument("intrinsics: principal point outside the image");
  }
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d k;
  // clang-format off
  k << fx, 0.0, cx,
       0.0, fy, cy,
       0.0, 0.0, 1.0;
  // clang-format on
  return k;
}

bool EgoMotion::is_finite() const {
  const auto a = as_array();
  return std::all_of(a.begin(), a.end(), [](double x) { return std::isfinite(x); });
}

Se3 Se3::inverse() const {
  Se3 out;
  out.rotation = rotation.transpose();
  out.translation = -(out.rotation * translation);
  return out;
}

Se3 egomotion_to_se3(const EgoMotion& v) {
  if (!v.is_finite()) throw InvalidArgument("egomotion_to_se3: non-finite ego-motion component");

  const double cp = std::cos(v.pitch), sp = std::sin(v.pitch);
  const double cy = std::cos(v.yaw), sy = std::sin(v.yaw);
  const double cr = std::cos(v.roll), sr = std::sin(v.roll);

  Eigen::Matrix3d rx, ry, rz;
  // clang-format off
  rx << 1.0, 0.0, 0.0,
        0.0,  cp, -sp,
        0.0,  sp,  cp;
  ry <<  cy, 0.0,  sy,
        0.0, 1.0, 0.0,
        -sy, 0.0,  cy;
  rz <<  cr, -sr, 0.0,
         sr,  cr, 0.0,
        0.0, 0.0, 1.0;
  // clang-format on

  Se3 out;
  out.rotation = rz * ry * rx;
  out.translation = Eigen::Vector3d(v.tx, v.ty, v.tz);
  return out;
}

EgoMotion se3_to_egomotion(const Se3& t) {
  const Eigen::Matrix3d& r = t.rotation;
  EgoMotion v;
  v.tx = t.translation.x();
  v.ty = t.translation.y();
  v.tz = t.translation.z();
  v.yaw = std::atan2(-r(2, 0), std::hypot(r(2, 1), r(2, 2)));
  v.pitch = std::atan2(r(2, 1), r(2, 2));
  v.roll = std::atan2(r(1, 0), r(0, 0));
  return v;
}

Se3 se3_compose(const Se3& a, const Se3& b) {
  Se3 out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

double rotation_orthonormality_error(const Eigen::Matrix3d& r) {
  const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(r.determinant() - 1.0));
}

std::size_t SegmentationMap::missing_count() const {
  const auto px = classes.pixels();
  return static_cast<std::size_t>(std::count(px.begin(), px.end(), kMissing));
}

void SegmentationMap::validate() const {
  if (num_classes < 1 || num_classes > kMissing) {
    throw InvalidArgument("segmentation: num_classes must be in [1, 255], got " +
                          std::to_string(num_classes));
  }
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] != kMissing && classes[i] >= num_classes) {
      throw InvalidArgument("segmentation: class " + std::to_string(classes[i]) + " at pixel " +
                            std::to_string(i) + " exceeds num_classes " +
                            std::to_string(num_classes));
    }
  }
}

bool DepthMap::is_valid_value(double d) { return std::isfinite(d) && d > 0.0; }

LabeledPointCloud::LabeledPointCloud(int width_, int height_, int num_classes_)
    : width(width_),
      height(height_),
      num_classes(num_classes_),
      points(static_cast<std::size_t>(width_) * height_, Eigen::Vector3d::Zero()),
      labels(points.size(), SegmentationMap::kMissing),
      valid(points.size(), 0) {}

std::size_t LabeledPointCloud::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

LabeledPointCloud depth_to_pointcloud(const DepthMap& depth, const SegmentationMap& seg,
                                      const CameraIntrinsics& k) {
  k.validate();
  if (!depth.values.same_shape(k.width, k.height) || !seg.classes.same_shape(k.width, k.height)) {
    throw InvalidArgument("depth_to_pointcloud: depth, segmentation and intrinsics disagree on size");
  }

  LabeledPointCloud cloud(k.width, k.height, seg.num_classes);
  const int w = k.width;
  const int h = k.height;

#pragma omp parallel for schedule(static)
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      const std::size_t idx = static_cast<std::size_t>(row) * w + col;
      const double d = depth.values[idx];
      const std::uint8_t label = seg.classes[idx];
      if (!DepthMap::is_valid_value(d) || label == SegmentationMap::kMissing) continue;
      cloud.points[idx] = Eigen::Vector3d(d * ((col - k.cx) / k.fx), d * ((row - k.cy) / k.fy), d);
      cloud.labels[idx] = label;
      cloud.valid[idx] = 1;
    }
  }
  return cloud;
}

LabeledPointCloud transform_pointcloud(const LabeledPointCloud& cloud, const Se3& t) {
  LabeledPointCloud out = cloud;
  const auto n = static_cast<std::ptrdiff_t>(cloud.size());

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t idx = 0; idx < n; ++idx) {
    if (!cloud.valid[idx]) continue;
    const Eigen::Vector3d p = t.apply(cloud.points[idx]);
    out.points[idx] = p;
    if (!(p.z() > 0.0) || !p.allFinite()) out.valid[idx] = 0;
  }
  return out;
}

}  // namespace fseg3d
