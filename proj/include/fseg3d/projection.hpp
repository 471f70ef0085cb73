#pragma once

#include <cmath>
#include <cstddef>
#include <optional>

#include <Eigen/Core>

#include "fseg3d/geometry.hpp"

namespace fseg3d::detail {

/// Linear index of the pixel a camera-frame point lands on, or nullopt when
/// it is behind the camera or outside the image. Shared by the parallel and
/// reference splatting kernels so both round identically.
inline std::optional<std::size_t> splat_target(const Eigen::Vector3d& p, const CameraIntrinsics& k) {
  if (!(p.z() > 0.0)) return std::nullopt;
  const double u = std::floor(k.fx * (p.x() / p.z()) + k.cx + 0.5);
  const double v = std::floor(k.fy * (p.y() / p.z()) + k.cy + 0.5);
  if (!(u >= 0.0 && u < k.width && v >= 0.0 && v < k.height)) return std::nullopt;
  return static_cast<std::size_t>(v) * k.width + static_cast<std::size_t>(u);
}

}  // namespace fseg3d::detail
