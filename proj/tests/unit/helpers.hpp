#pragma once

#include <cmath>
#include <random>

#include <Eigen/Core>

#include "fseg3d/geometry.hpp"

namespace testing {

inline fseg3d::EgoMotion random_motion(std::mt19937_64& rng, double trans = 1.0, double rot = 0.3) {
  std::uniform_real_distribution<double> t(-trans, trans), r(-rot, rot);
  return {t(rng), t(rng), t(rng), r(rng), r(rng), r(rng)};
}

inline Eigen::Vector3d random_point(std::mt19937_64& rng, double extent = 10.0) {
  std::uniform_real_distribution<double> u(-extent, extent);
  return {u(rng), u(rng), u(rng)};
}

inline fseg3d::SegmentationMap random_segmentation(std::mt19937_64& rng, int w, int h, int classes,
                                                   double missing_fraction) {
  fseg3d::SegmentationMap seg(w, h, classes);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> c(0, classes - 1);
  for (auto& px : seg.classes.pixels()) {
    px = u(rng) < missing_fraction ? fseg3d::SegmentationMap::kMissing
                                   : static_cast<std::uint8_t>(c(rng));
  }
  return seg;
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testing
