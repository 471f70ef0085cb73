#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "fseg3d/geometry.hpp"

namespace fseg3d {

/// Forward-warped segmentation. A pixel is missing in `segmentation` exactly
/// when `depth_buffer` is invalid there.
struct WarpResult {
  SegmentationMap segmentation;
  DepthMap depth_buffer;
  std::size_t missing_count = 0;
};

/// Splats each valid point to round(fx x/z + cx, fy y/z + cy), rounding half
/// up. Collisions keep the smallest z, then the smallest source index.
WarpResult project_to_segmentation(const LabeledPointCloud& cloud, const CameraIntrinsics& k);

/// Moves the cloud by `motion` and projects it. The moved cloud is returned
/// so that the next step can start from 3D rather than from the projection.
std::pair<LabeledPointCloud, WarpResult> predict_step(const LabeledPointCloud& cloud,
                                                      const EgoMotion& motion,
                                                      const CameraIntrinsics& k);

struct PredictionStep {
  int step_index = 0;
  WarpResult raw;
  /// Equal to raw.segmentation when inpainting is disabled.
  SegmentationMap segmentation;
  int inpaint_passes = 0;
};

struct PredictionSequence {
  std::vector<PredictionStep> steps;
};

struct PredictOptions {
  bool inpaint = true;
  int max_inpaint_passes = 64;
};

/// Lifts (depth, seg) once, then for every motion transforms the persistent
/// cloud, projects it and optionally inpaints the projection. Throws
/// InvalidArgument for an empty motion list.
PredictionSequence predict_future(const DepthMap& depth, const SegmentationMap& seg,
                                  const CameraIntrinsics& k, const std::vector<EgoMotion>& motions,
                                  const PredictOptions& options = {});

}  // namespace fseg3d
