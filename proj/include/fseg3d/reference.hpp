#pragma once

// Single-threaded, loop-per-definition versions of the data-parallel kernels.
// They exist so tests can check the OpenMP kernels bit-for-bit and so the
// benchmark has a baseline; production code should call the fseg3d:: versions.

#include "fseg3d/eval.hpp"
#include "fseg3d/geometry.hpp"
#include "fseg3d/inpaint.hpp"
#include "fseg3d/simulator.hpp"
#include "fseg3d/warp.hpp"

namespace fseg3d::reference {

LabeledPointCloud depth_to_pointcloud(const DepthMap& depth, const SegmentationMap& seg,
                                      const CameraIntrinsics& k);
LabeledPointCloud transform_pointcloud(const LabeledPointCloud& cloud, const Se3& t);
/// Visits points in source order and keeps the strictly closer one.
WarpResult project_to_segmentation(const LabeledPointCloud& cloud, const CameraIntrinsics& k);
NeighborCount neighbor_count(const SegmentationMap& seg);
/// Passes of compute_filler(neighbor_count(.)) merged under the keep-if-present rule.
InpaintResult inpaint(const SegmentationMap& seg, int max_passes);
RenderResult render(const Scene& scene, const CameraPose& pose, const CameraIntrinsics& k);
EvalReport evaluate(const SegmentationMap& pred, const SegmentationMap& gt, bool ignore_missing);

}  // namespace fseg3d::reference
