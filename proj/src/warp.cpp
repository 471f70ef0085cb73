#include "fseg3d/warp.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>

#include "fseg3d/errors.hpp"
#include "fseg3d/inpaint.hpp"
#include "fseg3d/projection.hpp"

namespace fseg3d {

namespace {

constexpr std::uint32_t kNoPoint = std::numeric_limits<std::uint32_t>::max();

// Lexicographic (z, source index) order of two splat candidates.
bool closer(const LabeledPointCloud& cloud, std::uint32_t a, std::uint32_t b) {
  const double za = cloud.points[a].z();
  const double zb = cloud.points[b].z();
  return za < zb || (za == zb && a < b);
}

}  // namespace

WarpResult project_to_segmentation(const LabeledPointCloud& cloud, const CameraIntrinsics& k) {
  k.validate();
  if (cloud.size() >= kNoPoint) throw InvalidArgument("project_to_segmentation: cloud too large");

  const std::size_t n_pixels = static_cast<std::size_t>(k.width) * k.height;
  // Each destination pixel holds the index of its winning source point. The
  // winner is the minimum under a total order, so the CAS loop converges to
  // the same result regardless of scheduling.
  std::unique_ptr<std::atomic<std::uint32_t>[]> winner(new std::atomic<std::uint32_t>[n_pixels]);
  for (std::size_t i = 0; i < n_pixels; ++i) winner[i].store(kNoPoint, std::memory_order_relaxed);

  const auto n = static_cast<std::ptrdiff_t>(cloud.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t src = 0; src < n; ++src) {
    if (!cloud.valid[src]) continue;
    const auto dst = detail::splat_target(cloud.points[src], k);
    if (!dst) continue;
    auto& slot = winner[*dst];
    const auto candidate = static_cast<std::uint32_t>(src);
    std::uint32_t current = slot.load(std::memory_order_relaxed);
    while (current == kNoPoint || closer(cloud, candidate, current)) {
      if (slot.compare_exchange_weak(current, candidate, std::memory_order_relaxed)) break;
    }
  }

  WarpResult out;
  out.segmentation = SegmentationMap(k.width, k.height, cloud.num_classes);
  out.depth_buffer = DepthMap(k.width, k.height);
  std::size_t missing = 0;
  const auto n_dst = static_cast<std::ptrdiff_t>(n_pixels);
#pragma omp parallel for schedule(static) reduction(+ : missing)
  for (std::ptrdiff_t dst = 0; dst < n_dst; ++dst) {
    const std::uint32_t src = winner[dst].load(std::memory_order_relaxed);
    if (src == kNoPoint) {
      ++missing;
      continue;
    }
    out.segmentation.classes[dst] = cloud.labels[src];
    out.depth_buffer.values[dst] = cloud.points[src].z();
  }
  out.missing_count = missing;
  return out;
}

std::pair<LabeledPointCloud, WarpResult> predict_step(const LabeledPointCloud& cloud,
                                                      const EgoMotion& motion,
                                                      const CameraIntrinsics& k) {
  LabeledPointCloud moved = transform_pointcloud(cloud, egomotion_to_se3(motion));
  WarpResult projected = project_to_segmentation(moved, k);
  return {std::move(moved), std::move(projected)};
}

PredictionSequence predict_future(const DepthMap& depth, const SegmentationMap& seg,
                                  const CameraIntrinsics& k, const std::vector<EgoMotion>& motions,
                                  const PredictOptions& options) {
  if (motions.empty()) throw InvalidArgument("predict_future: motion list is empty");
  if (options.inpaint && options.max_inpaint_passes < 1) {
    throw InvalidArgument("predict_future: max_inpaint_passes must be >= 1");
  }
  for (const auto& m : motions) {
    if (!m.is_finite()) throw InvalidArgument("predict_future: non-finite ego-motion");
  }

  LabeledPointCloud cloud = depth_to_pointcloud(depth, seg, k);
  PredictionSequence seq;
  seq.steps.reserve(motions.size());
  for (std::size_t j = 0; j < motions.size(); ++j) {
    auto [moved, projected] = predict_step(cloud, motions[j], k);
    cloud = std::move(moved);

    PredictionStep step;
    step.step_index = static_cast<int>(j) + 1;
    if (options.inpaint) {
      InpaintResult filled = inpaint(projected.segmentation, options.max_inpaint_passes);
      step.segmentation = std::move(filled.segmentation);
      step.inpaint_passes = filled.passes;
    } else {
      step.segmentation = projected.segmentation;
    }
    step.raw = std::move(projected);
    seq.steps.push_back(std::move(step));
  }
  return seq;
}

}  // namespace fseg3d
