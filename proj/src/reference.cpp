#include "fseg3d/reference.hpp"

#include <limits>

#include "fseg3d/errors.hpp"
#include "fseg3d/projection.hpp"

namespace fseg3d::reference {

LabeledPointCloud depth_to_pointcloud(const DepthMap& depth, const SegmentationMap& seg,
                                      const CameraIntrinsics& k) {
  k.validate();
  if (!depth.values.same_shape(k.width, k.height) || !seg.classes.same_shape(k.width, k.height)) {
    throw InvalidArgument("depth_to_pointcloud: depth, segmentation and intrinsics disagree on size");
  }
  LabeledPointCloud cloud(k.width, k.height, seg.num_classes);
  for (int row = 0; row < k.height; ++row) {
    for (int col = 0; col < k.width; ++col) {
      const std::size_t idx = depth.values.index(col, row);
      const double d = depth.values[idx];
      if (!DepthMap::is_valid_value(d) || seg.classes[idx] == SegmentationMap::kMissing) continue;
      cloud.points[idx] = Eigen::Vector3d(d * ((col - k.cx) / k.fx), d * ((row - k.cy) / k.fy), d);
      cloud.labels[idx] = seg.classes[idx];
      cloud.valid[idx] = 1;
    }
  }
  return cloud;
}

LabeledPointCloud transform_pointcloud(const LabeledPointCloud& cloud, const Se3& t) {
  LabeledPointCloud out = cloud;
  for (std::size_t idx = 0; idx < cloud.size(); ++idx) {
    if (!cloud.valid[idx]) continue;
    out.points[idx] = t.apply(cloud.points[idx]);
    if (!(out.points[idx].z() > 0.0) || !out.points[idx].allFinite()) out.valid[idx] = 0;
  }
  return out;
}

WarpResult project_to_segmentation(const LabeledPointCloud& cloud, const CameraIntrinsics& k) {
  k.validate();
  WarpResult out;
  out.segmentation = SegmentationMap(k.width, k.height, cloud.num_classes);
  out.depth_buffer = DepthMap(k.width, k.height);
  std::vector<double> zbuf(static_cast<std::size_t>(k.width) * k.height,
                           std::numeric_limits<double>::infinity());
  for (std::size_t src = 0; src < cloud.size(); ++src) {
    if (!cloud.valid[src]) continue;
    const auto dst = detail::splat_target(cloud.points[src], k);
    if (!dst) continue;
    // Source order is increasing, so strict < keeps the lowest index on ties.
    if (cloud.points[src].z() < zbuf[*dst]) {
      zbuf[*dst] = cloud.points[src].z();
      out.segmentation.classes[*dst] = cloud.labels[src];
      out.depth_buffer.values[*dst] = cloud.points[src].z();
    }
  }
  out.missing_count = out.segmentation.missing_count();
  return out;
}

NeighborCount neighbor_count(const SegmentationMap& seg) {
  NeighborCount out(seg.width(), seg.height(), seg.num_classes);
  for (int row = 0; row < seg.height(); ++row) {
    for (int col = 0; col < seg.width(); ++col) {
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (!seg.classes.contains(col + dc, row + dr)) continue;
          const std::uint8_t label = seg.classes(col + dc, row + dr);
          if (label != SegmentationMap::kMissing) ++out.at(col, row, label);
        }
      }
    }
  }
  return out;
}

InpaintResult inpaint(const SegmentationMap& seg, int max_passes) {
  if (max_passes < 1) throw InvalidArgument("inpaint: max_passes must be >= 1");
  InpaintResult result{seg, 0};
  while (result.passes < max_passes) {
    ++result.passes;
    const SegmentationMap filler = fseg3d::compute_filler(reference::neighbor_count(result.segmentation));
    std::size_t changed = 0;
    SegmentationMap next = result.segmentation;
    for (std::size_t i = 0; i < next.size(); ++i) {
      if (next.classes[i] == SegmentationMap::kMissing && filler.classes[i] != SegmentationMap::kMissing) {
        next.classes[i] = filler.classes[i];
        ++changed;
      }
    }
    result.segmentation = std::move(next);
    if (changed == 0 || result.segmentation.missing_count() == 0) break;
  }
  return result;
}

RenderResult render(const Scene& scene, const CameraPose& pose, const CameraIntrinsics& k) {
  k.validate();
  scene.validate();
  RenderResult out{DepthMap(k.width, k.height), SegmentationMap(k.width, k.height, scene.num_classes)};
  const Eigen::Matrix3d& rot = pose.world_from_camera.rotation;
  const Eigen::Vector3d origin = pose.world_from_camera.translation;
  for (int row = 0; row < k.height; ++row) {
    for (int col = 0; col < k.width; ++col) {
      const Eigen::Vector3d dir = rot * Eigen::Vector3d((col - k.cx) / k.fx, (row - k.cy) / k.fy, 1.0);
      double best_t = std::numeric_limits<double>::infinity();
      int best_class = -1;
      for (const Primitive& prim : scene.primitives) {
        const auto t = intersect(prim, origin, dir);
        if (t && *t < best_t) {
          best_t = *t;
          best_class = prim.class_index;
        }
      }
      if (best_class >= 0) {
        out.depth.values(col, row) = best_t;
        out.segmentation.classes(col, row) = static_cast<std::uint8_t>(best_class);
      }
    }
  }
  return out;
}

EvalReport evaluate(const SegmentationMap& pred, const SegmentationMap& gt, bool ignore_missing) {
  if (!pred.classes.same_shape(gt.classes) || pred.num_classes != gt.num_classes) {
    throw InvalidArgument("evaluate: shape or class count mismatch");
  }
  const int k = gt.num_classes;
  EvalReport r;
  r.num_classes = k;
  r.confusion.assign(static_cast<std::size_t>(k) * k, 0);
  r.missing_per_class.assign(k, 0);
  r.per_class_iou.assign(k, std::nullopt);

  std::vector<std::uint64_t> inter(k, 0), uni(k, 0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const int g = gt.classes[i];
    const int p = pred.classes[i];
    if (g == SegmentationMap::kMissing) continue;
    if (p == SegmentationMap::kMissing) {
      ++r.missing_per_class[g];
      if (ignore_missing) continue;
      ++r.considered_pixels;
      ++uni[g];
      continue;
    }
    ++r.considered_pixels;
    ++r.confusion[static_cast<std::size_t>(g) * k + p];
    if (g == p) {
      ++r.correct_pixels;
      ++inter[g];
      ++uni[g];
    } else {
      ++uni[g];
      ++uni[p];
    }
  }
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < k; ++c) {
    if (uni[c] == 0) continue;
    r.per_class_iou[c] = static_cast<double>(inter[c]) / static_cast<double>(uni[c]);
    sum += *r.per_class_iou[c];
    ++present;
  }
  r.mean_iou = present ? sum / present : 0.0;
  r.pixel_accuracy = r.considered_pixels ? static_cast<double>(r.correct_pixels) / r.considered_pixels : 0.0;
  return r;
}

}  // namespace fseg3d::reference
