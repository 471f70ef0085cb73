#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fseg3d/geometry.hpp"

namespace fseg3d {

/// Per-pixel histogram of labels in the (border-clipped) 3x3 window around
/// each pixel, centre included. Missing pixels contribute nothing.
struct NeighborCount {
  int width = 0;
  int height = 0;
  int num_classes = 0;
  std::vector<std::uint8_t> counts;  // (row * width + col) * num_classes + class

  NeighborCount() = default;
  NeighborCount(int width_, int height_, int num_classes_)
      : width(width_),
        height(height_),
        num_classes(num_classes_),
        counts(static_cast<std::size_t>(width_) * height_ * num_classes_, 0) {}

  std::uint8_t& at(int col, int row, int cls) {
    return counts[(static_cast<std::size_t>(row) * width + col) * num_classes + cls];
  }
  std::uint8_t at(int col, int row, int cls) const {
    return counts[(static_cast<std::size_t>(row) * width + col) * num_classes + cls];
  }

  bool operator==(const NeighborCount&) const = default;
};

NeighborCount neighbor_count(const SegmentationMap& seg);

/// Hardmax over the class counts; ties go to the lowest class index and
/// all-zero histograms yield kMissing.
SegmentationMap compute_filler(const NeighborCount& counts);

struct InpaintResult {
  SegmentationMap segmentation;
  int passes = 0;
};

/// Replaces missing pixels by their filler value, pass after pass, until a
/// pass changes nothing, no pixel is missing, or max_passes is reached. Each
/// pass reads only the previous pass's map. Labelled pixels are never
/// touched. Throws InvalidArgument if max_passes < 1.
InpaintResult inpaint(const SegmentationMap& seg, int max_passes = 64);

}  // namespace fseg3d
