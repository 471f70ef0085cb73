#include "fseg3d/inpaint.hpp"

#include <algorithm>
#include <array>

#include "fseg3d/errors.hpp"

namespace fseg3d {

namespace {

// Hardmax of the clipped 3x3 window at (col, row), computed directly from the
// label grid. Equivalent to compute_filler(neighbor_count(seg)) at one pixel.
std::uint8_t window_hardmax(const SegmentationMap& seg, int col, int row,
                            std::array<std::uint8_t, 256>& hist) {
  const int w = seg.width();
  const int h = seg.height();
  const int c0 = std::max(col - 1, 0), c1 = std::min(col + 1, w - 1);
  const int r0 = std::max(row - 1, 0), r1 = std::min(row + 1, h - 1);

  std::uint8_t seen[9];
  int n_seen = 0;
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const std::uint8_t label = seg.classes(c, r);
      if (label == SegmentationMap::kMissing) continue;
      if (hist[label]++ == 0) seen[n_seen++] = label;
    }
  }
  std::uint8_t best = SegmentationMap::kMissing;
  int best_count = 0;
  for (int s = 0; s < n_seen; ++s) {
    const std::uint8_t label = seen[s];
    const int count = hist[label];
    if (count > best_count || (count == best_count && label < best)) {
      best = label;
      best_count = count;
    }
    hist[label] = 0;
  }
  return best;
}

}  // namespace

NeighborCount neighbor_count(const SegmentationMap& seg) {
  seg.validate();
  const int w = seg.width();
  const int h = seg.height();
  NeighborCount out(w, h, seg.num_classes);

#pragma omp parallel for schedule(static)
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      for (int r = std::max(row - 1, 0); r <= std::min(row + 1, h - 1); ++r) {
        for (int c = std::max(col - 1, 0); c <= std::min(col + 1, w - 1); ++c) {
          const std::uint8_t label = seg.classes(c, r);
          if (label != SegmentationMap::kMissing) ++out.at(col, row, label);
        }
      }
    }
  }
  return out;
}

SegmentationMap compute_filler(const NeighborCount& counts) {
  SegmentationMap out(counts.width, counts.height, counts.num_classes);
  const int w = counts.width;
  const int h = counts.height;

#pragma omp parallel for schedule(static)
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      int best = -1;
      int best_count = 0;
      for (int cls = 0; cls < counts.num_classes; ++cls) {
        const int c = counts.at(col, row, cls);
        if (c > best_count) {
          best = cls;
          best_count = c;
        }
      }
      if (best >= 0) out.classes(col, row) = static_cast<std::uint8_t>(best);
    }
  }
  return out;
}

InpaintResult inpaint(const SegmentationMap& seg, int max_passes) {
  if (max_passes < 1) throw InvalidArgument("inpaint: max_passes must be >= 1");
  seg.validate();

  InpaintResult result{seg, 0};
  SegmentationMap next = seg;
  const int w = seg.width();
  const int h = seg.height();

  while (result.passes < max_passes) {
    ++result.passes;
    std::size_t changed = 0;
    std::size_t still_missing = 0;
    const SegmentationMap& prev = result.segmentation;

#pragma omp parallel reduction(+ : changed, still_missing)
    {
      std::array<std::uint8_t, 256> hist{};
#pragma omp for schedule(static)
      for (int row = 0; row < h; ++row) {
        for (int col = 0; col < w; ++col) {
          const std::uint8_t label = prev.classes(col, row);
          std::uint8_t filled = label;
          if (label == SegmentationMap::kMissing) {
            filled = window_hardmax(prev, col, row, hist);
            if (filled != SegmentationMap::kMissing) {
              ++changed;
            } else {
              ++still_missing;
            }
          }
          next.classes(col, row) = filled;
        }
      }
    }

    std::swap(result.segmentation, next);
    if (changed == 0 || still_missing == 0) break;
  }
  return result;
}

}  // namespace fseg3d
