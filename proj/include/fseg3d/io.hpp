#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fseg3d/eval.hpp"
#include "fseg3d/geometry.hpp"
#include "fseg3d/image.hpp"

namespace fseg3d {

// Every reader rejects input that deviates from the documented layout with a
// FormatError carrying a byte offset (binary) or line number (text). Every
// writer emits one canonical encoding, so write(read(write(x))) is
// byte-identical to write(x).

// --- segmentation: binary PGM ---------------------------------------------
// "P5\n<W> <H>\n255\n" followed by W*H bytes, row-major, top row first.
// Byte value = class index; 255 = missing.
std::string encode_segmentation(const SegmentationMap& seg);
SegmentationMap decode_segmentation(std::string_view bytes, int num_classes);

// --- depth: little-endian grayscale PFM ------------------------------------
// "Pf\n<W> <H>\n-1\n" followed by W*H float32 LE, bottom row first.
// Invalid pixels are written as 0; non-finite and non-positive values decode
// as DepthMap::kInvalid.
std::string encode_depth(const DepthMap& depth);
DepthMap decode_depth(std::string_view bytes);

// --- trajectory: CSV -------------------------------------------------------
// Header "step,tx,ty,tz,pitch,yaw,roll"; row k has step k and the shortest
// round-trip decimal form of each component. Rows end with '\n'.
std::string encode_trajectory(const std::vector<EgoMotion>& motions);
std::vector<EgoMotion> decode_trajectory(std::string_view text);

// --- intrinsics: key = value text ------------------------------------------
// Keys fx, fy, cx, cy, width, height, each exactly once; '#' starts a comment.
std::string encode_intrinsics(const CameraIntrinsics& k);
CameraIntrinsics decode_intrinsics(std::string_view text);

// --- error map: binary PPM -------------------------------------------------
// correct = black, wrong = white, not considered = red.
std::string encode_error_map(const Image<ErrorCell>& map);

// --- files -----------------------------------------------------------------
std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary sibling and renames into place.
void write_file(const std::filesystem::path& path, std::string_view bytes);

SegmentationMap read_segmentation(const std::filesystem::path& path, int num_classes);
void write_segmentation(const std::filesystem::path& path, const SegmentationMap& seg);
DepthMap read_depth(const std::filesystem::path& path);
void write_depth(const std::filesystem::path& path, const DepthMap& depth);
std::vector<EgoMotion> read_trajectory(const std::filesystem::path& path);
void write_trajectory(const std::filesystem::path& path, const std::vector<EgoMotion>& motions);
CameraIntrinsics read_intrinsics(const std::filesystem::path& path);
void write_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& k);

// --- frame bundles -----------------------------------------------------------
// A simulated or converted sequence lives in one directory:
//   intrinsics.txt, trajectory.csv, frames.csv,
//   frame_NNNN_seg.pgm, frame_NNNN_depth.pfm
// frames.csv has header "frame,segmentation,depth" with paths relative to
// the directory. Row k of trajectory.csv is the motion from frame k to k+1.
struct FrameBundle {
  int frame_index = 0;
  /// Resolved against the bundle directory.
  std::filesystem::path segmentation_path;
  std::filesystem::path depth_path;
  std::optional<EgoMotion> motion_to_next;
};

struct BundleSet {
  std::filesystem::path root;
  CameraIntrinsics intrinsics;
  std::vector<EgoMotion> trajectory;
  std::vector<FrameBundle> frames;
};

std::string frame_segmentation_name(int frame);
std::string frame_depth_name(int frame);
std::string encode_frames_manifest(int frame_count);

/// Loads and cross-checks a bundle directory: every referenced file must exist
/// and parse, sizes must match the intrinsics and the trajectory must have one
/// row per frame transition.
BundleSet load_bundle_set(const std::filesystem::path& dir, int num_classes);

// --- Cityscapes label ids --------------------------------------------------
/// Maps a Cityscapes labelId (0..33) to its 19-class trainId; 255 for ignored
/// or unknown ids. The same table ships as data/cityscapes_label_ids.csv.
std::uint8_t cityscapes_train_id(int label_id);
/// Converts a labelId image into a 19-class SegmentationMap.
SegmentationMap cityscapes_to_train_ids(const Image<std::uint8_t>& label_ids);

}  // namespace fseg3d
