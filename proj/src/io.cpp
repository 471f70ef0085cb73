#include "fseg3d/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "fseg3d/errors.hpp"
#include "fseg3d/format.hpp"

namespace fseg3d {

namespace {

using Unit = FormatError::Unit;

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

// Netpbm-style header tokenizer: whitespace-separated tokens, '#' comments
// running to end of line.
class HeaderReader {
 public:
  HeaderReader(std::string_view bytes, const char* format) : bytes_(bytes), format_(format) {}

  std::string_view magic() {
    if (bytes_.size() < 2) fail("truncated magic", 0);
    pos_ = 2;
    return bytes_.substr(0, 2);
  }

  std::string_view token() {
    skip_space_and_comments();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !is_space(bytes_[pos_]) && bytes_[pos_] != '#') ++pos_;
    if (pos_ == start) fail("expected header field", start);
    last_token_offset_ = start;
    return bytes_.substr(start, pos_ - start);
  }

  int positive_int(const char* what) {
    const std::string_view t = token();
    const auto v = parse_int(t);
    if (!v || *v < 1 || *v > (1 << 20)) fail(std::string("invalid ") + what, last_token_offset_);
    return static_cast<int>(*v);
  }

  // The single whitespace byte that ends the header.
  std::size_t end_of_header() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) fail("header must end with one whitespace byte", pos_);
    return pos_ + 1;
  }

  std::size_t last_token_offset() const { return last_token_offset_; }

  [[noreturn]] void fail(const std::string& msg, std::size_t offset) const {
    throw FormatError(std::string(format_) + ": " + msg, Unit::kByteOffset, offset);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  const char* format_;
  std::size_t pos_ = 0;
  std::size_t last_token_offset_ = 0;
};

std::vector<std::string_view> split_lines(std::string_view text, const char* format) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      throw FormatError(std::string(format) + ": last line is not newline-terminated", Unit::kLine,
                        lines.size() + 1);
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

constexpr std::array<std::uint8_t, 34> kCityscapesTrainIds = {
    255, 255, 255, 255, 255, 255, 255,  // unlabeled .. ground
    0,   1,                             // road, sidewalk
    255, 255,                           // parking, rail track
    2,   3,   4,                        // building, wall, fence
    255, 255, 255,                      // guard rail, bridge, tunnel
    5,   255,                           // pole, polegroup
    6,   7,   8,   9,   10,             // traffic light .. sky
    11,  12,  13,  14,  15,             // person .. bus
    255, 255,                           // caravan, trailer
    16,  17,  18,                       // train, motorcycle, bicycle
};

}  // namespace

std::string encode_segmentation(const SegmentationMap& seg) {
  seg.validate();
  std::string out = "P5\n" + std::to_string(seg.width()) + " " + std::to_string(seg.height()) + "\n255\n";
  const auto px = seg.classes.pixels();
  out.append(reinterpret_cast<const char*>(px.data()), px.size());
  return out;
}

SegmentationMap decode_segmentation(std::string_view bytes, int num_classes) {
  if (num_classes < 1 || num_classes >= SegmentationMap::kMissing) {
    throw InvalidArgument("decode_segmentation: num_classes must be in [1, 254]");
  }
  HeaderReader header(bytes, "pgm");
  if (header.magic() != "P5") header.fail("magic must be P5", 0);
  const int w = header.positive_int("width");
  const int h = header.positive_int("height");
  const std::string_view maxval = header.token();
  if (maxval != "255") header.fail("maxval must be 255", header.last_token_offset());
  const std::size_t body = header.end_of_header();
  const std::size_t expected = static_cast<std::size_t>(w) * h;
  if (bytes.size() != body + expected) {
    header.fail("expected " + std::to_string(expected) + " pixel bytes, found " +
                    std::to_string(bytes.size() - std::min(bytes.size(), body)),
                std::min(bytes.size(), body + expected));
  }
  SegmentationMap seg(w, h, num_classes);
  for (std::size_t i = 0; i < expected; ++i) {
    const auto v = static_cast<std::uint8_t>(bytes[body + i]);
    if (v != SegmentationMap::kMissing && v >= num_classes) {
      header.fail("class index " + std::to_string(v) + " >= num_classes " + std::to_string(num_classes),
                  body + i);
    }
    seg.classes[i] = v;
  }
  return seg;
}

std::string encode_depth(const DepthMap& depth) {
  const int w = depth.width();
  const int h = depth.height();
  std::string out = "Pf\n" + std::to_string(w) + " " + std::to_string(h) + "\n-1\n";
  out.reserve(out.size() + static_cast<std::size_t>(w) * h * 4);
  for (int row = h - 1; row >= 0; --row) {
    for (int col = 0; col < w; ++col) {
      const double d = depth.values(col, row);
      auto bits = std::bit_cast<std::uint32_t>(
          static_cast<float>(DepthMap::is_valid_value(d) ? d : DepthMap::kInvalid));
      for (int b = 0; b < 4; ++b) {
        out.push_back(static_cast<char>(bits & 0xffu));
        bits >>= 8;
      }
    }
  }
  return out;
}

DepthMap decode_depth(std::string_view bytes) {
  HeaderReader header(bytes, "pfm");
  if (header.magic() != "Pf") header.fail("magic must be Pf (grayscale)", 0);
  const int w = header.positive_int("width");
  const int h = header.positive_int("height");
  const std::string_view scale_text = header.token();
  const auto scale = parse_double(scale_text);
  if (!scale || !std::isfinite(*scale) || *scale == 0.0) {
    header.fail("invalid scale field", header.last_token_offset());
  }
  if (*scale > 0.0) header.fail("scale must be negative (little-endian)", header.last_token_offset());
  const std::size_t body = header.end_of_header();
  const std::size_t expected = static_cast<std::size_t>(w) * h * 4;
  if (bytes.size() != body + expected) {
    header.fail("expected " + std::to_string(expected) + " body bytes, found " +
                    std::to_string(bytes.size() - std::min(bytes.size(), body)),
                std::min(bytes.size(), body + expected));
  }
  DepthMap depth(w, h);
  std::size_t offset = body;
  for (int row = h - 1; row >= 0; --row) {
    for (int col = 0; col < w; ++col) {
      std::uint32_t bits = 0;
      for (int b = 3; b >= 0; --b) bits = (bits << 8) | static_cast<unsigned char>(bytes[offset + b]);
      offset += 4;
      const double d = static_cast<double>(std::bit_cast<float>(bits));
      depth.values(col, row) = DepthMap::is_valid_value(d) ? d : DepthMap::kInvalid;
    }
  }
  return depth;
}

std::string encode_trajectory(const std::vector<EgoMotion>& motions) {
  std::string out = "step,tx,ty,tz,pitch,yaw,roll\n";
  for (std::size_t s = 0; s < motions.size(); ++s) {
    out += std::to_string(s);
    for (double v : motions[s].as_array()) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<EgoMotion> decode_trajectory(std::string_view text) {
  const auto lines = split_lines(text, "trajectory");
  if (lines.empty()) throw FormatError("trajectory: missing header", Unit::kLine, 1);
  if (lines[0] != "step,tx,ty,tz,pitch,yaw,roll") {
    throw FormatError("trajectory: header must be 'step,tx,ty,tz,pitch,yaw,roll'", Unit::kLine, 1);
  }
  std::vector<EgoMotion> motions;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    const std::size_t line_no = l + 1;
    const auto fields = split_fields(lines[l]);
    if (fields.size() != 7) {
      throw FormatError("trajectory: expected 7 columns, found " + std::to_string(fields.size()),
                        Unit::kLine, line_no);
    }
    const auto step = parse_int(fields[0]);
    if (!step) throw FormatError("trajectory: non-numeric step", Unit::kLine, line_no);
    if (*step != static_cast<long long>(motions.size())) {
      throw FormatError("trajectory: expected step " + std::to_string(motions.size()), Unit::kLine, line_no);
    }
    std::array<double, 6> values{};
    for (std::size_t c = 0; c < 6; ++c) {
      const auto v = parse_double(fields[c + 1]);
      if (!v) throw FormatError("trajectory: non-numeric field in column " + std::to_string(c + 2), Unit::kLine, line_no);
      if (!std::isfinite(*v)) throw FormatError("trajectory: non-finite value", Unit::kLine, line_no);
      values[c] = *v;
    }
    motions.push_back(EgoMotion::from_array(values));
  }
  return motions;
}

std::string encode_intrinsics(const CameraIntrinsics& k) {
  k.validate();
  std::string out = "# fseg3d intrinsics v1\n";
  out += "fx = " + format_double(k.fx) + "\n";
  out += "fy = " + format_double(k.fy) + "\n";
  out += "cx = " + format_double(k.cx) + "\n";
  out += "cy = " + format_double(k.cy) + "\n";
  out += "width = " + std::to_string(k.width) + "\n";
  out += "height = " + std::to_string(k.height) + "\n";
  return out;
}

CameraIntrinsics decode_intrinsics(std::string_view text) {
  const auto lines = split_lines(text, "intrinsics");
  std::map<std::string, std::pair<std::string, std::size_t>, std::less<>> values;
  for (std::size_t l = 0; l < lines.size(); ++l) {
    const std::size_t line_no = l + 1;
    std::string_view line = lines[l];
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw FormatError("intrinsics: expected 'key = value'", Unit::kLine, line_no);
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    static const std::array<const char*, 6> kKeys = {"fx", "fy", "cx", "cy", "width", "height"};
    if (std::find_if(kKeys.begin(), kKeys.end(), [&](const char* k) { return key == k; }) == kKeys.end()) {
      throw FormatError("intrinsics: unknown key '" + key + "'", Unit::kLine, line_no);
    }
    if (!values.emplace(key, std::make_pair(value, line_no)).second) {
      throw FormatError("intrinsics: duplicate key '" + key + "'", Unit::kLine, line_no);
    }
  }
  const std::size_t end_line = lines.size() + 1;
  auto real = [&](const char* key) {
    const auto it = values.find(key);
    if (it == values.end()) throw FormatError(std::string("intrinsics: missing key '") + key + "'", Unit::kLine, end_line);
    const auto v = parse_double(it->second.first);
    if (!v || !std::isfinite(*v)) {
      throw FormatError(std::string("intrinsics: non-numeric ") + key, Unit::kLine, it->second.second);
    }
    return *v;
  };
  auto integer = [&](const char* key) {
    const auto it = values.find(key);
    if (it == values.end()) throw FormatError(std::string("intrinsics: missing key '") + key + "'", Unit::kLine, end_line);
    const auto v = parse_int(it->second.first);
    if (!v || *v < 1 || *v > (1 << 20)) {
      throw FormatError(std::string("intrinsics: invalid ") + key, Unit::kLine, it->second.second);
    }
    return static_cast<int>(*v);
  };
  CameraIntrinsics k;
  k.fx = real("fx");
  k.fy = real("fy");
  k.cx = real("cx");
  k.cy = real("cy");
  k.width = integer("width");
  k.height = integer("height");
  try {
    k.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what(), Unit::kLine, end_line);
  }
  return k;
}

std::string encode_error_map(const Image<ErrorCell>& map) {
  std::string out = "P6\n" + std::to_string(map.width()) + " " + std::to_string(map.height()) + "\n255\n";
  for (std::size_t i = 0; i < map.size(); ++i) {
    switch (map[i]) {
      case ErrorCell::kCorrect: out.append("\x00\x00\x00", 3); break;
      case ErrorCell::kWrong: out.append("\xff\xff\xff", 3); break;
      case ErrorCell::kNotConsidered: out.append("\xff\x00\x00", 3); break;
    }
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("failed writing " + path.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

SegmentationMap read_segmentation(const std::filesystem::path& path, int num_classes) {
  return decode_segmentation(read_file(path), num_classes);
}
void write_segmentation(const std::filesystem::path& path, const SegmentationMap& seg) {
  write_file(path, encode_segmentation(seg));
}
DepthMap read_depth(const std::filesystem::path& path) { return decode_depth(read_file(path)); }
void write_depth(const std::filesystem::path& path, const DepthMap& depth) {
  write_file(path, encode_depth(depth));
}
std::vector<EgoMotion> read_trajectory(const std::filesystem::path& path) {
  return decode_trajectory(read_file(path));
}
void write_trajectory(const std::filesystem::path& path, const std::vector<EgoMotion>& motions) {
  write_file(path, encode_trajectory(motions));
}
CameraIntrinsics read_intrinsics(const std::filesystem::path& path) {
  return decode_intrinsics(read_file(path));
}
void write_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& k) {
  write_file(path, encode_intrinsics(k));
}

std::string frame_segmentation_name(int frame) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04d_seg.pgm", frame);
  return buf;
}

std::string frame_depth_name(int frame) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04d_depth.pfm", frame);
  return buf;
}

std::string encode_frames_manifest(int frame_count) {
  std::string out = "frame,segmentation,depth\n";
  for (int f = 0; f < frame_count; ++f) {
    out += std::to_string(f) + "," + frame_segmentation_name(f) + "," + frame_depth_name(f) + "\n";
  }
  return out;
}

BundleSet load_bundle_set(const std::filesystem::path& dir, int num_classes) {
  BundleSet set;
  set.root = dir;
  set.intrinsics = read_intrinsics(dir / "intrinsics.txt");
  set.trajectory = read_trajectory(dir / "trajectory.csv");

  const std::string manifest = read_file(dir / "frames.csv");
  const auto lines = split_lines(manifest, "frames.csv");
  if (lines.empty() || lines[0] != "frame,segmentation,depth") {
    throw FormatError("frames.csv: header must be 'frame,segmentation,depth'", Unit::kLine, 1);
  }
  for (std::size_t l = 1; l < lines.size(); ++l) {
    const auto fields = split_fields(lines[l]);
    if (fields.size() != 3) throw FormatError("frames.csv: expected 3 columns", Unit::kLine, l + 1);
    const auto idx = parse_int(fields[0]);
    if (!idx || *idx != static_cast<long long>(l - 1)) {
      throw FormatError("frames.csv: frames must be numbered 0, 1, 2, ...", Unit::kLine, l + 1);
    }
    FrameBundle b;
    b.frame_index = static_cast<int>(*idx);
    b.segmentation_path = dir / std::string(fields[1]);
    b.depth_path = dir / std::string(fields[2]);
    set.frames.push_back(std::move(b));
  }
  if (set.frames.empty()) throw FormatError("frames.csv: no frames", Unit::kLine, 2);
  if (set.trajectory.size() + 1 != set.frames.size()) {
    throw InvalidArgument("bundle: trajectory.csv has " + std::to_string(set.trajectory.size()) +
                          " rows but " + std::to_string(set.frames.size()) + " frames need " +
                          std::to_string(set.frames.size() - 1));
  }
  for (auto& b : set.frames) {
    if (static_cast<std::size_t>(b.frame_index) < set.trajectory.size()) {
      b.motion_to_next = set.trajectory[b.frame_index];
    }
    const SegmentationMap seg = read_segmentation(b.segmentation_path, num_classes);
    const DepthMap depth = read_depth(b.depth_path);
    if (!seg.classes.same_shape(set.intrinsics.width, set.intrinsics.height) ||
        !depth.values.same_shape(set.intrinsics.width, set.intrinsics.height)) {
      throw InvalidArgument("bundle: frame " + std::to_string(b.frame_index) +
                            " does not match the intrinsics image size");
    }
  }
  return set;
}

std::uint8_t cityscapes_train_id(int label_id) {
  if (label_id < 0 || label_id >= static_cast<int>(kCityscapesTrainIds.size())) return 255;
  return kCityscapesTrainIds[label_id];
}

SegmentationMap cityscapes_to_train_ids(const Image<std::uint8_t>& label_ids) {
  SegmentationMap out(label_ids.width(), label_ids.height(), SegmentationMap::kCityscapesClasses);
  for (std::size_t i = 0; i < label_ids.size(); ++i) out.classes[i] = cityscapes_train_id(label_ids[i]);
  return out;
}

}  // namespace fseg3d
