#include "fseg3d/scene_spec.hpp"

#include <fstream>
#include <iterator>

#include "fseg3d/errors.hpp"
#include "json.hpp"

namespace fseg3d {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "fseg3d-scene";
constexpr int kVersion = 1;

template <std::size_t N>
std::array<double, N> read_array(const json& node, const std::string& where) {
  if (!node.is_array() || node.size() != N) {
    throw InvalidArgument("scene spec: " + where + " must be an array of " + std::to_string(N) +
                          " numbers");
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!node[i].is_number()) throw InvalidArgument("scene spec: " + where + " must be numeric");
    out[i] = node[i].get<double>();
  }
  return out;
}

Eigen::Vector3d read_vec3(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw InvalidArgument("scene spec: missing " + where + "." + key);
  const auto a = read_array<3>(obj.at(key), where + "." + key);
  return {a[0], a[1], a[2]};
}

template <typename T>
T read_number(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw InvalidArgument("scene spec: missing " + where + "." + key);
  const json& v = obj.at(key);
  if (!v.is_number()) throw InvalidArgument("scene spec: " + where + "." + key + " must be numeric");
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) {
      throw InvalidArgument("scene spec: " + where + "." + key + " must be an integer");
    }
  }
  return v.get<T>();
}

EgoMotion read_motion(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) return {};
  return EgoMotion::from_array(read_array<6>(obj.at(key), where + "." + key));
}

json vec3(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json motion6(const EgoMotion& m) {
  const auto a = m.as_array();
  return json(std::vector<double>(a.begin(), a.end()));
}

Primitive read_primitive(const json& node, std::size_t index) {
  const std::string where = "primitives[" + std::to_string(index) + "]";
  if (!node.is_object()) throw InvalidArgument("scene spec: " + where + " must be an object");
  if (!node.contains("type") || !node.at("type").is_string()) {
    throw InvalidArgument("scene spec: " + where + ".type must be a string");
  }
  const std::string type = node.at("type").get<std::string>();
  Primitive p;
  p.class_index = read_number<int>(node, "class", where);
  if (type == "plane") {
    p.shape = FinitePlane{read_vec3(node, "center", where), read_vec3(node, "axis_u", where),
                          read_vec3(node, "axis_v", where)};
  } else if (type == "box") {
    p.shape = Box{read_vec3(node, "min", where), read_vec3(node, "max", where)};
  } else if (type == "sphere") {
    p.shape = Sphere{read_vec3(node, "center", where), read_number<double>(node, "radius", where)};
  } else {
    throw InvalidArgument("scene spec: " + where + ".type '" + type + "' is not plane/box/sphere");
  }
  return p;
}

}  // namespace

SceneSpec parse_scene_spec(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("scene spec: ") + e.what(), FormatError::Unit::kByteOffset, e.byte);
  }
  if (!doc.is_object()) throw InvalidArgument("scene spec: top level must be an object");
  if (doc.value("format", std::string{}) != kFormat) {
    throw InvalidArgument(std::string("scene spec: format must be '") + kFormat + "'");
  }
  if (read_number<int>(doc, "version", "") != kVersion) {
    throw InvalidArgument("scene spec: unsupported version");
  }

  SceneSpec spec;
  spec.scene.num_classes = read_number<int>(doc, "num_classes", "");
  spec.scene.background_class = read_number<int>(doc, "background_class", "");

  if (!doc.contains("intrinsics") || !doc.at("intrinsics").is_object()) {
    throw InvalidArgument("scene spec: missing intrinsics object");
  }
  const json& ki = doc.at("intrinsics");
  spec.intrinsics.fx = read_number<double>(ki, "fx", "intrinsics");
  spec.intrinsics.fy = read_number<double>(ki, "fy", "intrinsics");
  spec.intrinsics.cx = read_number<double>(ki, "cx", "intrinsics");
  spec.intrinsics.cy = read_number<double>(ki, "cy", "intrinsics");
  spec.intrinsics.width = read_number<int>(ki, "width", "intrinsics");
  spec.intrinsics.height = read_number<int>(ki, "height", "intrinsics");
  spec.intrinsics.validate();

  if (!doc.contains("primitives") || !doc.at("primitives").is_array()) {
    throw InvalidArgument("scene spec: primitives must be an array");
  }
  const json& prims = doc.at("primitives");
  for (std::size_t i = 0; i < prims.size(); ++i) {
    spec.scene.primitives.push_back(read_primitive(prims[i], i));
  }
  spec.scene.validate();

  if (!doc.contains("trajectory") || !doc.at("trajectory").is_object()) {
    throw InvalidArgument("scene spec: missing trajectory object");
  }
  const json& tj = doc.at("trajectory");
  TrajectorySpec& t = spec.trajectory;
  if (!tj.contains("kind") || !tj.at("kind").is_string()) {
    throw InvalidArgument("scene spec: trajectory.kind must be a string");
  }
  t.kind = trajectory_kind_from_string(tj.at("kind").get<std::string>());
  t.num_steps = read_number<int>(tj, "num_steps", "trajectory");
  t.velocity = read_motion(tj, "velocity", "trajectory");
  t.acceleration = read_motion(tj, "acceleration", "trajectory");
  if (tj.contains("turn_translation")) t.turn_translation = read_vec3(tj, "turn_translation", "trajectory");
  if (tj.contains("total_angle")) t.total_angle = read_number<double>(tj, "total_angle", "trajectory");
  if (tj.contains("noise_sigma")) t.noise_sigma = read_array<6>(tj.at("noise_sigma"), "trajectory.noise_sigma");
  if (tj.contains("seed")) t.seed = read_number<std::uint64_t>(tj, "seed", "trajectory");
  if (tj.contains("start_pose")) {
    t.start_pose.world_from_camera = egomotion_to_se3(read_motion(tj, "start_pose", "trajectory"));
  }
  t.validate();
  return spec;
}

SceneSpec load_scene_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open scene spec " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_scene_spec(text);
}

std::string dump_scene_spec(const SceneSpec& spec) {
  json prims = json::array();
  for (const Primitive& p : spec.scene.primitives) {
    json node;
    node["class"] = p.class_index;
    if (const auto* plane = std::get_if<FinitePlane>(&p.shape)) {
      node["type"] = "plane";
      node["center"] = vec3(plane->center);
      node["axis_u"] = vec3(plane->axis_u);
      node["axis_v"] = vec3(plane->axis_v);
    } else if (const auto* box = std::get_if<Box>(&p.shape)) {
      node["type"] = "box";
      node["min"] = vec3(box->min_corner);
      node["max"] = vec3(box->max_corner);
    } else {
      const auto& sphere = std::get<Sphere>(p.shape);
      node["type"] = "sphere";
      node["center"] = vec3(sphere.center);
      node["radius"] = sphere.radius;
    }
    prims.push_back(std::move(node));
  }

  const TrajectorySpec& t = spec.trajectory;
  const CameraIntrinsics& k = spec.intrinsics;
  json doc = {
      {"format", kFormat},
      {"version", kVersion},
      {"num_classes", spec.scene.num_classes},
      {"background_class", spec.scene.background_class},
      {"intrinsics",
       {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}}},
      {"primitives", prims},
      {"trajectory",
       {{"kind", to_string(t.kind)},
        {"num_steps", t.num_steps},
        {"velocity", motion6(t.velocity)},
        {"acceleration", motion6(t.acceleration)},
        {"turn_translation", vec3(t.turn_translation)},
        {"total_angle", t.total_angle},
        {"noise_sigma", std::vector<double>(t.noise_sigma.begin(), t.noise_sigma.end())},
        {"seed", t.seed},
        {"start_pose", motion6(se3_to_egomotion(t.start_pose.world_from_camera))}}},
  };
  return doc.dump(2) + "\n";
}

SceneSpec default_scene_spec() {
  SceneSpec spec;
  spec.scene = street_canyon_scene();
  spec.intrinsics = street_canyon_intrinsics();
  spec.trajectory.kind = TrajectoryKind::kConstantVelocity;
  spec.trajectory.velocity = {0.0, 0.0, -0.5, 0.0, 0.0, 0.0};
  spec.trajectory.num_steps = 8;
  return spec;
}

}  // namespace fseg3d
