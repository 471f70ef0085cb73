#include "fseg3d/simulator.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Geometry>

#include "fseg3d/errors.hpp"

namespace fseg3d {

namespace {

constexpr double kMinRayT = 1e-9;

std::optional<double> hit_box(const Box& box, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    const double lo = box.min_corner[axis];
    const double hi = box.max_corner[axis];
    if (d[axis] == 0.0) {
      if (o[axis] < lo || o[axis] > hi) return std::nullopt;
      continue;
    }
    double t0 = (lo - o[axis]) / d[axis];
    double t1 = (hi - o[axis]) / d[axis];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return std::nullopt;
  }
  if (t_far <= kMinRayT) return std::nullopt;
  return t_near > kMinRayT ? t_near : t_far;
}

std::optional<double> hit_plane(const FinitePlane& plane, const Eigen::Vector3d& o,
                                const Eigen::Vector3d& d) {
  const Eigen::Vector3d normal = plane.axis_u.cross(plane.axis_v);
  const double denom = d.dot(normal);
  if (denom == 0.0) return std::nullopt;
  const double t = (plane.center - o).dot(normal) / denom;
  if (!(t > kMinRayT)) return std::nullopt;
  const Eigen::Vector3d rel = o + t * d - plane.center;
  if (std::abs(rel.dot(plane.axis_u)) > plane.axis_u.squaredNorm()) return std::nullopt;
  if (std::abs(rel.dot(plane.axis_v)) > plane.axis_v.squaredNorm()) return std::nullopt;
  return t;
}

std::optional<double> hit_sphere(const Sphere& s, const Eigen::Vector3d& o,
                                 const Eigen::Vector3d& d) {
  const Eigen::Vector3d oc = o - s.center;
  const double a = d.squaredNorm();
  const double half_b = oc.dot(d);
  const double c = oc.squaredNorm() - s.radius * s.radius;
  const double disc = half_b * half_b - a * c;
  if (disc < 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  const double t0 = (-half_b - root) / a;
  if (t0 > kMinRayT) return t0;
  const double t1 = (-half_b + root) / a;
  if (t1 > kMinRayT) return t1;
  return std::nullopt;
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

EgoMotion add(const EgoMotion& a, const EgoMotion& b, double scale) {
  return {a.tx + scale * b.tx,       a.ty + scale * b.ty,     a.tz + scale * b.tz,
          a.pitch + scale * b.pitch, a.yaw + scale * b.yaw, a.roll + scale * b.roll};
}

}  // namespace

std::optional<double> intersect(const Primitive& prim, const Eigen::Vector3d& origin,
                                const Eigen::Vector3d& dir) {
  return std::visit(Overloaded{
                        [&](const Box& b) { return hit_box(b, origin, dir); },
                        [&](const FinitePlane& p) { return hit_plane(p, origin, dir); },
                        [&](const Sphere& s) { return hit_sphere(s, origin, dir); },
                    },
                    prim.shape);
}

void Scene::validate() const {
  if (num_classes < 1 || num_classes > SegmentationMap::kMissing) {
    throw InvalidArgument("scene: num_classes must be in [1, 255]");
  }
  if (background_class < 0 || background_class >= num_classes) {
    throw InvalidArgument("scene: background_class out of range");
  }
  for (std::size_t i = 0; i < primitives.size(); ++i) {
    const Primitive& p = primitives[i];
    const std::string where = "scene: primitive " + std::to_string(i) + ": ";
    if (p.class_index < 0 || p.class_index >= num_classes) {
      throw InvalidArgument(where + "class index out of range");
    }
    std::visit(Overloaded{
                   [&](const Box& b) {
                     if (!((b.max_corner - b.min_corner).array() > 0.0).all()) {
                       throw InvalidArgument(where + "box needs positive extent on every axis");
                     }
                   },
                   [&](const FinitePlane& pl) {
                     if (!(pl.axis_u.norm() > 0.0) || !(pl.axis_v.norm() > 0.0)) {
                       throw InvalidArgument(where + "plane axes must be non-zero");
                     }
                     const double cosine =
                         pl.axis_u.dot(pl.axis_v) / (pl.axis_u.norm() * pl.axis_v.norm());
                     if (std::abs(cosine) > 1e-9) {
                       throw InvalidArgument(where + "plane axes must be orthogonal");
                     }
                   },
                   [&](const Sphere& s) {
                     if (!(s.radius > 0.0)) throw InvalidArgument(where + "sphere radius must be > 0");
                   },
               },
               p.shape);
  }
}

RenderResult render(const Scene& scene, const CameraPose& pose, const CameraIntrinsics& k) {
  k.validate();
  scene.validate();
  RenderResult out{DepthMap(k.width, k.height), SegmentationMap(k.width, k.height, scene.num_classes)};
  const Eigen::Matrix3d& rot = pose.world_from_camera.rotation;
  const Eigen::Vector3d origin = pose.world_from_camera.translation;
  const int w = k.width;
  const int h = k.height;

#pragma omp parallel for schedule(dynamic, 4)
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      // Camera-frame direction has z = 1, so the ray parameter is the depth.
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

std::string to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::kConstantVelocity: return "constant_velocity";
    case TrajectoryKind::kConstantAcceleration: return "constant_acceleration";
    case TrajectoryKind::kCircularTurn: return "circular_turn";
  }
  return "unknown";
}

TrajectoryKind trajectory_kind_from_string(const std::string& name) {
  if (name == "constant_velocity") return TrajectoryKind::kConstantVelocity;
  if (name == "constant_acceleration") return TrajectoryKind::kConstantAcceleration;
  if (name == "circular_turn") return TrajectoryKind::kCircularTurn;
  throw InvalidArgument("unknown trajectory kind '" + name + "'");
}

void TrajectorySpec::validate() const {
  if (num_steps < 2) throw InvalidArgument("trajectory: num_steps must be >= 2");
  for (double s : noise_sigma) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidArgument("trajectory: noise_sigma must be >= 0");
  }
  if (!velocity.is_finite() || !acceleration.is_finite() || !turn_translation.allFinite() ||
      !std::isfinite(total_angle)) {
    throw InvalidArgument("trajectory: non-finite parameter");
  }
}

std::vector<EgoMotion> TrajectorySpec::exact_motions() const {
  validate();
  std::vector<EgoMotion> out;
  out.reserve(num_steps);
  for (int s = 0; s < num_steps; ++s) {
    switch (kind) {
      case TrajectoryKind::kConstantVelocity:
        out.push_back(velocity);
        break;
      case TrajectoryKind::kConstantAcceleration:
        out.push_back(add(velocity, acceleration, static_cast<double>(s)));
        break;
      case TrajectoryKind::kCircularTurn:
        out.push_back({turn_translation.x(), turn_translation.y(), turn_translation.z(), 0.0,
                       total_angle / num_steps, 0.0});
        break;
    }
  }
  return out;
}

Se3 relative_motion(const CameraPose& from, const CameraPose& to) {
  return se3_compose(to.world_from_camera.inverse(), from.world_from_camera);
}

std::vector<SimFrame> generate_sequence(const Scene& scene, const TrajectorySpec& spec,
                                        const CameraIntrinsics& k) {
  const std::vector<EgoMotion> motions = spec.exact_motions();

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> unit(0.0, 1.0);

  std::vector<SimFrame> frames;
  frames.reserve(motions.size() + 1);
  CameraPose pose = spec.start_pose;
  for (std::size_t s = 0; s <= motions.size(); ++s) {
    RenderResult r = render(scene, pose, k);
    SimFrame frame{pose, std::move(r.depth), std::move(r.segmentation), std::nullopt};
    if (s < motions.size()) {
      auto noisy = motions[s].as_array();
      for (std::size_t c = 0; c < noisy.size(); ++c) {
        // Draw unconditionally so the stream does not depend on which sigmas are zero.
        const double z = unit(rng);
        noisy[c] += spec.noise_sigma[c] * z;
      }
      frame.motion_to_next = EgoMotion::from_array(noisy);
      // p_next = T p_cur, so world_from_next = world_from_cur * T^-1.
      pose.world_from_camera =
          se3_compose(pose.world_from_camera, egomotion_to_se3(motions[s]).inverse());
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

TrajectorySampling TrajectorySampling::urban_driving() {
  TrajectorySampling s;
  s.velocity_min = {-0.1, -0.02, -0.5, -0.005, -0.02, -0.005};
  s.velocity_max = {0.1, 0.02, -0.1, 0.005, 0.02, 0.005};
  s.acceleration_min = {-0.02, -0.005, -0.08, -0.001, -0.008, -0.001};
  s.acceleration_max = {0.02, 0.005, 0.08, 0.001, 0.008, 0.001};
  return s;
}

std::vector<std::vector<EgoMotion>> sample_trajectories(TrajectoryKind kind,
                                                        const TrajectorySampling& sampling,
                                                        int count, int length, std::uint64_t seed) {
  if (kind == TrajectoryKind::kCircularTurn) {
    throw InvalidArgument("sample_trajectories: circular_turn is not sampled");
  }
  if (count < 0 || length < 1) throw InvalidArgument("sample_trajectories: bad count or length");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto draw = [&](const EgoMotion& lo, const EgoMotion& hi) {
    const auto a = lo.as_array();
    const auto b = hi.as_array();
    std::array<double, 6> out{};
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = a[c] + (b[c] - a[c]) * unit(rng);
    return EgoMotion::from_array(out);
  };

  std::vector<std::vector<EgoMotion>> out;
  out.reserve(count);
  for (int n = 0; n < count; ++n) {
    const EgoMotion v = draw(sampling.velocity_min, sampling.velocity_max);
    const EgoMotion a = draw(sampling.acceleration_min, sampling.acceleration_max);
    std::vector<EgoMotion> seq;
    seq.reserve(length);
    for (int s = 0; s < length; ++s) {
      auto m = (kind == TrajectoryKind::kConstantAcceleration ? add(v, a, s) : v).as_array();
      for (std::size_t c = 0; c < m.size(); ++c) m[c] += sampling.noise_sigma[c] * gauss(rng);
      seq.push_back(EgoMotion::from_array(m));
    }
    out.push_back(std::move(seq));
  }
  return out;
}

Scene street_canyon_scene() {
  Scene scene;
  scene.num_classes = 5;
  scene.background_class = 4;
  const double ground_y = 1.6;
  auto plane = [](Eigen::Vector3d c, Eigen::Vector3d u, Eigen::Vector3d v, int cls) {
    return Primitive{FinitePlane{c, u, v}, cls};
  };
  auto box = [](Eigen::Vector3d lo, Eigen::Vector3d hi, int cls) {
    return Primitive{Box{lo, hi}, cls};
  };
  // road
  scene.primitives.push_back(
      plane({0.0, ground_y, 35.0}, {6.0, 0.0, 0.0}, {0.0, 0.0, 45.0}, 0));
  // building facades on both sides, 10 units tall
  scene.primitives.push_back(
      plane({-6.0, ground_y - 5.0, 35.0}, {0.0, 5.0, 0.0}, {0.0, 0.0, 45.0}, 1));
  scene.primitives.push_back(
      plane({6.0, ground_y - 5.0, 35.0}, {0.0, 5.0, 0.0}, {0.0, 0.0, 45.0}, 1));
  // far end of the street
  scene.primitives.push_back(
      plane({0.0, ground_y - 5.0, 80.0}, {6.0, 0.0, 0.0}, {0.0, 5.0, 0.0}, 4));
  // two cars and a truck
  scene.primitives.push_back(box({-4.5, 0.1, 12.0}, {-2.5, ground_y, 16.0}, 2));
  scene.primitives.push_back(box({1.5, 0.2, 20.0}, {3.5, ground_y, 24.5}, 2));
  scene.primitives.push_back(box({-1.2, -1.4, 34.0}, {1.8, ground_y, 42.0}, 3));
  return scene;
}

CameraIntrinsics street_canyon_intrinsics() {
  CameraIntrinsics k;
  k.width = 256;
  k.height = 128;
  k.fx = 160.0;
  k.fy = 160.0;
  k.cx = 128.0;
  k.cy = 64.0;
  return k;
}

}  // namespace fseg3d
