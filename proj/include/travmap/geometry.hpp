#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "travmap/defaults.hpp"
#include "travmap/error.hpp"

namespace travmap {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rigid transform of the rig in the world frame. The columns of `rotation`
/// are the device axes expressed in world coordinates.
class Pose {
 public:
  static constexpr double tolerance = 1e-9;

  Pose() = default;

  Pose(const Mat3& rotation, const Vec3& translation, double timestamp = 0.0)
      : rotation_(rotation), translation_(translation), timestamp_(timestamp) {
    require(rotation.allFinite() && translation.allFinite() && std::isfinite(timestamp), ErrorCode::non_finite,
            "pose has non-finite entries");
    const Mat3 gram = rotation.transpose() * rotation - Mat3::Identity();
    require(gram.cwiseAbs().maxCoeff() <= tolerance, ErrorCode::invalid_argument, "pose rotation is not orthonormal");
    require(std::abs(rotation.determinant() - 1.0) <= tolerance, ErrorCode::invalid_argument,
            "pose rotation is not proper (det != +1)");
  }

  /// Quaternion is normalised before conversion.
  static Pose from_quaternion(const Eigen::Quaterniond& q, const Vec3& translation, double timestamp = 0.0) {
    const double norm = q.norm();
    require(std::isfinite(norm) && norm > 1e-12, ErrorCode::invalid_argument, "degenerate quaternion");
    return Pose(q.normalized().toRotationMatrix(), translation, timestamp);
  }

  static Pose identity(double timestamp = 0.0) { return Pose(Mat3::Identity(), Vec3::Zero(), timestamp); }

  const Mat3& rotation() const noexcept { return rotation_; }
  const Vec3& translation() const noexcept { return translation_; }
  double timestamp() const noexcept { return timestamp_; }

  Eigen::Quaterniond quaternion() const { return Eigen::Quaterniond(rotation_).normalized(); }

  /// this * other; keeps this pose's timestamp.
  Pose compose(const Pose& other) const {
    return Pose(rotation_ * other.rotation_, rotation_ * other.translation_ + translation_, timestamp_);
  }

  Pose inverse() const {
    const Mat3 rt = rotation_.transpose();
    return Pose(rt, -(rt * translation_), timestamp_);
  }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation_;
    m.topRightCorner<3, 1>() = translation_;
    return m;
  }

 private:
  Mat3 rotation_ = Mat3::Identity();
  Vec3 translation_ = Vec3::Zero();
  double timestamp_ = 0.0;
};

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  void validate() const {
    require(std::isfinite(fx) && std::isfinite(fy) && std::isfinite(cx) && std::isfinite(cy), ErrorCode::non_finite,
            "intrinsics must be finite");
    require(fx > 0.0 && fy > 0.0, ErrorCode::invalid_argument, "focal lengths must be positive");
    require(width > 0 && height > 0, ErrorCode::invalid_argument, "image size must be positive");
    require(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height, ErrorCode::invalid_argument,
            "principal point must lie inside the image");
  }

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d k;
    k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return k;
  }
};

struct RigConfig {
  double height_above_ground = 1.5;  // m
  int horizon_poses = defaults::horizon_poses;
  double min_forward_depth = defaults::min_forward_depth;
  /// Camera pose in the body frame. Identity: trajectory poses are camera poses.
  Pose camera_in_body = Pose::identity();

  void validate() const {
    require(std::isfinite(height_above_ground) && height_above_ground > 0.0, ErrorCode::invalid_argument,
            "rig height must be positive");
    require(horizon_poses >= 1, ErrorCode::invalid_argument, "horizon must be at least one pose");
    require(std::isfinite(min_forward_depth) && min_forward_depth > 0.0, ErrorCode::invalid_argument,
            "min forward depth must be positive");
  }
};

struct PixelCoord {
  double u = 0.0;  // column
  double v = 0.0;  // row

  bool in_bounds(const CameraIntrinsics& k) const noexcept {
    return u >= 0.0 && v >= 0.0 && u < static_cast<double>(k.width) && v < static_cast<double>(k.height);
  }
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

enum class ProjectionStatus { ok, behind_camera, out_of_bounds };

struct Projection {
  ProjectionStatus status = ProjectionStatus::behind_camera;
  PixelCoord pixel;

  bool ok() const noexcept { return status == ProjectionStatus::ok; }
};

/// X expressed in the device frame of `pose`: R^T (X - t).
inline Vec3 world_to_device(const Pose& pose, const Vec3& point_world) {
  return pose.rotation().transpose() * (point_world - pose.translation());
}

inline Vec3 device_to_world(const Pose& pose, const Vec3& point_device) {
  return pose.rotation() * point_device + pose.translation();
}

/// Drops a rig position onto the ground below it (world z is gravity aligned).
inline Vec3 ground_project(const Vec3& point_world, const RigConfig& rig) {
  return {point_world.x(), point_world.y(), point_world.z() - rig.height_above_ground};
}

/// Pinhole projection. Points with z <= min_depth are reported as behind the
/// camera; a finite projection outside the image is reported as out of bounds
/// with the pixel still filled in.
inline Projection project_to_pixel(const Vec3& point_device, const CameraIntrinsics& k, double min_depth = 0.0) {
  Projection result;
  if (!(point_device.z() > min_depth) || !(point_device.z() > 0.0)) {
    result.status = ProjectionStatus::behind_camera;
    return result;
  }
  result.pixel.u = k.fx * point_device.x() / point_device.z() + k.cx;
  result.pixel.v = k.fy * point_device.y() / point_device.z() + k.cy;
  result.status = result.pixel.in_bounds(k) ? ProjectionStatus::ok : ProjectionStatus::out_of_bounds;
  return result;
}

inline Pose camera_pose(const Pose& body_pose, const RigConfig& rig) { return body_pose.compose(rig.camera_in_body); }

/// Pixels of the ground points under the next `rig.horizon_poses` poses, seen
/// from the camera of frame `frame_index`. Only in-front, in-bounds points are
/// kept, in trajectory order.
inline std::vector<PixelCoord> project_future_path(const std::vector<Pose>& trajectory, std::size_t frame_index,
                                                   const CameraIntrinsics& k, const RigConfig& rig) {
  require(frame_index < trajectory.size(), ErrorCode::out_of_range,
          "frame index " + std::to_string(frame_index) + " outside trajectory of " +
              std::to_string(trajectory.size()) + " poses");
  const Pose camera = camera_pose(trajectory[frame_index], rig);
  const std::size_t last = std::min(trajectory.size() - 1, frame_index + static_cast<std::size_t>(rig.horizon_poses));

  std::vector<PixelCoord> pixels;
  for (std::size_t j = frame_index + 1; j <= last; ++j) {
    const Vec3 ground = ground_project(trajectory[j].translation(), rig);
    const Projection p = project_to_pixel(world_to_device(camera, ground), k, rig.min_forward_depth);
    if (p.ok()) pixels.push_back(p.pixel);
  }
  return pixels;
}

/// Nearest pose by timestamp within `tolerance` seconds. Assumes the
/// trajectory is time ordered; ties go to the earlier pose.
inline std::optional<std::size_t> associate_frame(const std::vector<Pose>& trajectory, double timestamp,
                                                  double tolerance = defaults::pose_match_tolerance) {
  if (trajectory.empty()) return std::nullopt;
  const auto it = std::lower_bound(trajectory.begin(), trajectory.end(), timestamp,
                                   [](const Pose& p, double t) { return p.timestamp() < t; });
  std::size_t best = static_cast<std::size_t>(it - trajectory.begin());
  if (best == trajectory.size()) {
    best = trajectory.size() - 1;
  } else if (best > 0 &&
             std::abs(trajectory[best - 1].timestamp() - timestamp) <= std::abs(trajectory[best].timestamp() - timestamp)) {
    best -= 1;
  }
  if (std::abs(trajectory[best].timestamp() - timestamp) > tolerance) return std::nullopt;
  return best;
}

// ---------------------------------------------------------------------------
// File formats

namespace detail {

inline std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return hash == std::string::npos ? line : line.substr(0, hash);
}

inline bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace detail

/// TUM format: `timestamp tx ty tz qx qy qz qw` per line, '#' comments.
inline std::vector<Pose> parse_tum(std::istream& in) {
  std::vector<Pose> poses;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::strip_comment(line);
    if (detail::blank(line)) continue;
    std::istringstream ss(line);
    double v[8];
    for (double& x : v) {
      if (!(ss >> x)) fail(ErrorCode::invalid_argument, "trajectory line " + std::to_string(lineno) + ": expected 8 numbers");
    }
    Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    poses.push_back(Pose::from_quaternion(q, Vec3(v[1], v[2], v[3]), v[0]));
  }
  for (std::size_t i = 1; i < poses.size(); ++i) {
    require(poses[i].timestamp() >= poses[i - 1].timestamp(), ErrorCode::invalid_argument,
            "trajectory timestamps are not ordered");
  }
  return poses;
}

inline std::vector<Pose> load_tum(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io, "cannot open trajectory " + path);
  return parse_tum(in);
}

inline void save_tum(const std::vector<Pose>& poses, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::io, "cannot write trajectory " + path);
  out << "# timestamp tx ty tz qx qy qz qw\n" << std::setprecision(17);
  for (const Pose& p : poses) {
    const Eigen::Quaterniond q = p.quaternion();
    const Vec3& t = p.translation();
    out << p.timestamp() << ' ' << t.x() << ' ' << t.y() << ' ' << t.z() << ' ' << q.x() << ' ' << q.y() << ' '
        << q.z() << ' ' << q.w() << '\n';
  }
  require(out.good(), ErrorCode::io, "failed writing " + path);
}

/// Flat `key value` / `key = value` lines.
inline CameraIntrinsics parse_intrinsics(std::istream& in) {
  CameraIntrinsics k;
  bool seen[6] = {};
  std::string line;
  while (std::getline(in, line)) {
    line = detail::strip_comment(line);
    std::replace(line.begin(), line.end(), '=', ' ');
    std::replace(line.begin(), line.end(), ':', ' ');
    std::istringstream ss(line);
    std::string key;
    double value = 0.0;
    if (!(ss >> key)) continue;
    if (!(ss >> value)) fail(ErrorCode::invalid_argument, "intrinsics key '" + key + "' has no numeric value");
    if (key == "fx") { k.fx = value; seen[0] = true; }
    else if (key == "fy") { k.fy = value; seen[1] = true; }
    else if (key == "cx") { k.cx = value; seen[2] = true; }
    else if (key == "cy") { k.cy = value; seen[3] = true; }
    else if (key == "width") { k.width = static_cast<int>(value); seen[4] = true; }
    else if (key == "height") { k.height = static_cast<int>(value); seen[5] = true; }
    else fail(ErrorCode::invalid_argument, "unknown intrinsics key '" + key + "'");
  }
  require(std::all_of(std::begin(seen), std::end(seen), [](bool b) { return b; }), ErrorCode::invalid_argument,
          "intrinsics need fx, fy, cx, cy, width and height");
  k.validate();
  return k;
}

inline CameraIntrinsics load_intrinsics(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io, "cannot open intrinsics " + path);
  return parse_intrinsics(in);
}

inline void save_intrinsics(const CameraIntrinsics& k, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::io, "cannot write intrinsics " + path);
  out << std::setprecision(17) << "fx " << k.fx << "\nfy " << k.fy << "\ncx " << k.cx << "\ncy " << k.cy
      << "\nwidth " << k.width << "\nheight " << k.height << '\n';
}

}  // namespace travmap
