#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "travmap/costmap.hpp"
#include "travmap/defaults.hpp"
#include "travmap/error.hpp"
#include "travmap/features.hpp"
#include "travmap/geometry.hpp"
#include "travmap/image_io.hpp"

namespace travmap {

/// Metres along the optical axis; non-positive or non-finite means no return.
using DepthImage = Grid<float>;

inline bool valid_depth(float d) noexcept { return std::isfinite(d) && d > 0.0f; }

struct CostPoint {
  float x = 0, y = 0, z = 0;
  float cost = 0;
  friend bool operator==(const CostPoint&, const CostPoint&) = default;
};

struct CostCloud {
  std::vector<CostPoint> points;
};

/// Inverse pinhole: x = (u - cx) d / fx, y = (v - cy) d / fy, z = d.
inline Vec3 unproject(const PixelCoord& pixel, double depth, const CameraIntrinsics& k) {
  require(std::isfinite(depth) && depth > 0.0, ErrorCode::invalid_argument, "unproject needs a positive depth");
  return {(pixel.u - k.cx) * depth / k.fx, (pixel.v - k.cy) * depth / k.fy, depth};
}

/// One point per valid-depth pixel at least `min_range` metres from the
/// camera, in row-major order. Pixel (r, c) is unprojected at u = c, v = r.
inline CostCloud build_cost_cloud(const CostMap& cost, const DepthImage& depth, const CameraIntrinsics& k,
                                  double min_range = defaults::min_range) {
  require(cost.values.same_shape(depth.height(), depth.width()), ErrorCode::dimension,
          "cost map and depth image differ in size");
  require(depth.channels() == 1, ErrorCode::shape, "depth image must have one channel");
  require(std::isfinite(min_range) && min_range >= 0.0, ErrorCode::invalid_argument, "min range must be >= 0");
  CostCloud cloud;
  for (std::size_t r = 0; r < depth.height(); ++r) {
    for (std::size_t c = 0; c < depth.width(); ++c) {
      const float d = depth(r, c);
      if (!valid_depth(d)) continue;
      const Vec3 p = unproject({static_cast<double>(c), static_cast<double>(r)}, d, k);
      if (p.norm() < min_range) continue;
      cloud.points.push_back({static_cast<float>(p.x()), static_cast<float>(p.y()), static_cast<float>(p.z()),
                              cost.values(r, c)});
    }
  }
  return cloud;
}

/// Affine remap of the cost channel applied on write (e.g. to a planner's
/// height range). Off by default.
struct CostRemap {
  double scale = 1.0;
  double offset = 0.0;
};

inline void write_cloud(const CostCloud& cloud, const std::string& path, std::optional<CostRemap> remap = std::nullopt) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::io, "cannot write " + path);
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.points.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nproperty float cost\nend_header\n";
  char line[128];
  for (const CostPoint& p : cloud.points) {
    const double value = remap ? remap->scale * p.cost + remap->offset : p.cost;
    std::snprintf(line, sizeof line, "%.6e %.6e %.6e %.6e\n", static_cast<double>(p.x), static_cast<double>(p.y),
                  static_cast<double>(p.z), value);
    out << line;
  }
  require(out.good(), ErrorCode::io, "failed writing " + path);
}

/// Reads the ASCII layout written by write_cloud.
inline CostCloud read_cloud(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io, "cannot open " + path);
  std::string line;
  require(std::getline(in, line) && line == "ply", ErrorCode::bad_magic, path + " is not a PLY file");
  std::size_t count = 0;
  bool have_count = false;
  while (std::getline(in, line) && line != "end_header") {
    std::istringstream ss(line);
    std::string word, element;
    ss >> word;
    if (word == "format") {
      std::string fmt;
      ss >> fmt;
      require(fmt == "ascii", ErrorCode::invalid_argument, path + ": only ASCII PLY is supported");
    } else if (word == "element" && (ss >> element) && element == "vertex") {
      have_count = static_cast<bool>(ss >> count);
    }
  }
  require(have_count, ErrorCode::truncated, path + ": no vertex count");
  CostCloud cloud;
  cloud.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    CostPoint p;
    require(static_cast<bool>(in >> p.x >> p.y >> p.z >> p.cost), ErrorCode::truncated,
            path + ": fewer vertices than the header declares");
    cloud.points.push_back(p);
  }
  return cloud;
}

/// Depth from the shared grid format (dim 1) or a 16-bit PNG in millimetres.
inline DepthImage read_depth(const std::string& path) {
  if (detail::has_suffix(path, ".png")) {
    const auto mm = read_gray16(path);
    DepthImage depth(mm.height(), mm.width());
    for (std::size_t i = 0; i < mm.data().size(); ++i) depth.data()[i] = static_cast<float>(mm.data()[i]) / 1000.0f;
    return depth;
  }
  DepthImage depth = read_feature_grid(path);
  require(depth.channels() == 1, ErrorCode::shape, path + ": depth grid must have dim 1");
  return depth;
}

}  // namespace travmap
