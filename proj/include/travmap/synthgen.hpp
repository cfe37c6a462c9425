#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "travmap/cloudexport.hpp"
#include "travmap/costmap.hpp"
#include "travmap/defaults.hpp"
#include "travmap/error.hpp"
#include "travmap/features.hpp"
#include "travmap/geometry.hpp"
#include "travmap/grid.hpp"
#include "travmap/image_io.hpp"

namespace travmap::synth {

struct TerrainClass {
  std::string name;
  GroundTruth label = GroundTruth::traversable;
  std::array<std::uint8_t, 3> color{128, 128, 128};
  double extrude = 0.0;  // obstacle height above the ground surface, m
};

/// Elevations live on the (rows + 1) x (cols + 1) cell corners and are
/// interpolated bilinearly; each cell carries one terrain class. Cell (r, c)
/// spans x in origin_x + [c, c + 1) * cell_size, y likewise with r.
struct Heightfield {
  Grid<double> elevation;           // (rows + 1) x (cols + 1)
  Grid<std::int32_t> classes;       // rows x cols
  double cell_size = 1.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  std::vector<TerrainClass> class_table;
  std::int32_t sky_class = -1;      // class reported for rays that hit nothing

  std::size_t rows() const noexcept { return classes.height(); }
  std::size_t cols() const noexcept { return classes.width(); }
  double extent_x() const noexcept { return static_cast<double>(cols()) * cell_size; }
  double extent_y() const noexcept { return static_cast<double>(rows()) * cell_size; }

  bool contains(double x, double y) const noexcept {
    return x >= origin_x && y >= origin_y && x <= origin_x + extent_x() && y <= origin_y + extent_y();
  }

  double ground_height(double x, double y) const {
    const double gx = std::clamp((x - origin_x) / cell_size, 0.0, static_cast<double>(cols()));
    const double gy = std::clamp((y - origin_y) / cell_size, 0.0, static_cast<double>(rows()));
    const auto c = std::min(static_cast<std::size_t>(gx), cols() - 1);
    const auto r = std::min(static_cast<std::size_t>(gy), rows() - 1);
    const double fx = gx - static_cast<double>(c), fy = gy - static_cast<double>(r);
    const double top = elevation(r, c) * (1 - fx) + elevation(r, c + 1) * fx;
    const double bottom = elevation(r + 1, c) * (1 - fx) + elevation(r + 1, c + 1) * fx;
    return top * (1 - fy) + bottom * fy;
  }

  std::int32_t class_at(double x, double y) const {
    const auto c = std::min(static_cast<std::size_t>(std::max(0.0, (x - origin_x) / cell_size)), cols() - 1);
    const auto r = std::min(static_cast<std::size_t>(std::max(0.0, (y - origin_y) / cell_size)), rows() - 1);
    return classes(r, c);
  }

  double surface_height(double x, double y) const {
    return ground_height(x, y) + class_table[static_cast<std::size_t>(class_at(x, y))].extrude;
  }

  void validate() const {
    require(rows() > 0 && cols() > 0, ErrorCode::shape, "heightfield has no cells");
    require(elevation.height() == rows() + 1 && elevation.width() == cols() + 1, ErrorCode::shape,
            "elevation grid must be one larger than the class grid in each direction");
    require(cell_size > 0.0, ErrorCode::invalid_argument, "cell size must be positive");
    for (double e : elevation.data()) require(std::isfinite(e), ErrorCode::non_finite, "non-finite elevation");
    for (std::int32_t id : classes.data()) {
      require(id >= 0 && static_cast<std::size_t>(id) < class_table.size(), ErrorCode::out_of_range,
              "class id " + std::to_string(id) + " not in the class table");
    }
    require(sky_class >= 0 && static_cast<std::size_t>(sky_class) < class_table.size(), ErrorCode::out_of_range,
            "sky class not in the class table");
  }
};

struct SplinePath {
  std::vector<Eigen::Vector2d> control_points;
  double spacing = 0.25;         // m between emitted poses
  double walker_height = 1.5;    // camera height above the ground, m
  double velocity = 1.0;         // m/s, sets timestamps
  double start_time = 0.0;

  void validate() const {
    require(control_points.size() >= 2, ErrorCode::invalid_argument, "spline needs at least two control points");
    require(spacing > 0.0 && velocity > 0.0 && walker_height > 0.0, ErrorCode::invalid_argument,
            "spline spacing, velocity and height must be positive");
  }
};

namespace detail {

inline Eigen::Vector2d catmull_rom(const Eigen::Vector2d& p0, const Eigen::Vector2d& p1, const Eigen::Vector2d& p2,
                                   const Eigen::Vector2d& p3, double t) {
  const double t2 = t * t, t3 = t2 * t;
  return 0.5 * ((2.0 * p1) + (-p0 + p2) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3);
}

inline constexpr int spline_subdivisions = 200;

/// Densely sampled uniform Catmull-Rom curve, end points duplicated.
inline std::vector<Eigen::Vector2d> spline_polyline(const SplinePath& spline) {
  const auto& cp = spline.control_points;
  std::vector<Eigen::Vector2d> line;
  for (std::size_t i = 0; i + 1 < cp.size(); ++i) {
    const auto& p0 = cp[i == 0 ? 0 : i - 1];
    const auto& p3 = cp[std::min(i + 2, cp.size() - 1)];
    for (int s = 0; s < spline_subdivisions; ++s) {
      line.push_back(catmull_rom(p0, cp[i], cp[i + 1], p3, static_cast<double>(s) / spline_subdivisions));
    }
  }
  line.push_back(cp.back());
  return line;
}

inline std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Camera-convention rotation (x right, y down, z forward) for a level
/// camera looking along `yaw`.
inline Mat3 level_camera_rotation(double yaw) {
  const Vec3 forward(std::cos(yaw), std::sin(yaw), 0.0);
  const Vec3 right(std::sin(yaw), -std::cos(yaw), 0.0);
  const Vec3 down(0.0, 0.0, -1.0);
  Mat3 r;
  r.col(0) = right;
  r.col(1) = down;
  r.col(2) = forward;
  return r;
}

/// Length of the sampled spline curve.
inline double spline_length(const SplinePath& spline) {
  spline.validate();
  const auto line = detail::spline_polyline(spline);
  double length = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) length += (line[i] - line[i - 1]).norm();
  return length;
}

/// Poses every `spacing` metres of arc length along the spline, height
/// `walker_height` above the terrain, level, facing the next sample.
inline std::vector<Pose> walk_spline(const Heightfield& field, const SplinePath& spline) {
  spline.validate();
  const auto line = detail::spline_polyline(spline);
  for (const auto& p : line) {
    require(field.contains(p.x(), p.y()), ErrorCode::out_of_range, "spline leaves the heightfield");
  }
  std::vector<double> arc(line.size(), 0.0);
  for (std::size_t i = 1; i < line.size(); ++i) arc[i] = arc[i - 1] + (line[i] - line[i - 1]).norm();

  const auto count = static_cast<std::size_t>(std::floor(arc.back() / spline.spacing)) + 1;
  std::vector<Eigen::Vector2d> samples;
  samples.reserve(count);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double s = static_cast<double>(k) * spline.spacing;
    while (seg + 2 < line.size() && arc[seg + 1] < s) ++seg;
    const double span = arc[seg + 1] - arc[seg];
    const double f = span > 0.0 ? std::clamp((s - arc[seg]) / span, 0.0, 1.0) : 0.0;
    samples.push_back(line[seg] + f * (line[seg + 1] - line[seg]));
  }

  std::vector<Pose> poses;
  poses.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Eigen::Vector2d dir = Eigen::Vector2d::Zero();
    if (k + 1 < count) dir = samples[k + 1] - samples[k];
    if (dir.norm() < 1e-12 && k > 0) dir = samples[k] - samples[k - 1];
    if (dir.norm() < 1e-12) dir = spline.control_points.back() - spline.control_points.front();
    const double yaw = std::atan2(dir.y(), dir.x());
    const Vec3 position(samples[k].x(), samples[k].y(),
                        field.ground_height(samples[k].x(), samples[k].y()) + spline.walker_height);
    const double t = spline.start_time + static_cast<double>(k) * spline.spacing / spline.velocity;
    poses.emplace_back(level_camera_rotation(yaw), position, t);
  }
  return poses;
}

struct RenderOptions {
  double max_distance = 60.0;  // m; rays travelling further count as sky
  std::uint64_t texture_seed = 0;
};

struct RenderedView {
  Grid<std::int32_t> class_ids;
  DepthImage depth;  // 0 where nothing was hit
  GroundTruthMask ground_truth;
  RgbImage rgb;
};

/// Ray-casts one camera view of the heightfield. Pixel (r, c) shoots the ray
/// through u = c, v = r so that depths invert exactly through `unproject`.
inline RenderedView render_view(const Heightfield& field, const Pose& camera, const CameraIntrinsics& k,
                                const RenderOptions& options = {}) {
  field.validate();
  k.validate();
  const auto h = static_cast<std::size_t>(k.height), w = static_cast<std::size_t>(k.width);
  RenderedView view{Grid<std::int32_t>(h, w, 1, field.sky_class), DepthImage(h, w), GroundTruthMask(h, w),
                    RgbImage(h, w, 3)};

  double top = -std::numeric_limits<double>::infinity();
  for (double e : field.elevation.data()) top = std::max(top, e);
  double tallest = 0.0;
  for (const auto& c : field.class_table) tallest = std::max(tallest, c.extrude);
  top += tallest;

  const Vec3 origin = camera.translation();
  const double step = 0.3 * field.cell_size;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const Vec3 dir = camera.rotation() * Vec3((static_cast<double>(c) - k.cx) / k.fx,
                                                (static_cast<double>(r) - k.cy) / k.fy, 1.0);
      const double dt = step / dir.norm();
      const double t_max = options.max_distance / dir.norm();
      auto below = [&](double t) {
        const Vec3 p = origin + t * dir;
        return p.z() <= field.surface_height(p.x(), p.y());
      };

      double hit = -1.0;
      double prev = 0.0;
      for (double t = dt; t <= t_max; prev = t, t += dt) {
        const Vec3 p = origin + t * dir;
        if (!field.contains(p.x(), p.y())) break;
        if (p.z() > top && dir.z() >= 0.0) break;
        if (below(t)) {
          double lo = prev, hi = t;
          for (int i = 0; i < 48; ++i) {
            const double mid = 0.5 * (lo + hi);
            (below(mid) ? hi : lo) = mid;
          }
          hit = hi;
          break;
        }
      }
      std::int32_t cls = field.sky_class;
      if (hit > 0.0) {
        const Vec3 p = origin + hit * dir;
        cls = field.class_at(p.x(), p.y());
        view.depth(r, c) = static_cast<float>(hit);
        view.class_ids(r, c) = cls;
        // World-anchored texture so a surface looks the same from every frame.
        const auto qx = static_cast<std::int64_t>(std::floor(p.x() * 10.0));
        const auto qy = static_cast<std::int64_t>(std::floor(p.y() * 10.0));
        const std::uint64_t n = detail::splitmix(options.texture_seed ^ detail::splitmix(static_cast<std::uint64_t>(qx) * 73856093ULL ^
                                                                                      static_cast<std::uint64_t>(qy) * 19349663ULL));
        const double shade = 0.9 + 0.2 * static_cast<double>(n % 1024) / 1023.0;
        const auto& color = field.class_table[static_cast<std::size_t>(cls)].color;
        for (std::size_t ch = 0; ch < 3; ++ch) {
          view.rgb(r, c, ch) = static_cast<std::uint8_t>(std::clamp(std::lround(color[ch] * shade), 0L, 255L));
        }
      } else {
        const auto& color = field.class_table[static_cast<std::size_t>(field.sky_class)].color;
        for (std::size_t ch = 0; ch < 3; ++ch) view.rgb(r, c, ch) = color[ch];
      }
      view.ground_truth(r, c) = static_cast<std::uint8_t>(field.class_table[static_cast<std::size_t>(cls)].label);
    }
  }
  return view;
}

inline std::vector<RenderedView> render_views(const Heightfield& field, const std::vector<Pose>& poses,
                                              const CameraIntrinsics& k, const RenderOptions& options = {}) {
  std::vector<RenderedView> views;
  views.reserve(poses.size());
  for (const Pose& p : poses) views.push_back(render_view(field, p, k, options));
  return views;
}

/// Per-class Gaussian stand-in for backbone embeddings.
struct ClassFeatureModel {
  std::vector<FeatureVector> means;
  std::vector<double> noise;  // isotropic standard deviation per class

  std::size_t dim() const noexcept { return means.empty() ? 0 : means.front().size(); }

  void validate() const {
    require(!means.empty() && means.size() == noise.size(), ErrorCode::shape, "class feature model is empty");
    for (std::size_t i = 0; i < means.size(); ++i) {
      require(means[i].size() == dim(), ErrorCode::dimension, "class means differ in length");
      require(noise[i] >= 0.0, ErrorCode::invalid_argument, "noise scale must be >= 0");
      for (std::size_t j = 0; j < i; ++j) {
        require(means[i] != means[j], ErrorCode::invalid_argument, "class means must be distinct");
      }
    }
  }

  /// Smallest L-infinity distance between any two class means.
  double min_separation() const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < means.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        double d = 0.0;
        for (std::size_t k = 0; k < dim(); ++k) d = std::max(d, std::abs(double(means[i][k]) - means[j][k]));
        best = std::min(best, d);
      }
    }
    return best;
  }
};

/// Class means drawn uniformly from [-1, 1]^dim.
inline ClassFeatureModel random_class_features(std::size_t classes, std::size_t dim, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  ClassFeatureModel model;
  for (std::size_t c = 0; c < classes; ++c) {
    FeatureVector mean(dim);
    for (float& v : mean) v = static_cast<float>(uniform(rng));
    model.means.push_back(std::move(mean));
    model.noise.push_back(noise);
  }
  model.validate();
  return model;
}

/// Each cell gets its class mean plus seeded isotropic Gaussian noise.
inline FeatureGrid synth_features(const Grid<std::int32_t>& class_image, const ClassFeatureModel& model,
                                  std::uint64_t seed) {
  model.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  FeatureGrid grid(class_image.height(), class_image.width(), model.dim());
  for (std::size_t p = 0; p < class_image.pixels(); ++p) {
    const std::int32_t cls = class_image.data()[p];
    require(cls >= 0 && static_cast<std::size_t>(cls) < model.means.size(), ErrorCode::out_of_range,
            "class id " + std::to_string(cls) + " has no feature model");
    const auto& mean = model.means[static_cast<std::size_t>(cls)];
    const double sigma = model.noise[static_cast<std::size_t>(cls)];
    float* out = grid.data().data() + p * model.dim();
    for (std::size_t k = 0; k < model.dim(); ++k) {
      out[k] = sigma == 0.0 ? mean[k] : static_cast<float>(mean[k] + sigma * normal(rng));
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Scene description

/// Everything needed to regenerate a synthetic dataset.
struct Scene {
  Heightfield field;
  SplinePath spline;
  CameraIntrinsics intrinsics;
  std::size_t feature_height = defaults::grid_height;
  std::size_t feature_width = defaults::grid_width;
  std::size_t feature_dim = defaults::feature_dim;
  double feature_noise = 0.1;
  std::uint64_t feature_seed = 1;
  std::size_t frame_stride = 4;  // render every n-th pose
  std::size_t eval_every = 4;    // every n-th rendered frame is held out for evaluation
  RenderOptions render;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(trim(item));
  return parts;
}

inline double number(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::invalid_argument, "scene: '" + s + "' is not a number (" + what + ")");
  }
}

template <class T>
Grid<T> read_csv_grid(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io, "cannot open " + path);
  std::vector<std::vector<T>> rows;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(travmap::detail::strip_comment(line));
    if (line.empty()) continue;
    std::vector<T> row;
    for (const auto& cell : split(line, ',')) row.push_back(static_cast<T>(number(cell, path)));
    require(rows.empty() || row.size() == rows.front().size(), ErrorCode::shape, path + ": ragged CSV rows");
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), ErrorCode::empty_input, path + ": empty CSV");
  Grid<T> grid(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) grid(r, c) = rows[r][c];
  }
  return grid;
}

inline GroundTruth parse_label(const std::string& s) {
  if (s == "traversable") return GroundTruth::traversable;
  if (s == "non_traversable") return GroundTruth::non_traversable;
  if (s == "unlabeled") return GroundTruth::unlabeled;
  fail(ErrorCode::invalid_argument, "scene: unknown traversability label '" + s + "'");
}

}  // namespace detail

/// Flat `key = value` text. CSV paths are resolved relative to the scene file.
/// See README for the key list.
inline Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io, "cannot open scene " + path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    line = detail::trim(travmap::detail::strip_comment(line));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::invalid_argument, "scene: expected key = value, got '" + line + "'");
    kv[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
  }
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    require(it != kv.end(), ErrorCode::invalid_argument, "scene: missing key '" + key + "'");
    return it->second;
  };
  auto num = [&](const std::string& key, double fallback) {
    const auto it = kv.find(key);
    return it == kv.end() ? fallback : detail::number(it->second, key);
  };

  Scene scene;
  scene.field.elevation = detail::read_csv_grid<double>((base / get("heightfield")).string());
  scene.field.classes = detail::read_csv_grid<std::int32_t>((base / get("classes")).string());
  scene.field.cell_size = detail::number(get("cell_size"), "cell_size");
  if (kv.count("origin")) {
    const auto o = detail::split(kv["origin"], ',');
    require(o.size() == 2, ErrorCode::invalid_argument, "scene: origin needs x, y");
    scene.field.origin_x = detail::number(o[0], "origin");
    scene.field.origin_y = detail::number(o[1], "origin");
  }
  for (std::size_t id = 0;; ++id) {
    const auto it = kv.find("class." + std::to_string(id));
    if (it == kv.end()) break;
    const auto parts = detail::split(it->second, ',');
    require(parts.size() == 4, ErrorCode::invalid_argument, "scene: class entries are name, label, r g b, extrude");
    TerrainClass tc;
    tc.name = parts[0];
    tc.label = detail::parse_label(parts[1]);
    std::istringstream rgb(parts[2]);
    int r = 0, g = 0, b = 0;
    require(static_cast<bool>(rgb >> r >> g >> b), ErrorCode::invalid_argument, "scene: bad colour for " + tc.name);
    tc.color = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)};
    tc.extrude = detail::number(parts[3], "extrude");
    scene.field.class_table.push_back(tc);
  }
  scene.field.sky_class = static_cast<std::int32_t>(detail::number(get("sky_class"), "sky_class"));
  scene.field.validate();

  for (const auto& point : detail::split(get("spline"), ';')) {
    if (point.empty()) continue;
    const auto xy = detail::split(point, ',');
    require(xy.size() == 2, ErrorCode::invalid_argument, "scene: spline points are 'x, y' separated by ';'");
    scene.spline.control_points.emplace_back(detail::number(xy[0], "spline"), detail::number(xy[1], "spline"));
  }
  scene.spline.spacing = num("spacing", scene.spline.spacing);
  scene.spline.walker_height = num("walker_height", scene.spline.walker_height);
  scene.spline.velocity = num("velocity", scene.spline.velocity);
  scene.spline.validate();

  scene.intrinsics.width = static_cast<int>(detail::number(get("image_width"), "image_width"));
  scene.intrinsics.height = static_cast<int>(detail::number(get("image_height"), "image_height"));
  scene.intrinsics.fx = detail::number(get("fx"), "fx");
  scene.intrinsics.fy = num("fy", scene.intrinsics.fx);
  scene.intrinsics.cx = num("cx", scene.intrinsics.width / 2.0);
  scene.intrinsics.cy = num("cy", scene.intrinsics.height / 2.0);
  scene.intrinsics.validate();

  scene.feature_height = static_cast<std::size_t>(num("feature_height", static_cast<double>(scene.feature_height)));
  scene.feature_width = static_cast<std::size_t>(num("feature_width", static_cast<double>(scene.feature_width)));
  scene.feature_dim = static_cast<std::size_t>(num("feature_dim", static_cast<double>(scene.feature_dim)));
  scene.feature_noise = num("feature_noise", scene.feature_noise);
  scene.feature_seed = static_cast<std::uint64_t>(num("feature_seed", static_cast<double>(scene.feature_seed)));
  scene.frame_stride = static_cast<std::size_t>(num("frame_stride", static_cast<double>(scene.frame_stride)));
  scene.eval_every = static_cast<std::size_t>(num("eval_every", static_cast<double>(scene.eval_every)));
  scene.render.max_distance = num("max_distance", scene.render.max_distance);
  scene.render.texture_seed = static_cast<std::uint64_t>(num("texture_seed", 0.0));
  require(scene.feature_height > 0 && scene.feature_width > 0 && scene.feature_dim > 0, ErrorCode::shape,
          "scene: feature grid dims must be positive");
  require(scene.feature_height <= static_cast<std::size_t>(scene.intrinsics.height) &&
              scene.feature_width <= static_cast<std::size_t>(scene.intrinsics.width),
          ErrorCode::shape, "scene: feature grid larger than the image");
  require(scene.frame_stride >= 1 && scene.eval_every >= 1, ErrorCode::invalid_argument,
          "scene: frame_stride and eval_every must be >= 1");
  return scene;
}

}  // namespace travmap::synth
