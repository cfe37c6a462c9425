#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "travmap/synthgen.hpp"
#include "test_util.hpp"

using namespace travmap;
using namespace travmap::synth;

namespace {

/// rows x cols field, cell size 1, class 0 everywhere, elevation f(x, y) at corners.
template <class F>
Heightfield make_field(std::size_t rows, std::size_t cols, F elevation) {
  Heightfield f;
  f.elevation = Grid<double>(rows + 1, cols + 1);
  for (std::size_t r = 0; r <= rows; ++r) {
    for (std::size_t c = 0; c <= cols; ++c) f.elevation(r, c) = elevation(double(c), double(r));
  }
  f.classes = Grid<std::int32_t>(rows, cols);
  f.class_table = {{"ground", GroundTruth::traversable, {100, 100, 100}, 0.0},
                   {"rock", GroundTruth::non_traversable, {200, 50, 50}, 2.0},
                   {"sky", GroundTruth::unlabeled, {150, 200, 255}, 0.0}};
  f.sky_class = 2;
  return f;
}

Heightfield flat_field(std::size_t n = 40) {
  return make_field(n, n, [](double, double) { return 0.0; });
}

double yaw_of(const Pose& p) {
  const Vec3 fwd = p.rotation().col(2);
  return std::atan2(fwd.y(), fwd.x());
}

}  // namespace

TEST(WalkSpline, FlatFieldKeepsConstantHeight) {
  SplinePath s;
  s.control_points = {{5, 5}, {15, 10}, {25, 8}, {30, 20}};
  const auto poses = walk_spline(flat_field(), s);
  ASSERT_GT(poses.size(), 10u);
  for (const auto& p : poses) EXPECT_NEAR(p.translation().z(), 1.5, 1e-12);
}

TEST(WalkSpline, StraightSplineHasConstantYaw) {
  SplinePath s;
  s.control_points = {{2, 3}, {20, 15}};
  const auto poses = walk_spline(flat_field(), s);
  const double expected = std::atan2(12.0, 18.0);
  for (const auto& p : poses) EXPECT_NEAR(yaw_of(p), expected, 1e-9);
}

TEST(WalkSpline, RampGivesLinearHeight) {
  const auto field = make_field(10, 40, [](double x, double) { return 0.1 * x; });
  SplinePath s;
  s.control_points = {{1, 5}, {35, 5}};
  const auto poses = walk_spline(field, s);
  for (const auto& p : poses) EXPECT_NEAR(p.translation().z(), 0.1 * p.translation().x() + 1.5, 1e-6);
  for (std::size_t i = 1; i < poses.size(); ++i) {
    const Vec3 d = poses[i].translation() - poses[i - 1].translation();
    EXPECT_NEAR(d.z() / d.x(), 0.1, 1e-6);
  }
}

TEST(WalkSpline, PoseCountSpacingAndTimestamps) {
  SplinePath s;
  s.control_points = {{5, 5}, {15, 12}, {30, 10}};
  s.spacing = 0.4;
  s.velocity = 2.0;
  s.start_time = 100.0;
  const auto poses = walk_spline(flat_field(), s);
  const double length = spline_length(s);
  EXPECT_EQ(poses.size(), static_cast<std::size_t>(std::floor(length / 0.4)) + 1);
  for (std::size_t i = 0; i < poses.size(); ++i) EXPECT_NEAR(poses[i].timestamp(), 100.0 + i * 0.2, 1e-9);
  for (std::size_t i = 1; i < poses.size(); ++i) {
    const double step = (poses[i].translation() - poses[i - 1].translation()).norm();
    EXPECT_LE(step, 0.4 + 1e-9);
    EXPECT_GT(step, 0.39);
  }
}

TEST(WalkSpline, PosesAreLevel) {
  SplinePath s;
  s.control_points = {{5, 5}, {15, 25}, {30, 10}};
  for (const auto& p : walk_spline(flat_field(), s)) {
    EXPECT_NEAR(p.rotation().col(2).z(), 0.0, 1e-12);  // no pitch
    EXPECT_NEAR(p.rotation().col(0).z(), 0.0, 1e-12);  // no roll
  }
}

TEST(WalkSpline, LeavingTheFieldIsAnError) {
  SplinePath s;
  s.control_points = {{5, 5}, {50, 5}};
  try {
    walk_spline(flat_field(), s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::out_of_range);
  }
  s.control_points = {{5, 5}};
  EXPECT_THROW(walk_spline(flat_field(), s), Error);
}

TEST(RenderView, LookingDownGivesUniformDepth) {
  const auto field = flat_field();
  Mat3 down;
  down.col(0) = Vec3(1, 0, 0);
  down.col(1) = Vec3(0, -1, 0);
  down.col(2) = Vec3(0, 0, -1);
  const Pose cam(down, Vec3(20, 20, 1.5), 0.0);
  const CameraIntrinsics k{40, 40, 16, 12, 32, 24};
  const auto view = render_view(field, cam, k);
  for (float d : view.depth.data()) EXPECT_NEAR(d, 1.5, 1e-6);
  for (auto g : view.ground_truth.data()) EXPECT_EQ(g, static_cast<std::uint8_t>(GroundTruth::traversable));
}

TEST(RenderView, ObstacleOccludesTerrainBehindIt) {
  auto field = flat_field();
  // A rock cell straight ahead of a camera at (10, 20.5) looking along +x.
  field.classes(20, 15) = 1;
  const Pose cam(level_camera_rotation(0.0), Vec3(10, 20.5, 1.0), 0.0);
  const CameraIntrinsics k{60, 60, 30, 20, 61, 41};
  const auto view = render_view(field, cam, k);
  // The centre column at the horizon row hits the rock face at x = 15: depth 5.
  EXPECT_EQ(view.class_ids(20, 30), 1);
  EXPECT_NEAR(view.depth(20, 30), 5.0, 1e-4);
  EXPECT_EQ(view.ground_truth(20, 30), static_cast<std::uint8_t>(GroundTruth::non_traversable));
  // Far to the side the same row sees sky or distant ground, well beyond the rock.
  EXPECT_TRUE(view.depth(20, 0) == 0.0f || view.depth(20, 0) > 6.0f);
  // Depth discontinuity along the horizon row at the rock silhouette.
  float jump = 0.0f;
  for (std::size_t c = 1; c < 61; ++c) {
    const float a = view.depth(20, c - 1), b = view.depth(20, c);
    if (a > 0 && b > 0) jump = std::max(jump, std::abs(a - b));
    else if ((a > 0) != (b > 0)) jump = std::max(jump, 100.0f);
  }
  EXPECT_GT(jump, 1.0f);
}

TEST(RenderView, GroundTruthFollowsClassTable) {
  auto field = flat_field();
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> cls(0, 1);
  for (auto& c : field.classes.data()) c = cls(rng);
  SplinePath s;
  s.control_points = {{5, 5}, {30, 30}};
  const auto poses = walk_spline(field, s);
  const CameraIntrinsics k{30, 30, 20, 15, 40, 30};
  const auto view = render_view(field, poses[3], k);
  bool saw_sky = false;
  for (std::size_t i = 0; i < view.class_ids.pixels(); ++i) {
    const auto id = view.class_ids.data()[i];
    EXPECT_EQ(view.ground_truth.data()[i], static_cast<std::uint8_t>(field.class_table[id].label));
    if (id == field.sky_class) {
      saw_sky = true;
      EXPECT_EQ(view.depth.data()[i], 0.0f);
    }
  }
  EXPECT_TRUE(saw_sky);
}

TEST(RenderView, DepthsUnprojectOntoTheSurface) {
  const auto field = make_field(40, 40, [](double x, double y) { return 0.05 * x + 0.3 * std::sin(0.4 * y); });
  SplinePath s;
  s.control_points = {{5, 20}, {35, 22}};
  const auto poses = walk_spline(field, s);
  const CameraIntrinsics k{40, 40, 24, 16, 48, 32};
  const Pose& cam = poses[2];
  const auto view = render_view(field, cam, k);
  std::size_t checked = 0;
  for (std::size_t r = 0; r < 32; ++r) {
    for (std::size_t c = 0; c < 48; ++c) {
      const float d = view.depth(r, c);
      if (d <= 0.0f) continue;
      const Vec3 local = unproject({double(c), double(r)}, d, k);
      const Vec3 world = device_to_world(cam, local);
      EXPECT_NEAR(world.z(), field.surface_height(world.x(), world.y()), 1e-3);
      // And the point projects back to its own pixel.
      const auto back = project_to_pixel(local, k);
      EXPECT_NEAR(back.pixel.u, double(c), 1e-6);
      EXPECT_NEAR(back.pixel.v, double(r), 1e-6);
      ++checked;
    }
  }
  EXPECT_GT(checked, 500u);
}

TEST(RenderView, Deterministic) {
  const auto field = flat_field();
  const Pose cam(level_camera_rotation(0.7), Vec3(10, 10, 1.5), 0.0);
  const CameraIntrinsics k{30, 30, 20, 15, 40, 30};
  const auto a = render_view(field, cam, k), b = render_view(field, cam, k);
  EXPECT_EQ(a.depth, b.depth);
  EXPECT_EQ(a.rgb, b.rgb);
}

TEST(SynthFeatures, ZeroNoiseGivesClassMeans) {
  const auto model = random_class_features(3, 8, 0.0, 4);
  Grid<std::int32_t> classes(5, 6);
  for (std::size_t i = 0; i < classes.pixels(); ++i) classes.data()[i] = static_cast<std::int32_t>(i % 3);
  const auto g = synth_features(classes, model, 1);
  for (std::size_t i = 0; i < classes.pixels(); ++i) {
    const auto px = g.pixel(i / 6, i % 6);
    EXPECT_EQ(FeatureVector(px.begin(), px.end()), model.means[i % 3]);
  }
}

TEST(SynthFeatures, DeterministicPerSeed) {
  const auto model = random_class_features(2, 16, 0.1, 4);
  Grid<std::int32_t> classes(10, 10);
  const auto a = synth_features(classes, model, 7), b = synth_features(classes, model, 7);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, synth_features(classes, model, 8));
}

TEST(SynthFeatures, EmpiricalMeansWithinThreeSigma) {
  const double sigma = 0.1;
  const auto model = random_class_features(2, 16, sigma, 9);
  Grid<std::int32_t> classes(50, 50);
  for (std::size_t r = 0; r < 50; ++r) {
    for (std::size_t c = 0; c < 50; ++c) classes(r, c) = c < 20 ? 0 : 1;
  }
  const auto g = synth_features(classes, model, 10);
  for (std::int32_t cls = 0; cls < 2; ++cls) {
    std::vector<double> sum(16, 0.0);
    std::size_t count = 0;
    for (std::size_t p = 0; p < classes.pixels(); ++p) {
      if (classes.data()[p] != cls) continue;
      ++count;
      for (std::size_t k = 0; k < 16; ++k) sum[k] += g.data()[p * 16 + k];
    }
    const double tol = 3.0 * sigma / std::sqrt(double(count));
    for (std::size_t k = 0; k < 16; ++k) EXPECT_NEAR(sum[k] / count, model.means[cls][k], tol);
  }
}

TEST(SynthFeatures, UnknownClassIsAnError) {
  const auto model = random_class_features(2, 4, 0.1, 1);
  Grid<std::int32_t> classes(2, 2);
  classes(1, 1) = 5;
  try {
    synth_features(classes, model, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::out_of_range);
  }
}

TEST(ClassFeatureModel, SeparationAndValidation) {
  ClassFeatureModel m;
  m.means = {{0, 0, 0}, {0.5f, -1.5f, 0.2f}, {2, 0, 0}};
  m.noise = {0.1, 0.1, 0.1};
  EXPECT_DOUBLE_EQ(m.min_separation(), 1.5);
  m.means[2] = m.means[0];
  EXPECT_THROW(m.validate(), Error);
  m.means[2] = {1, 1, 1};
  m.noise[1] = -1;
  EXPECT_THROW(m.validate(), Error);
}

TEST(SceneFile, ParsesAndResolvesRelativePaths) {
  test::TempDir dir;
  {
    std::ofstream h(dir / "h.csv");
    h << "# corners\n0,0,0\n0,0.5,0\n0,0,1\n";
    std::ofstream c(dir / "c.csv");
    c << "0,1\n1,0\n";
    std::ofstream s(dir / "scene.txt");
    s << "# demo\nheightfield = h.csv\nclasses = c.csv\ncell_size = 2\norigin = -1, -2\n"
         "class.0 = path, traversable, 180 160 120, 0\nclass.1 = rock, non_traversable, 90 90 90, 0.8\n"
         "class.2 = sky, unlabeled, 150 200 255, 0\nsky_class = 2\nspline = 0, 0; 2, 1; 2.5, 1.5\n"
         "spacing = 0.5\nimage_width = 64\nimage_height = 48\nfx = 40\n"
         "feature_height = 8\nfeature_width = 8\nfeature_dim = 12\nfeature_seed = 3\nframe_stride = 2\n";
  }
  const auto scene = load_scene(dir / "scene.txt");
  EXPECT_EQ(scene.field.rows(), 2u);
  EXPECT_EQ(scene.field.cols(), 2u);
  EXPECT_EQ(scene.field.elevation(1, 1), 0.5);
  EXPECT_EQ(scene.field.origin_y, -2.0);
  ASSERT_EQ(scene.field.class_table.size(), 3u);
  EXPECT_EQ(scene.field.class_table[1].name, "rock");
  EXPECT_EQ(scene.field.class_table[1].label, GroundTruth::non_traversable);
  EXPECT_EQ(scene.field.class_table[1].extrude, 0.8);
  EXPECT_EQ(scene.field.class_table[0].color, (std::array<std::uint8_t, 3>{180, 160, 120}));
  EXPECT_EQ(scene.spline.control_points.size(), 3u);
  EXPECT_EQ(scene.spline.spacing, 0.5);
  EXPECT_EQ(scene.intrinsics.fy, 40.0);
  EXPECT_EQ(scene.intrinsics.cx, 32.0);
  EXPECT_EQ(scene.feature_dim, 12u);
  EXPECT_EQ(scene.frame_stride, 2u);
  EXPECT_EQ(scene.eval_every, 4u);
}

TEST(SceneFile, ReportsMissingKeysAndBadValues) {
  test::TempDir dir;
  {
    std::ofstream h(dir / "h.csv");
    h << "0,0\n0,0\n";
    std::ofstream c(dir / "c.csv");
    c << "0\n";
    std::ofstream s(dir / "scene.txt");
    s << "heightfield = h.csv\nclasses = c.csv\ncell_size = abc\n";
  }
  try {
    load_scene(dir / "scene.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
    EXPECT_NE(std::string(e.what()).find("cell_size"), std::string::npos);
  }
  EXPECT_THROW(load_scene(dir / "missing.txt"), Error);
}
