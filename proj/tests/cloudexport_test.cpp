#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "travmap/cloudexport.hpp"
#include "test_util.hpp"

using namespace travmap;

namespace {

CameraIntrinsics small_camera() { return {100.0, 120.0, 4.5, 3.5, 10, 8}; }

CostMap ramp_cost(std::size_t h, std::size_t w) {
  CostMap c{Grid<float>(h, w), CostMode::pixel, defaults::threshold};
  for (std::size_t i = 0; i < c.values.data().size(); ++i) {
    c.values.data()[i] = static_cast<float>(i) / static_cast<float>(h * w);
  }
  return c;
}

float reprint(float v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6e", static_cast<double>(v));
  return std::strtof(buf, nullptr);
}

}  // namespace

TEST(Unproject, HandEvaluated) {
  const auto k = small_camera();
  const Vec3 p = unproject({14.5, 15.5}, 2.0, k);
  EXPECT_DOUBLE_EQ(p.x(), 0.2);
  EXPECT_DOUBLE_EQ(p.y(), 0.2);
  EXPECT_DOUBLE_EQ(p.z(), 2.0);
  EXPECT_THROW(unproject({0, 0}, 0.0, k), Error);
}

TEST(Unproject, InvertsProjection) {
  const auto k = small_camera();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 10), d(0.2, 80);
  for (int i = 0; i < 500; ++i) {
    const PixelCoord px{u(rng), u(rng) * 0.8};
    const Vec3 p = unproject(px, d(rng), k);
    const auto back = project_to_pixel(p, k);
    EXPECT_NEAR(back.pixel.u, px.u, 1e-9);
    EXPECT_NEAR(back.pixel.v, px.v, 1e-9);
  }
}

TEST(CostCloud, SkipsNearAndInvalidDepth) {
  const auto k = small_camera();
  DepthImage depth(8, 10);
  for (auto& d : depth.data()) d = 5.0f;
  depth(0, 0) = 0.0f;
  depth(0, 1) = std::numeric_limits<float>::quiet_NaN();
  depth(0, 2) = -3.0f;
  depth(0, 3) = 1.0f;   // closer than 2 m
  depth(0, 4) = 2.5f;
  const auto cloud = build_cost_cloud(ramp_cost(8, 10), depth, k);
  EXPECT_EQ(cloud.points.size(), 80u - 4u);
  for (const auto& p : cloud.points) {
    EXPECT_GE(std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z), 2.0f);
  }
  // First surviving point is pixel (0, 4): u = 4, v = 0, cost 4/80.
  EXPECT_FLOAT_EQ(cloud.points[0].x, static_cast<float>((4 - 4.5) * 2.5 / 100.0));
  EXPECT_FLOAT_EQ(cloud.points[0].y, static_cast<float>((0 - 3.5) * 2.5 / 120.0));
  EXPECT_FLOAT_EQ(cloud.points[0].cost, 4.0f / 80.0f);
}

TEST(CostCloud, MinimumRangeHoldsForRandomDepths) {
  const auto k = small_camera();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> d(0.0f, 6.0f);
  for (double min_range : {0.0, 1.0, 2.0, 4.5}) {
    DepthImage depth(8, 10);
    for (auto& v : depth.data()) v = d(rng);
    const auto cloud = build_cost_cloud(ramp_cost(8, 10), depth, k, min_range);
    for (const auto& p : cloud.points) {
      const double r = std::sqrt(double(p.x) * p.x + double(p.y) * p.y + double(p.z) * p.z);
      EXPECT_GE(r, min_range - 1e-5);
    }
  }
}

TEST(CostCloud, RejectsShapeMismatch) {
  DepthImage depth(4, 4);
  try {
    build_cost_cloud(ramp_cost(8, 10), depth, small_camera());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::dimension);
  }
}

TEST(PlyFile, ReparsesExactlyAtPrintedPrecision) {
  const auto k = small_camera();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> d(2.0f, 50.0f);
  DepthImage depth(8, 10);
  for (auto& v : depth.data()) v = d(rng);
  const auto cloud = build_cost_cloud(ramp_cost(8, 10), depth, k, 0.0);
  test::TempDir dir;
  write_cloud(cloud, dir / "c.ply");
  const auto back = read_cloud(dir / "c.ply");
  ASSERT_EQ(back.points.size(), cloud.points.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    EXPECT_EQ(back.points[i].x, reprint(cloud.points[i].x));
    EXPECT_EQ(back.points[i].y, reprint(cloud.points[i].y));
    EXPECT_EQ(back.points[i].z, reprint(cloud.points[i].z));
    EXPECT_EQ(back.points[i].cost, reprint(cloud.points[i].cost));
  }
}

TEST(PlyFile, HeaderLayout) {
  CostCloud cloud;
  cloud.points.push_back({1.0f, -2.0f, 3.0f, 0.5f});
  test::TempDir dir;
  write_cloud(cloud, dir / "c.ply");
  std::ifstream in(dir / "c.ply");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(text,
            "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\n"
            "property float cost\nend_header\n1.000000e+00 -2.000000e+00 3.000000e+00 5.000000e-01\n");
}

TEST(PlyFile, RemapAppliesToCostOnly) {
  CostCloud cloud;
  cloud.points.push_back({1.0f, 2.0f, 3.0f, 0.25f});
  test::TempDir dir;
  write_cloud(cloud, dir / "c.ply", CostRemap{2.0, -1.0});
  const auto back = read_cloud(dir / "c.ply");
  EXPECT_EQ(back.points[0], (CostPoint{1.0f, 2.0f, 3.0f, -0.5f}));
}

TEST(PlyFile, TruncatedBodyIsAnError) {
  test::TempDir dir;
  {
    std::ofstream out(dir / "t.ply");
    out << "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nend_header\n1 2 3 4\n";
  }
  try {
    read_cloud(dir / "t.ply");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::truncated);
  }
}

TEST(DepthFiles, MillimetrePngAndGrid) {
  test::TempDir dir;
  Grid<std::uint16_t> mm(1, 3);
  mm.data() = {0, 1500, 65535};
  write_gray16_png(mm, dir / "d.png");
  const auto d = read_depth(dir / "d.png");
  EXPECT_EQ(d.data(), (std::vector<float>{0.0f, 1.5f, 65.535f}));
  write_feature_grid(d, dir / "d.bin");
  EXPECT_EQ(read_depth(dir / "d.bin"), d);
}

TEST(Unproject, SpecExamples) {
  const CameraIntrinsics k{100, 100, 50, 50, 200, 200};
  const Vec3 p = unproject({100, 75}, 1.0, k);
  EXPECT_DOUBLE_EQ(p.x(), 0.5);
  EXPECT_DOUBLE_EQ(p.y(), 0.25);
  EXPECT_DOUBLE_EQ(p.z(), 1.0);
  const Vec3 axis = unproject({50, 50}, 7.0, k);
  EXPECT_EQ(axis, Vec3(0, 0, 7));
}

TEST(CostCloud, SpecExamples) {
  const CameraIntrinsics k{100, 100, 2, 1, 5, 3};
  DepthImage depth(3, 5);
  for (auto& d : depth.data()) d = 1.5f;
  EXPECT_TRUE(build_cost_cloud(ramp_cost(3, 5), depth, k).points.empty());
  for (auto& d : depth.data()) d = 0.0f;
  EXPECT_TRUE(build_cost_cloud(ramp_cost(3, 5), depth, k).points.empty());
  depth(1, 2) = 3.0f;
  const auto cost = ramp_cost(3, 5);
  const auto one = build_cost_cloud(cost, depth, k);
  ASSERT_EQ(one.points.size(), 1u);
  EXPECT_EQ(one.points[0], (CostPoint{0.0f, 0.0f, 3.0f, cost.values(1, 2)}));
}

TEST(PlyFile, EmptyAndThreePointClouds) {
  test::TempDir dir;
  write_cloud(CostCloud{}, dir / "e.ply");
  EXPECT_TRUE(read_cloud(dir / "e.ply").points.empty());
  CostCloud three;
  for (int i = 0; i < 3; ++i) three.points.push_back({float(i), 2.0f, 3.0f, 0.1f * i});
  write_cloud(three, dir / "t.ply");
  std::ifstream in(dir / "t.ply");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  EXPECT_EQ(lines[2], "element vertex 3");
  EXPECT_EQ(lines.size(), 8u + 3u);
}
