#include <gtest/gtest.h>

#include <sys/wait.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "travmap/pipeline.hpp"
#include "test_util.hpp"

using namespace travmap;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return out;
}

struct Run {
  int exit_code;
  std::string out;
  std::string err;
};

Run cli(const std::string& args, const test::TempDir& dir) {
  const std::string out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + TRAVMAP_CLI + "\" " + args + " >\"" + out + "\" 2>\"" + err + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

/// 20 m x 20 m field: a path strip along y = 10, a rock and a tree beside it.
void write_tiny_scene(const test::TempDir& dir) {
  std::ofstream h(dir / "h.csv"), c(dir / "c.csv"), s(dir / "scene.txt");
  for (int r = 0; r <= 20; ++r) {
    for (int col = 0; col <= 20; ++col) h << (col ? "," : "") << 0.05 * std::sin(col * 0.7) * std::cos(r * 0.5);
    h << '\n';
  }
  for (int r = 0; r < 20; ++r) {
    for (int col = 0; col < 20; ++col) {
      int cls = 1;
      if (r >= 9 && r <= 10) cls = 0;
      if ((r == 13 || r == 14) && (col == 8 || col == 9)) cls = 2;
      if (r == 6 && col == 12) cls = 3;
      c << (col ? "," : "") << cls;
    }
    c << '\n';
  }
  s << "heightfield = h.csv\nclasses = c.csv\ncell_size = 1\n"
       "class.0 = path, traversable, 170 140 100, 0\nclass.1 = grass, traversable, 90 150 60, 0\n"
       "class.2 = rock, non_traversable, 120 120 125, 0.8\nclass.3 = tree, non_traversable, 40 80 35, 4\n"
       "class.4 = sky, unlabeled, 150 190 240, 0\nsky_class = 4\n"
       "spline = 2, 10; 6, 10; 10, 10.3; 14, 10\nimage_width = 96\nimage_height = 72\nfx = 48\n"
       "feature_height = 12\nfeature_width = 12\nfeature_dim = 16\nfeature_seed = 2\nframe_stride = 6\n"
       "eval_every = 3\nmax_distance = 30\n";
}

/// synth + every downstream subcommand, outputs under `out`.
void run_pipeline(const test::TempDir& dir, const std::string& data, const std::string& out) {
  const std::string d = dir / data, o = dir / out;
  const std::vector<std::string> steps = {
      "project --trajectory " + d + "/trajectory.txt --intrinsics " + d + "/intrinsics.txt --frames " + d +
          "/frames.txt --out " + o + "/paths",
      "--superpixels 40 segment --frames " + d + "/frames.txt --images " + d + "/images --out " + o + "/masks",
      "extract --frames " + d + "/frames.txt --features " + d + "/features --masks " + o + "/masks --paths " + o +
          "/paths --out " + o + "/vectors.bin",
      "--seed 4 train --vectors " + o + "/vectors.bin --model " + o + "/model.bin --loss-csv " + o +
          "/loss.csv --epochs 20 --batch-size 16 --layers 16,8,4,8,16",
      "infer --model " + o + "/model.bin --frames " + d + "/frames.txt --features " + d + "/features --masks " + o +
          "/masks --out " + o + "/costs",
      "evaluate --frames " + d + "/frames.txt --costs " + o + "/costs --gt " + d + "/gt --report " + o + "/report.csv",
      "export-cloud --cost " + o + "/costs/frame_0000.segment.bin --depth " + d + "/depth/frame_0000.bin --intrinsics " +
          d + "/intrinsics.txt --out " + o + "/cloud.ply",
  };
  for (const auto& step : steps) {
    const auto r = cli(step, dir);
    ASSERT_EQ(r.exit_code, 0) << step << "\n" << r.err;
  }
}

class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new test::TempDir;
    write_tiny_scene(*dir_);
    const auto r = cli("synth --scene " + (*dir_ / "scene.txt") + " --out " + (*dir_ / "data"), *dir_);
    ASSERT_EQ(r.exit_code, 0) << r.err;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static test::TempDir* dir_;
};
test::TempDir* CliPipeline::dir_ = nullptr;

}  // namespace

TEST(Defaults, MatchPublishedConstants) {
  EXPECT_EQ(defaults::superpixels, 400);
  EXPECT_EQ(defaults::compactness, 15.0);
  EXPECT_EQ(defaults::horizon_poses, 40);
  EXPECT_EQ(defaults::loss_cap, 10.0);
  EXPECT_EQ(defaults::threshold, 0.35);
  EXPECT_EQ(defaults::min_range, 2.0);
  EXPECT_EQ(defaults::feature_dim, 384u);
  EXPECT_EQ(defaults::grid_height, 50u);
  EXPECT_EQ(defaults::grid_width, 50u);
  EXPECT_EQ(SlicParams{}.num_superpixels, 400);
  EXPECT_EQ(SlicParams{}.compactness, 15.0);
  EXPECT_EQ(RigConfig{}.horizon_poses, 40);
  EXPECT_EQ(default_layer_sizes().front(), 384u);
  EXPECT_EQ(default_layer_sizes().back(), 384u);
}

TEST(FrameList, RoundTripAndErrors) {
  test::TempDir dir;
  const std::vector<pipeline::Frame> frames{{0.1, "a"}, {1.0 / 3.0, "b"}};
  pipeline::write_frames(frames, dir / "f.txt");
  const auto back = pipeline::read_frames(dir / "f.txt");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].timestamp, 1.0 / 3.0);
  EXPECT_EQ(back[1].name, "b");
  {
    std::ofstream(dir / "bad.txt") << "# only a comment\n";
  }
  try {
    pipeline::read_frames(dir / "bad.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_input);
  }
  {
    std::ofstream(dir / "bad2.txt") << "x y\n";
  }
  EXPECT_THROW(pipeline::read_frames(dir / "bad2.txt"), Error);
}

TEST(PathPixels, RoundTripExact) {
  test::TempDir dir;
  const std::vector<PixelCoord> path{{1.0 / 3.0, 2.5}, {-0.1, 1e-9}};
  pipeline::write_path_pixels(path, dir / "p.txt");
  const auto back = pipeline::read_path_pixels(dir / "p.txt");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].u, path[0].u);
  EXPECT_EQ(back[1].v, path[1].v);
}

TEST(ParallelFor, CoversEveryIndexOnceAndRethrowsLowestFailure) {
  for (unsigned threads : {1u, 3u, 16u}) {
    std::vector<std::atomic<int>> hits(50);
    pipeline::detail::parallel_for(50, threads, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
    try {
      pipeline::detail::parallel_for(20, threads, [](std::size_t i) {
        if (i == 7 || i == 13) throw Error(ErrorCode::io, "item " + std::to_string(i));
      });
      FAIL();
    } catch (const Error& e) {
      EXPECT_STREQ(e.what(), "item 7");
    }
  }
}

TEST_F(CliPipeline, FullRunIsIdempotentAndLeavesInputsAlone) {
  const auto before = snapshot(dir_->path() / "data");
  run_pipeline(*dir_, "data", "run1");
  run_pipeline(*dir_, "data", "run2");
  EXPECT_EQ(snapshot(dir_->path() / "data"), before);
  const auto a = snapshot(dir_->path() / "run1"), b = snapshot(dir_->path() / "run2");
  EXPECT_GE(a.size(), 10u);
  EXPECT_EQ(a, b);
}

TEST_F(CliPipeline, SynthIsReproducible) {
  const auto r = cli("synth --scene " + (*dir_ / "scene.txt") + " --out " + (*dir_ / "data_again"), *dir_);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(snapshot(dir_->path() / "data"), snapshot(dir_->path() / "data_again"));
  fs::remove_all(dir_->path() / "data_again");
}

TEST_F(CliPipeline, SeedFlagChangesSynthFeatures) {
  const auto r = cli("--seed 99 synth --scene " + (*dir_ / "scene.txt") + " --out " + (*dir_ / "data_seed"), *dir_);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(slurp(dir_->path() / "data/features/frame_0000.bin"),
            slurp(dir_->path() / "data_seed/features/frame_0000.bin"));
  EXPECT_EQ(slurp(dir_->path() / "data/gt/frame_0000.png"), slurp(dir_->path() / "data_seed/gt/frame_0000.png"));
  fs::remove_all(dir_->path() / "data_seed");
}

TEST_F(CliPipeline, ThreadCountDoesNotChangeOutputs) {
  const std::string d = *dir_ / "data";
  for (const char* t : {"1", "4"}) {
    const auto r = cli(std::string("--threads ") + t + " --superpixels 40 segment --frames " + d +
                           "/frames.txt --images " + d + "/images --out " + (*dir_ / ("masks_t" + std::string(t))),
                       *dir_);
    ASSERT_EQ(r.exit_code, 0) << r.err;
  }
  EXPECT_EQ(snapshot(dir_->path() / "masks_t1"), snapshot(dir_->path() / "masks_t4"));
}

TEST_F(CliPipeline, InferWithMismatchedDimsFailsWithDimensionCode) {
  run_pipeline(*dir_, "data", "run_dim");
  const std::string d = *dir_ / "data", o = *dir_ / "run_dim";
  // Depth grids are 1-channel feature files: wrong dimension for a 16-d model.
  const auto r = cli("infer --model " + o + "/model.bin --frames " + d + "/frames.txt --features " + d +
                         "/depth --masks " + o + "/masks --out " + o + "/bad",
                     *dir_);
  EXPECT_EQ(r.exit_code, static_cast<int>(ErrorCode::dimension));
  EXPECT_EQ(r.err.rfind("error: code=dimension exit=9 message=\"", 0), 0u) << r.err;
}

TEST_F(CliPipeline, SingleThresholdReportHasExactlyThatRow) {
  run_pipeline(*dir_, "data", "run_one");
  const std::string d = *dir_ / "data", o = *dir_ / "run_one";
  const auto r = cli("--threshold 0.27 evaluate --frames " + d + "/frames.txt --costs " + o + "/costs --gt " + d +
                         "/gt --report " + o + "/one.csv",
                     *dir_);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  std::istringstream csv(slurp(o + "/one.csv"));
  std::vector<std::string> lines;
  for (std::string l; std::getline(csv, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], "threshold,accuracy,tp,tn,fp,fn");
  EXPECT_EQ(lines[1].rfind("0.27,", 0), 0u);
  EXPECT_NE(r.out.find("threshold=0.27"), std::string::npos);
}

TEST_F(CliPipeline, ConfigFileIsOverriddenByFlags) {
  run_pipeline(*dir_, "data", "run_cfg");
  const std::string d = *dir_ / "data", o = *dir_ / "run_cfg";
  {
    std::ofstream(o + "/cfg.toml") << "threshold = 0.5\n";
  }
  const std::string eval = " evaluate --frames " + d + "/frames.txt --costs " + o + "/costs --gt " + d + "/gt";
  EXPECT_NE(cli("--config " + o + "/cfg.toml" + eval, *dir_).out.find("threshold=0.5\n"), std::string::npos);
  EXPECT_NE(cli("--config " + o + "/cfg.toml --threshold 0.25" + eval, *dir_).out.find("threshold=0.25\n"),
            std::string::npos);
  const auto missing = cli("--config " + o + "/nope.toml" + eval, *dir_);
  EXPECT_EQ(missing.exit_code, static_cast<int>(ErrorCode::io));
}

TEST_F(CliPipeline, ErrorsMapToDocumentedExitCodes) {
  EXPECT_EQ(cli("", *dir_).exit_code, 2);
  EXPECT_EQ(cli("train --vectors x", *dir_).exit_code, 2);
  EXPECT_EQ(cli("--threshold 2 evaluate --frames a --costs b --gt c", *dir_).exit_code, 2);
  const auto missing = cli("extract --frames " + (*dir_ / "none.txt") + " --features a --masks b --paths c --out d",
                           *dir_);
  EXPECT_EQ(missing.exit_code, static_cast<int>(ErrorCode::io));
  EXPECT_NE(missing.err.find("code=io"), std::string::npos);
  const auto help = cli("--help", *dir_);
  EXPECT_EQ(help.exit_code, 0);
  for (const char* code : {"invalid_argument", "io", "bad_magic", "truncated", "non_finite", "version", "shape",
                           "dimension", "out_of_range", "empty_input", "numeric"}) {
    EXPECT_NE(help.out.find(code), std::string::npos) << code;
  }
}

TEST_F(CliPipeline, SegmentMeansRecoverTheirClass) {
  // Mean features of full-resolution segments, labelled by the majority
  // class under them, sit nearest their own class mean.
  const auto scene = synth::load_scene(*dir_ / "scene.txt");
  const auto model = synth::random_class_features(scene.field.class_table.size(), scene.feature_dim,
                                                  scene.feature_noise, scene.feature_seed);
  const auto frames = pipeline::read_frames(*dir_ / "data/frames.txt");
  const auto poses = synth::walk_spline(scene.field, scene.spline);
  std::size_t total = 0, correct = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto grid = read_feature_grid(*dir_ / ("data/features/" + frames[i].name + ".bin"));
    const auto view = synth::render_view(scene.field, poses[i * scene.frame_stride], scene.intrinsics, scene.render);
    const auto cells = resize_nearest(view.class_ids, grid.height(), grid.width());
    const auto mask = downscale_mask(slic_segment(read_rgb(*dir_ / ("data/images/" + frames[i].name + ".png")),
                                                  SlicParams{40, 15.0, 10, 0}),
                                     grid.height(), grid.width());
    const auto means = segment_means(grid, mask);
    for (std::int32_t id = 0; id < static_cast<std::int32_t>(means.counts.size()); ++id) {
      if (means.counts[id] == 0) continue;
      const auto& mean = means.means[id];
      std::map<std::int32_t, int> votes;
      for (std::size_t p = 0; p < cells.pixels(); ++p) {
        if (mask.labels.data()[p] == id) ++votes[cells.data()[p]];
      }
      const auto majority =
          std::max_element(votes.begin(), votes.end(), [](auto& a, auto& b) { return a.second < b.second; })->first;
      std::size_t best = 0;
      double best_d = 1e300;
      for (std::size_t c = 0; c < model.means.size(); ++c) {
        double d = 0;
        for (std::size_t k = 0; k < mean.size(); ++k) d += std::pow(mean[k] - model.means[c][k], 2);
        if (d < best_d) best_d = d, best = c;
      }
      ++total;
      correct += static_cast<std::int32_t>(best) == majority;
    }
  }
  ASSERT_GT(total, 50u);
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(total), 0.95);
}
