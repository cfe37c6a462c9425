#pragma once

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "travmap/autoencoder.hpp"
#include "travmap/cloudexport.hpp"
#include "travmap/costmap.hpp"
#include "travmap/defaults.hpp"
#include "travmap/error.hpp"
#include "travmap/features.hpp"
#include "travmap/geometry.hpp"
#include "travmap/image_io.hpp"
#include "travmap/superpixel.hpp"
#include "travmap/synthgen.hpp"

namespace travmap::pipeline {

namespace fs = std::filesystem;

/// One line of a frame list: `timestamp name`.
struct Frame {
  double timestamp = 0.0;
  std::string name;
};

inline std::vector<Frame> read_frames(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io, "cannot open frame list " + path);
  std::vector<Frame> frames;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = travmap::detail::strip_comment(line);
    if (travmap::detail::blank(line)) continue;
    std::istringstream ss(line);
    Frame f;
    require(static_cast<bool>(ss >> f.timestamp >> f.name), ErrorCode::invalid_argument,
            path + ":" + std::to_string(lineno) + ": expected 'timestamp name'");
    frames.push_back(std::move(f));
  }
  require(!frames.empty(), ErrorCode::empty_input, path + ": no frames listed");
  return frames;
}

inline void write_frames(const std::vector<Frame>& frames, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::io, "cannot write " + path);
  out << std::setprecision(17);
  for (const auto& f : frames) out << f.timestamp << ' ' << f.name << '\n';
  require(out.good(), ErrorCode::io, "failed writing " + path);
}

/// `u v` per line, in trajectory order.
inline void write_path_pixels(const std::vector<PixelCoord>& path, const std::string& file) {
  std::ofstream out(file);
  require(out.good(), ErrorCode::io, "cannot write " + file);
  out << std::setprecision(17);
  for (const auto& p : path) out << p.u << ' ' << p.v << '\n';
  require(out.good(), ErrorCode::io, "failed writing " + file);
}

inline std::vector<PixelCoord> read_path_pixels(const std::string& file) {
  std::ifstream in(file);
  require(in.good(), ErrorCode::io, "cannot open " + file);
  std::vector<PixelCoord> path;
  std::string line;
  while (std::getline(in, line)) {
    if (travmap::detail::blank(line)) continue;
    std::istringstream ss(line);
    PixelCoord p;
    require(static_cast<bool>(ss >> p.u >> p.v) && std::isfinite(p.u) && std::isfinite(p.v),
            ErrorCode::invalid_argument, file + ": expected 'u v' lines");
    path.push_back(p);
  }
  return path;
}

inline std::string join(const std::string& dir, const std::string& file) { return (fs::path(dir) / file).string(); }

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::io, "cannot create directory " + dir + ": " + ec.message());
}

namespace detail {

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Work items must
/// write disjoint outputs; the first failure (lowest index) is rethrown.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::vector<std::exception_ptr> errors(n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < n; i += workers) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// project

struct ProjectOptions {
  RigConfig rig;
  double tolerance = defaults::pose_match_tolerance;
};

struct ProjectStats {
  std::size_t frames = 0;
  std::size_t skipped = 0;  // no trajectory pose within tolerance
  std::size_t points = 0;
};

/// Writes `<name>.path.txt` for every frame matched to a trajectory pose.
inline ProjectStats run_project(const std::string& trajectory_path, const std::string& intrinsics_path,
                                const std::string& frames_path, const std::string& out_dir,
                                const ProjectOptions& options) {
  options.rig.validate();
  const auto trajectory = load_tum(trajectory_path);
  const auto k = load_intrinsics(intrinsics_path);
  const auto frames = read_frames(frames_path);
  ensure_dir(out_dir);
  ProjectStats stats;
  for (const auto& f : frames) {
    const auto idx = associate_frame(trajectory, f.timestamp, options.tolerance);
    if (!idx) {
      ++stats.skipped;
      continue;
    }
    const auto path = project_future_path(trajectory, *idx, k, options.rig);
    write_path_pixels(path, join(out_dir, f.name + ".path.txt"));
    ++stats.frames;
    stats.points += path.size();
  }
  return stats;
}

// ---------------------------------------------------------------------------
// segment

struct SegmentOptions {
  SlicParams slic;
  std::size_t grid_height = defaults::grid_height;
  std::size_t grid_width = defaults::grid_width;
  unsigned threads = 1;
};

/// `<name>.mask.png` at image resolution and `<name>.grid.png` at grid resolution.
inline std::size_t run_segment(const std::string& frames_path, const std::string& images_dir,
                               const std::string& out_dir, const SegmentOptions& options) {
  options.slic.validate();
  const auto frames = read_frames(frames_path);
  ensure_dir(out_dir);
  detail::parallel_for(frames.size(), options.threads, [&](std::size_t i) {
    const auto image = read_rgb(join(images_dir, frames[i].name + ".png"));
    const auto mask = slic_segment(image, options.slic);
    write_mask(mask, join(out_dir, frames[i].name + ".mask.png"));
    write_mask(downscale_mask(mask, options.grid_height, options.grid_width),
               join(out_dir, frames[i].name + ".grid.png"));
  });
  return frames.size();
}

// ---------------------------------------------------------------------------
// extract

struct ExtractStats {
  std::size_t frames = 0;
  std::size_t frames_without_path = 0;
  std::size_t traversed = 0;
  std::size_t vanished = 0;  // traversed segments with no cell left on the feature grid
  std::size_t vectors = 0;
};

/// Mean feature of every traversed segment of every frame, stacked into one
/// N x 1 x D grid file.
inline ExtractStats run_extract(const std::string& frames_path, const std::string& features_dir,
                                const std::string& masks_dir, const std::string& paths_dir,
                                const std::string& out_vectors) {
  const auto frames = read_frames(frames_path);
  ExtractStats stats;
  std::vector<FeatureVector> all;
  for (const auto& f : frames) {
    const std::string path_file = join(paths_dir, f.name + ".path.txt");
    if (!fs::exists(path_file)) {
      ++stats.frames_without_path;
      continue;
    }
    const auto grid = read_feature_grid(join(features_dir, f.name + ".bin"));
    const auto mask = read_mask(join(masks_dir, f.name + ".mask.png"));
    const auto pf = masked_path_features(grid, mask, read_path_pixels(path_file));
    ++stats.frames;
    stats.traversed += pf.traversed;
    stats.vanished += pf.vanished;
    for (const auto& v : pf.vectors) all.push_back(v);
  }
  require(!all.empty(), ErrorCode::empty_input, "no traversed segments found; nothing to train on");
  stats.vectors = all.size();
  write_feature_grid(stack_vectors(all), out_vectors);
  return stats;
}

// ---------------------------------------------------------------------------
// train

inline TrainResult run_train(const std::string& vectors_path, const std::string& model_out,
                             const std::string& loss_csv, const TrainConfig& config) {
  const auto vectors = unstack_vectors(read_feature_grid(vectors_path));
  auto result = train(vectors, config);
  save_model(result.model, model_out);
  if (!loss_csv.empty()) {
    std::ofstream out(loss_csv);
    require(out.good(), ErrorCode::io, "cannot write " + loss_csv);
    out << (result.validation_loss.empty() ? "epoch,train_loss\n" : "epoch,train_loss,validation_loss\n");
    out << std::setprecision(9);
    for (std::size_t e = 0; e < result.train_loss.size(); ++e) {
      out << e + 1 << ',' << result.train_loss[e];
      if (!result.validation_loss.empty()) out << ',' << result.validation_loss[e];
      out << '\n';
    }
    require(out.good(), ErrorCode::io, "failed writing " + loss_csv);
  }
  return result;
}

// ---------------------------------------------------------------------------
// infer

struct InferOptions {
  double cap = defaults::loss_cap;
  unsigned threads = 1;
};

/// Per frame: `<name>.pixel.bin/.png` at grid resolution, and
/// `<name>.segment.bin/.png` painted over the image-resolution mask.
inline std::size_t run_infer(const std::string& model_path, const std::string& frames_path,
                             const std::string& features_dir, const std::string& masks_dir,
                             const std::string& out_dir, const InferOptions& options) {
  const auto model = load_model(model_path);
  const auto frames = read_frames(frames_path);
  ensure_dir(out_dir);
  detail::parallel_for(frames.size(), options.threads, [&](std::size_t i) {
    const auto& name = frames[i].name;
    const auto grid = read_feature_grid(join(features_dir, name + ".bin"));
    require(grid.channels() == model.input_dim(), ErrorCode::dimension,
            name + ": feature dim " + std::to_string(grid.channels()) + " does not match model input " +
                std::to_string(model.input_dim()));
    const auto full = read_mask(join(masks_dir, name + ".mask.png"));
    const auto small = downscale_mask(full, grid.height(), grid.width());
    const auto pixel = infer_cost_image(model, grid, small, CostMode::pixel, options.cap);
    const auto costs = segment_costs(model, grid, small, options.cap);
    const auto segment = paint_segment_costs(full, costs, pixel);
    write_cost_map(pixel, join(out_dir, name + ".pixel.bin"));
    write_cost_png(pixel, join(out_dir, name + ".pixel.png"));
    write_cost_map(segment, join(out_dir, name + ".segment.bin"));
    write_cost_png(segment, join(out_dir, name + ".segment.png"));
  });
  return frames.size();
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOptions {
  CostMode mode = CostMode::segment;
  std::optional<double> threshold;  // fixed threshold; sweep when unset
  std::vector<double> candidates = default_threshold_grid();
};

struct EvaluateReport {
  std::vector<std::pair<double, Accuracy>> rows;
  double best_threshold = 0.0;
  Accuracy best;
};

/// Pooled pixel accuracy over all frames, either at one threshold or swept.
/// Cost maps are resampled (nearest) to the ground-truth resolution.
inline EvaluateReport run_evaluate(const std::string& frames_path, const std::string& costs_dir,
                                   const std::string& gt_dir, const std::string& report_csv,
                                   const EvaluateOptions& options) {
  const auto frames = read_frames(frames_path);
  std::vector<CostMap> costs;
  std::vector<GroundTruthMask> gts;
  for (const auto& f : frames) {
    auto gt = read_ground_truth(join(gt_dir, f.name + ".png"));
    auto cost = read_cost_map(join(costs_dir, f.name + "." + to_string(options.mode) + ".bin"), options.mode);
    costs.push_back(match_resolution(cost, gt.height(), gt.width()));
    gts.push_back(std::move(gt));
  }
  const std::vector<double> candidates =
      options.threshold ? std::vector<double>{*options.threshold} : options.candidates;
  const auto sweep = tune_threshold(costs, gts, candidates);
  EvaluateReport report{sweep.curve, sweep.best_threshold, sweep.best};
  if (!report_csv.empty()) {
    std::ofstream out(report_csv);
    require(out.good(), ErrorCode::io, "cannot write " + report_csv);
    out << "threshold,accuracy,tp,tn,fp,fn\n";
    char line[160];
    for (const auto& [t, a] : report.rows) {
      std::snprintf(line, sizeof line, "%.2f,%.6f,%zu,%zu,%zu,%zu\n", t, a.accuracy, a.true_positive, a.true_negative,
                    a.false_positive, a.false_negative);
      out << line;
    }
    require(out.good(), ErrorCode::io, "failed writing " + report_csv);
  }
  return report;
}

// ---------------------------------------------------------------------------
// export-cloud

/// Cost map resampled to the depth resolution, unprojected, range-filtered
/// and written as PLY. Returns the point count.
inline std::size_t run_export_cloud(const std::string& cost_path, const std::string& depth_path,
                                    const std::string& intrinsics_path, const std::string& out_ply, double min_range,
                                    std::optional<CostRemap> remap = std::nullopt) {
  const auto depth = read_depth(depth_path);
  const auto k = load_intrinsics(intrinsics_path);
  require(depth.height() == static_cast<std::size_t>(k.height) && depth.width() == static_cast<std::size_t>(k.width),
          ErrorCode::dimension, "depth image size does not match the intrinsics");
  const auto cost = match_resolution(read_cost_map(cost_path), depth.height(), depth.width());
  const auto cloud = build_cost_cloud(cost, depth, k, min_range);
  write_cloud(cloud, out_ply, remap);
  return cloud.points.size();
}

// ---------------------------------------------------------------------------
// synth

struct SynthStats {
  std::size_t poses = 0;
  std::size_t frames = 0;
  std::size_t train_frames = 0;
  std::size_t eval_frames = 0;
  double min_class_separation = 0.0;
};

/// Renders a scene into the directory layout the other subcommands read:
/// trajectory.txt, intrinsics.txt, frames{,_train,_eval}.txt and per frame
/// images/<name>.png, depth/<name>.bin, gt/<name>.png, features/<name>.bin.
/// A seed, when given, replaces the scene's feature and texture seeds.
inline SynthStats run_synth(const std::string& scene_path, const std::string& out_dir, unsigned threads = 1,
                            std::optional<std::uint64_t> seed = std::nullopt) {
  auto scene = synth::load_scene(scene_path);
  if (seed) {
    scene.feature_seed = *seed;
    scene.render.texture_seed = synth::detail::splitmix(*seed);
  }
  const auto poses = synth::walk_spline(scene.field, scene.spline);
  const auto features = synth::random_class_features(scene.field.class_table.size(), scene.feature_dim,
                                                     scene.feature_noise, scene.feature_seed);
  for (const char* sub : {"images", "depth", "gt", "features"}) ensure_dir(join(out_dir, sub));
  save_tum(poses, join(out_dir, "trajectory.txt"));
  save_intrinsics(scene.intrinsics, join(out_dir, "intrinsics.txt"));

  std::vector<Frame> frames, train_frames, eval_frames;
  std::vector<std::size_t> pose_index;
  for (std::size_t i = 0; i < poses.size(); i += scene.frame_stride) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04zu", frames.size());
    const Frame f{poses[i].timestamp(), name};
    ((frames.size() % scene.eval_every == scene.eval_every - 1) ? eval_frames : train_frames).push_back(f);
    frames.push_back(f);
    pose_index.push_back(i);
  }
  write_frames(frames, join(out_dir, "frames.txt"));
  write_frames(train_frames, join(out_dir, "frames_train.txt"));
  if (!eval_frames.empty()) write_frames(eval_frames, join(out_dir, "frames_eval.txt"));

  detail::parallel_for(frames.size(), threads, [&](std::size_t i) {
    const auto view = synth::render_view(scene.field, poses[pose_index[i]], scene.intrinsics, scene.render);
    const auto& name = frames[i].name;
    write_rgb_png(view.rgb, join(out_dir, "images/" + name + ".png"));
    write_feature_grid(view.depth, join(out_dir, "depth/" + name + ".bin"));
    write_ground_truth(view.ground_truth, join(out_dir, "gt/" + name + ".png"));
    const auto cells = resize_nearest(view.class_ids, scene.feature_height, scene.feature_width);
    const auto grid = synth::synth_features(cells, features, synth::detail::splitmix(scene.feature_seed + i));
    write_feature_grid(grid, join(out_dir, "features/" + name + ".bin"));
  });
  return {poses.size(), frames.size(), train_frames.size(), eval_frames.size(),
          features.means.size() > 1 ? features.min_separation() : 0.0};
}

}  // namespace travmap::pipeline
