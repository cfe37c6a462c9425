// travmap: self-supervised traversability pipeline over files.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "travmap/pipeline.hpp"

using namespace travmap;

namespace {

constexpr const char* kExitCodes = R"(Exit codes:
  0   success
  1   unexpected internal failure
  2   invalid_argument  bad flag, config value or parameter
  3   io                missing or unwritable file/directory
  4   bad_magic         binary file with the wrong magic
  5   truncated         file shorter than its header promises
  6   non_finite        NaN/Inf where finite values are required
  7   version           unsupported file version
  8   shape             grid/mask/image shape mismatch
  9   dimension         feature dimension does not match the model
  10  out_of_range      value outside its allowed range
  11  empty_input       nothing to work on (no frames, no vectors, ...)
  12  numeric           training diverged

Failures print one line to stderr:
  error: code=<name> exit=<n> message="<text>"
)";

int report(std::string_view code, int exit_code, const std::string& message) {
  std::string escaped;
  for (char c : message) {
    if (c == '"' || c == '\\') escaped += '\\';
    escaped += c == '\n' ? ' ' : c;
  }
  std::cerr << "error: code=" << code << " exit=" << exit_code << " message=\"" << escaped << "\"\n";
  return exit_code;
}

struct Globals {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::optional<double> threshold;
  double cap = defaults::loss_cap;
  double min_range = defaults::min_range;
  int horizon = defaults::horizon_poses;
  int superpixels = defaults::superpixels;
  double compactness = defaults::compactness;
};

void print_kv(const std::string& key, const auto& value) { std::cout << key << '=' << value << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-supervised traversability estimation from walked trajectories"};
  app.footer(kExitCodes);
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Flat key = value config file; flags on the command line win");
  app.get_config_ptr()->group("Global");

  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str()->group("Global");
  app.add_option("--threads", g.threads, "Maximum worker threads")
      ->capture_default_str()
      ->check(CLI::PositiveNumber)
      ->group("Global");
  app.add_option("--threshold", g.threshold, "Fixed cost threshold; evaluate sweeps when unset")
      ->check(CLI::Range(0.0, 1.0))
      ->group("Global");
  app.add_option("--cap", g.cap, "Loss cap used to normalise costs")->capture_default_str()->group("Global");
  app.add_option("--min-range", g.min_range, "Minimum point range for cloud export (m)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber)
      ->group("Global");
  app.add_option("--horizon", g.horizon, "Future poses projected per frame")
      ->capture_default_str()
      ->check(CLI::PositiveNumber)
      ->group("Global");
  app.add_option("--superpixels", g.superpixels, "Requested SLIC segment count")
      ->capture_default_str()
      ->check(CLI::PositiveNumber)
      ->group("Global");
  app.add_option("--compactness", g.compactness, "SLIC compactness")->capture_default_str()->group("Global");

  // project
  auto* project = app.add_subcommand("project", "Project the future walked path into each frame");
  std::string trajectory, intrinsics, frames, out;
  pipeline::ProjectOptions project_opts;
  project->add_option("--trajectory", trajectory, "TUM trajectory file")->required();
  project->add_option("--intrinsics", intrinsics, "Camera intrinsics file")->required();
  project->add_option("--frames", frames, "Frame list (timestamp name)")->required();
  project->add_option("--out", out, "Output directory for <name>.path.txt")->required();
  project->add_option("--rig-height", project_opts.rig.height_above_ground, "Camera height above ground (m)")
      ->capture_default_str();
  project->add_option("--tolerance", project_opts.tolerance, "Timestamp association tolerance (s)")
      ->capture_default_str();

  // segment
  auto* segment = app.add_subcommand("segment", "SLIC-segment images into full-size and grid-size masks");
  std::string images;
  pipeline::SegmentOptions segment_opts;
  segment->add_option("--frames", frames, "Frame list")->required();
  segment->add_option("--images", images, "Directory with <name>.png")->required();
  segment->add_option("--out", out, "Output directory for masks")->required();
  segment->add_option("--iterations", segment_opts.slic.max_iterations, "SLIC iterations")->capture_default_str();
  segment->add_option("--grid-height", segment_opts.grid_height, "Feature grid rows")->capture_default_str();
  segment->add_option("--grid-width", segment_opts.grid_width, "Feature grid columns")->capture_default_str();

  // extract
  auto* extract = app.add_subcommand("extract", "Collect mean features of traversed segments");
  std::string features, masks, paths;
  extract->add_option("--frames", frames, "Frame list")->required();
  extract->add_option("--features", features, "Directory with <name>.bin feature grids")->required();
  extract->add_option("--masks", masks, "Directory with <name>.mask.png")->required();
  extract->add_option("--paths", paths, "Directory with <name>.path.txt")->required();
  extract->add_option("--out", out, "Output vectors file")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the autoencoder on traversed-segment vectors");
  std::string vectors, model, loss_csv;
  TrainConfig train_cfg;
  std::string optimizer = "adam";
  train_cmd->add_option("--vectors", vectors, "Vectors file from extract")->required();
  train_cmd->add_option("--model", model, "Output model file")->required();
  train_cmd->add_option("--loss-csv", loss_csv, "Per-epoch loss history CSV");
  train_cmd->add_option("--epochs", train_cfg.epochs)->capture_default_str();
  train_cmd->add_option("--learning-rate", train_cfg.learning_rate)->capture_default_str();
  train_cmd->add_option("--batch-size", train_cfg.batch_size)->capture_default_str();
  train_cmd->add_option("--optimizer", optimizer)->capture_default_str()->check(CLI::IsMember({"adam", "sgd"}));
  train_cmd->add_option("--validation", train_cfg.validation_fraction, "Held-out fraction")->capture_default_str();
  train_cmd->add_flag("--standardize", train_cfg.standardize, "Standardise inputs per dimension");
  train_cmd->add_option("--layers", train_cfg.layer_sizes, "Layer widths, input first")->delimiter(',');

  // infer
  auto* infer = app.add_subcommand("infer", "Write segment and pixel cost maps");
  infer->add_option("--model", model, "Model file")->required();
  infer->add_option("--frames", frames, "Frame list")->required();
  infer->add_option("--features", features, "Directory with <name>.bin feature grids")->required();
  infer->add_option("--masks", masks, "Directory with <name>.mask.png")->required();
  infer->add_option("--out", out, "Output directory for cost maps")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Pixel accuracy against ground-truth masks");
  std::string costs, gt, report_csv, mode = "segment";
  evaluate->add_option("--frames", frames, "Frame list")->required();
  evaluate->add_option("--costs", costs, "Directory with <name>.<mode>.bin")->required();
  evaluate->add_option("--gt", gt, "Directory with <name>.png ground truth")->required();
  evaluate->add_option("--report", report_csv, "Output CSV: threshold,accuracy,tp,tn,fp,fn");
  evaluate->add_option("--mode", mode)->capture_default_str()->check(CLI::IsMember({"segment", "pixel"}));

  // export-cloud
  auto* cloud = app.add_subcommand("export-cloud", "Write a cost-annotated point cloud (PLY)");
  std::string cost_file, depth_file;
  std::optional<double> remap_scale, remap_offset;
  cloud->add_option("--cost", cost_file, "Cost map file")->required();
  cloud->add_option("--depth", depth_file, "Depth image (.png mm or .bin metres)")->required();
  cloud->add_option("--intrinsics", intrinsics, "Camera intrinsics file")->required();
  cloud->add_option("--out", out, "Output PLY")->required();
  cloud->add_option("--remap-scale", remap_scale, "Write cost*scale+offset instead of cost");
  cloud->add_option("--remap-offset", remap_offset, "Offset used with --remap-scale");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Render a synthetic dataset from a scene file");
  std::string scene;
  synth_cmd->add_option("--scene", scene, "Scene description")->required();
  synth_cmd->add_option("--out", out, "Output dataset directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::FileError& e) {
    return report("io", static_cast<int>(ErrorCode::io), e.what());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report("invalid_argument", static_cast<int>(ErrorCode::invalid_argument), e.what());
  }

  try {
    if (*project) {
      project_opts.rig.horizon_poses = g.horizon;
      const auto s = pipeline::run_project(trajectory, intrinsics, frames, out, project_opts);
      print_kv("frames", s.frames);
      print_kv("skipped", s.skipped);
      print_kv("points", s.points);
    } else if (*segment) {
      segment_opts.slic.num_superpixels = g.superpixels;
      segment_opts.slic.compactness = g.compactness;
      segment_opts.slic.seed = g.seed;
      segment_opts.threads = g.threads;
      print_kv("frames", pipeline::run_segment(frames, images, out, segment_opts));
    } else if (*extract) {
      const auto s = pipeline::run_extract(frames, features, masks, paths, out);
      print_kv("frames", s.frames);
      print_kv("frames_without_path", s.frames_without_path);
      print_kv("traversed", s.traversed);
      print_kv("vanished", s.vanished);
      print_kv("vectors", s.vectors);
    } else if (*train_cmd) {
      train_cfg.seed = g.seed;
      train_cfg.optimizer = optimizer == "sgd" ? Optimizer::sgd : Optimizer::adam;
      const auto r = pipeline::run_train(vectors, model, loss_csv, train_cfg);
      print_kv("epochs", r.train_loss.size());
      print_kv("final_train_loss", r.train_loss.back());
      if (!r.validation_loss.empty()) print_kv("final_validation_loss", r.validation_loss.back());
    } else if (*infer) {
      print_kv("frames", pipeline::run_infer(model, frames, features, masks, out, {g.cap, g.threads}));
    } else if (*evaluate) {
      pipeline::EvaluateOptions opts;
      opts.mode = mode == "pixel" ? CostMode::pixel : CostMode::segment;
      opts.threshold = g.threshold;
      const auto r = pipeline::run_evaluate(frames, costs, gt, report_csv, opts);
      print_kv("threshold", r.best_threshold);
      print_kv("accuracy", r.best.accuracy);
    } else if (*cloud) {
      std::optional<CostRemap> remap;
      if (remap_scale || remap_offset) remap = CostRemap{remap_scale.value_or(1.0), remap_offset.value_or(0.0)};
      print_kv("points", pipeline::run_export_cloud(cost_file, depth_file, intrinsics, out, g.min_range, remap));
    } else if (*synth_cmd) {
      std::optional<std::uint64_t> seed;
      if (app.count("--seed") > 0) seed = g.seed;
      const auto s = pipeline::run_synth(scene, out, g.threads, seed);
      print_kv("poses", s.poses);
      print_kv("frames", s.frames);
      print_kv("train_frames", s.train_frames);
      print_kv("eval_frames", s.eval_frames);
      print_kv("min_class_separation", s.min_class_separation);
    }
  } catch (const Error& e) {
    return report(to_string(e.code()), static_cast<int>(e.code()), e.what());
  } catch (const std::exception& e) {
    return report("internal", 1, e.what());
  }
  return 0;
}
