#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "travmap/autoencoder.hpp"
#include "travmap/defaults.hpp"
#include "travmap/error.hpp"
#include "travmap/features.hpp"
#include "travmap/grid.hpp"
#include "travmap/image_io.hpp"
#include "travmap/superpixel.hpp"

namespace travmap {

enum class CostMode { segment, pixel };

inline std::string to_string(CostMode m) { return m == CostMode::segment ? "segment" : "pixel"; }

/// Normalised traversability cost, every value in [0, 1].
struct CostMap {
  Grid<float> values;
  CostMode mode = CostMode::pixel;
  double threshold = defaults::threshold;

  std::size_t height() const noexcept { return values.height(); }
  std::size_t width() const noexcept { return values.width(); }
};

enum class GroundTruth : std::uint8_t { unlabeled = 0, traversable = 1, non_traversable = 2 };

using GroundTruthMask = Grid<std::uint8_t>;  // values are GroundTruth
using BinaryMask = Grid<std::uint8_t>;       // 1 = traversable

/// min(loss, cap) / cap.
inline double normalize_cost(double raw_loss, double cap = defaults::loss_cap) {
  require(std::isfinite(cap) && cap > 0.0, ErrorCode::invalid_argument, "cost cap must be positive");
  require(!std::isnan(raw_loss) && raw_loss >= 0.0, ErrorCode::invalid_argument, "reconstruction loss must be >= 0");
  return std::min(raw_loss, cap) / cap;
}

/// Normalised cost of every segment present in `mask`; nullopt for ids
/// without pixels on the grid.
inline std::vector<std::optional<double>> segment_costs(const Mlp& model, const FeatureGrid& grid,
                                                        const SegmentMask& mask, double cap = defaults::loss_cap) {
  require(model.input_dim() == grid.channels(), ErrorCode::dimension,
          "model expects " + std::to_string(model.input_dim()) + "-d features, grid has " +
              std::to_string(grid.channels()));
  auto means = segment_means(grid, mask);
  std::vector<FeatureVector> present;
  std::vector<std::size_t> ids;
  for (std::size_t id = 0; id < means.counts.size(); ++id) {
    if (means.counts[id] == 0) continue;
    ids.push_back(id);
    present.push_back(std::move(means.means[id]));
  }
  const auto losses = reconstruction_losses(model, std::span<const FeatureVector>(present));
  std::vector<std::optional<double>> costs(means.counts.size());
  for (std::size_t i = 0; i < ids.size(); ++i) costs[ids[i]] = normalize_cost(losses[i], cap);
  return costs;
}

/// Cost image at feature-grid resolution. Segment mode paints each segment's
/// mean-vector cost over its pixels; pixel mode scores every cell on its own.
inline CostMap infer_cost_image(const Mlp& model, const FeatureGrid& grid, const SegmentMask& mask, CostMode mode,
                                double cap = defaults::loss_cap) {
  require(model.input_dim() == grid.channels(), ErrorCode::dimension,
          "model expects " + std::to_string(model.input_dim()) + "-d features, grid has " +
              std::to_string(grid.channels()));
  CostMap out{Grid<float>(grid.height(), grid.width()), mode, defaults::threshold};
  if (mode == CostMode::pixel) {
    const auto vectors = unstack_vectors(grid);
    const auto losses = reconstruction_losses(model, std::span<const FeatureVector>(vectors));
    for (std::size_t i = 0; i < losses.size(); ++i) out.values.data()[i] = static_cast<float>(normalize_cost(losses[i], cap));
    return out;
  }
  detail::check_mask_for_grid(grid, mask);
  const auto costs = segment_costs(model, grid, mask, cap);
  for (std::size_t i = 0; i < grid.pixels(); ++i) {
    out.values.data()[i] = static_cast<float>(*costs[mask.labels.data()[i]]);
  }
  return out;
}

/// Segment costs painted onto a full-resolution mask. Segments that vanished
/// on the grid take the upsampled per-pixel cost instead.
inline CostMap paint_segment_costs(const SegmentMask& full_mask, const std::vector<std::optional<double>>& costs,
                                   const CostMap& fallback) {
  const CostMap up{resize_nearest(fallback.values, full_mask.height(), full_mask.width()), fallback.mode,
                   fallback.threshold};
  CostMap out{Grid<float>(full_mask.height(), full_mask.width()), CostMode::segment, fallback.threshold};
  for (std::size_t i = 0; i < out.values.data().size(); ++i) {
    const std::int32_t id = full_mask.labels.data()[i];
    const bool known = id >= 0 && static_cast<std::size_t>(id) < costs.size() && costs[id].has_value();
    out.values.data()[i] = known ? static_cast<float>(*costs[id]) : up.values.data()[i];
  }
  return out;
}

/// Nearest-neighbour resample to another resolution.
inline CostMap match_resolution(const CostMap& cost, std::size_t height, std::size_t width) {
  if (cost.values.same_shape(height, width)) return cost;
  return CostMap{resize_nearest(cost.values, height, width), cost.mode, cost.threshold};
}

/// Traversable iff cost <= threshold, compared at the float precision the
/// costs are stored in.
inline BinaryMask traversable_mask(const CostMap& cost, double threshold = defaults::threshold) {
  require(threshold >= 0.0 && threshold <= 1.0, ErrorCode::invalid_argument, "threshold must be in [0, 1]");
  const auto t = static_cast<float>(threshold);
  BinaryMask out(cost.height(), cost.width());
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] = cost.values.data()[i] <= t ? 1 : 0;
  return out;
}

/// Confusion counts with "traversable" as the positive class.
struct Accuracy {
  double accuracy = 0.0;
  std::size_t true_positive = 0;
  std::size_t true_negative = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;

  std::size_t labeled() const noexcept { return true_positive + true_negative + false_positive + false_negative; }
  std::size_t correct() const noexcept { return true_positive + true_negative; }

  Accuracy& operator+=(const Accuracy& o) {
    true_positive += o.true_positive;
    true_negative += o.true_negative;
    false_positive += o.false_positive;
    false_negative += o.false_negative;
    accuracy = labeled() ? static_cast<double>(correct()) / static_cast<double>(labeled()) : 0.0;
    return *this;
  }
};

namespace detail {

inline Accuracy confusion(const BinaryMask& pred, const GroundTruthMask& gt) {
  require(pred.same_shape(gt.height(), gt.width()), ErrorCode::dimension, "prediction and ground truth differ in size");
  Accuracy a;
  for (std::size_t i = 0; i < gt.data().size(); ++i) {
    const auto label = static_cast<GroundTruth>(gt.data()[i]);
    if (label == GroundTruth::unlabeled) continue;
    const bool truth = label == GroundTruth::traversable;
    const bool guess = pred.data()[i] != 0;
    if (truth && guess) ++a.true_positive;
    else if (!truth && !guess) ++a.true_negative;
    else if (guess) ++a.false_positive;
    else ++a.false_negative;
  }
  a.accuracy = a.labeled() ? static_cast<double>(a.correct()) / static_cast<double>(a.labeled()) : 0.0;
  return a;
}

}  // namespace detail

/// Fraction of labelled pixels predicted correctly; unlabelled pixels ignored.
inline Accuracy evaluate_accuracy(const BinaryMask& pred, const GroundTruthMask& gt) {
  const Accuracy a = detail::confusion(pred, gt);
  require(a.labeled() > 0, ErrorCode::empty_input, "ground truth has no labelled pixels");
  return a;
}

inline std::vector<double> default_threshold_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(i / 100.0);
  return grid;
}

struct ThresholdSweep {
  double best_threshold = 0.0;
  Accuracy best;
  std::vector<std::pair<double, Accuracy>> curve;  // one entry per candidate, in input order
};

/// Pooled accuracy over all image pairs for each candidate; the highest wins,
/// ties going to the smaller threshold.
inline ThresholdSweep tune_threshold(const std::vector<CostMap>& costs, const std::vector<GroundTruthMask>& gts,
                                     const std::vector<double>& candidates) {
  require(!candidates.empty(), ErrorCode::empty_input, "threshold candidate grid is empty");
  require(!costs.empty() && costs.size() == gts.size(), ErrorCode::invalid_argument,
          "need equally many (non-zero) cost maps and ground-truth masks");
  ThresholdSweep sweep;
  bool have_best = false;
  for (double t : candidates) {
    Accuracy pooled;
    for (std::size_t i = 0; i < costs.size(); ++i) pooled += detail::confusion(traversable_mask(costs[i], t), gts[i]);
    require(pooled.labeled() > 0, ErrorCode::empty_input, "ground truth has no labelled pixels");
    sweep.curve.emplace_back(t, pooled);
    const bool better = !have_best || pooled.accuracy > sweep.best.accuracy ||
                        (pooled.accuracy == sweep.best.accuracy && t < sweep.best_threshold);
    if (better) {
      sweep.best = pooled;
      sweep.best_threshold = t;
      have_best = true;
    }
  }
  return sweep;
}

// ---------------------------------------------------------------------------
// Files

inline void write_cost_map(const CostMap& cost, const std::string& path) { write_feature_grid(cost.values, path); }

inline CostMap read_cost_map(const std::string& path, CostMode mode = CostMode::pixel) {
  CostMap cost{read_feature_grid(path), mode, defaults::threshold};
  require(cost.values.channels() == 1, ErrorCode::shape, path + ": cost map must have dim 1");
  for (float v : cost.values.data()) require(v >= 0.0f && v <= 1.0f, ErrorCode::out_of_range, path + ": cost outside [0, 1]");
  return cost;
}

/// 8-bit visualisation, 0 -> 0, 1 -> 255.
inline void write_cost_png(const CostMap& cost, const std::string& path) {
  Grid<std::uint8_t> img(cost.height(), cost.width());
  for (std::size_t i = 0; i < img.data().size(); ++i) {
    img.data()[i] = static_cast<std::uint8_t>(std::lround(std::clamp(cost.values.data()[i], 0.0f, 1.0f) * 255.0f));
  }
  write_gray8_png(img, path);
}

inline void write_ground_truth(const GroundTruthMask& gt, const std::string& path) {
  write_palette_png(gt, {{{0, 0, 0}}, {{0, 200, 0}}, {{200, 0, 0}}}, path);
}

/// Palette or grayscale PNG with values {0 unlabelled, 1 traversable, 2 non-traversable}.
inline GroundTruthMask read_ground_truth(const std::string& path) {
  const auto raw = read_gray16(path);
  GroundTruthMask gt(raw.height(), raw.width());
  for (std::size_t i = 0; i < raw.data().size(); ++i) {
    require(raw.data()[i] <= 2, ErrorCode::out_of_range, path + ": ground-truth value outside {0, 1, 2}");
    gt.data()[i] = static_cast<std::uint8_t>(raw.data()[i]);
  }
  return gt;
}

}  // namespace travmap
