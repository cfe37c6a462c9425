#pragma once

#include <array>
#include <cstddef>

namespace travmap::defaults {

// Pose projection
inline constexpr int horizon_poses = 40;
inline constexpr double min_forward_depth = 0.1;  // m
inline constexpr double pose_match_tolerance = 0.05;  // s

// Segmentation
inline constexpr int superpixels = 400;
inline constexpr double compactness = 15.0;
inline constexpr int slic_iterations = 10;

// Backbone feature grid
inline constexpr std::size_t feature_dim = 384;
inline constexpr std::size_t grid_height = 50;
inline constexpr std::size_t grid_width = 50;
inline constexpr std::size_t backbone_input = 700;
inline constexpr std::size_t patch_size = 14;

// Autoencoder: input, hidden widths, output
inline constexpr std::array<std::size_t, 9> layer_sizes{384, 256, 128, 64, 32, 64, 128, 256, 384};

// Cost
inline constexpr double loss_cap = 10.0;
inline constexpr double threshold = 0.35;

// Cloud export
inline constexpr double min_range = 2.0;  // m

}  // namespace travmap::defaults
