#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "travmap/error.hpp"
#include "travmap/grid.hpp"
#include "travmap/superpixel.hpp"

namespace travmap {

/// Dense H x W x D embedding grid. Cost maps and depth images reuse the same
/// container and file format with D = 1.
using FeatureGrid = Grid<float>;
using FeatureVector = std::vector<float>;

inline constexpr std::array<char, 8> grid_magic{'S', 'T', 'E', 'P', 'P', 'F', 'T', 'R'};
inline constexpr std::uint32_t grid_version = 1;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

inline float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_u32(p)); }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::io, "cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void spill(const std::string& bytes, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::io, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(out.good(), ErrorCode::io, "failed writing " + path);
}

}  // namespace detail

/// Layout: magic "STEPPFTR" | u32 version | u32 height | u32 width | u32 dim |
/// height*width*dim f32, all little endian, innermost dimension contiguous.
inline std::string encode_grid(const FeatureGrid& grid) {
  std::string out(grid_magic.begin(), grid_magic.end());
  detail::put_u32(out, grid_version);
  detail::put_u32(out, static_cast<std::uint32_t>(grid.height()));
  detail::put_u32(out, static_cast<std::uint32_t>(grid.width()));
  detail::put_u32(out, static_cast<std::uint32_t>(grid.channels()));
  out.reserve(out.size() + 4 * grid.data().size());
  for (float v : grid.data()) detail::put_f32(out, v);
  return out;
}

inline FeatureGrid decode_grid(const std::string& bytes) {
  constexpr std::size_t header = 8 + 4 * 4;
  require(bytes.size() >= 8 && std::memcmp(bytes.data(), grid_magic.data(), 8) == 0, ErrorCode::bad_magic,
          "feature grid: bad magic");
  require(bytes.size() >= header, ErrorCode::truncated, "feature grid: truncated header");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t version = detail::get_u32(p + 8);
  require(version == grid_version, ErrorCode::version, "feature grid: unsupported version " + std::to_string(version));
  const std::size_t h = detail::get_u32(p + 12), w = detail::get_u32(p + 16), d = detail::get_u32(p + 20);
  require(h > 0 && w > 0 && d > 0, ErrorCode::shape, "feature grid: zero dimension");
  const std::size_t count = h * w * d;
  require(bytes.size() - header >= 4 * count, ErrorCode::truncated,
          "feature grid: payload holds " + std::to_string((bytes.size() - header) / 4) + " of " +
              std::to_string(count) + " values");
  require(bytes.size() - header == 4 * count, ErrorCode::shape, "feature grid: trailing bytes after payload");
  FeatureGrid grid(h, w, d);
  for (std::size_t i = 0; i < count; ++i) {
    const float v = detail::get_f32(p + header + 4 * i);
    require(std::isfinite(v), ErrorCode::non_finite, "feature grid: non-finite value at index " + std::to_string(i));
    grid.data()[i] = v;
  }
  return grid;
}

inline void write_feature_grid(const FeatureGrid& grid, const std::string& path) {
  require(!grid.empty(), ErrorCode::shape, "refusing to write an empty grid");
  detail::spill(encode_grid(grid), path);
}

inline FeatureGrid read_feature_grid(const std::string& path) { return decode_grid(detail::slurp(path)); }

// ---------------------------------------------------------------------------
// Scatter-reduce aggregation

/// Per-id pixel counts and mean vectors. `means[id]` is empty where
/// `counts[id] == 0`.
struct SegmentMeans {
  std::vector<std::size_t> counts;
  std::vector<FeatureVector> means;
};

namespace detail {

inline void check_mask_for_grid(const FeatureGrid& grid, const SegmentMask& mask) {
  require(mask.height() == grid.height() && mask.width() == grid.width(), ErrorCode::dimension,
          "mask is " + std::to_string(mask.height()) + "x" + std::to_string(mask.width()) + " but grid is " +
              std::to_string(grid.height()) + "x" + std::to_string(grid.width()));
}

/// One pass accumulating 64-bit sums and counts for ids with `wanted[id]`.
inline SegmentMeans scatter_mean(const FeatureGrid& grid, const SegmentMask& mask, const std::vector<bool>& wanted) {
  check_mask_for_grid(grid, mask);
  const std::size_t dim = grid.channels();
  const std::size_t ids = wanted.size();
  std::vector<double> sums(ids * dim, 0.0);
  SegmentMeans out;
  out.counts.assign(ids, 0);
  for (std::size_t p = 0; p < grid.pixels(); ++p) {
    const std::int32_t id = mask.labels.data()[p];
    require(id >= 0 && static_cast<std::size_t>(id) < ids, ErrorCode::out_of_range,
            "mask id " + std::to_string(id) + " outside id space");
    if (!wanted[id]) continue;
    const float* v = grid.data().data() + p * dim;
    double* s = sums.data() + static_cast<std::size_t>(id) * dim;
    for (std::size_t k = 0; k < dim; ++k) s[k] += v[k];
    ++out.counts[id];
  }
  out.means.resize(ids);
  for (std::size_t id = 0; id < ids; ++id) {
    if (out.counts[id] == 0) continue;
    auto& m = out.means[id];
    m.resize(dim);
    const double n = static_cast<double>(out.counts[id]);
    for (std::size_t k = 0; k < dim; ++k) m[k] = static_cast<float>(sums[id * dim + k] / n);
  }
  return out;
}

inline std::size_t id_space(const SegmentMask& mask) {
  std::int32_t top = mask.num_segments;
  for (std::int32_t id : mask.labels.data()) top = std::max(top, id + 1);
  return static_cast<std::size_t>(std::max(top, 0));
}

}  // namespace detail

/// Means over every id present in the mask.
inline SegmentMeans segment_means(const FeatureGrid& grid, const SegmentMask& mask) {
  return detail::scatter_mean(grid, mask, std::vector<bool>(detail::id_space(mask), true));
}

/// Mean feature of each requested id; ids without pixels are omitted.
inline std::map<std::int32_t, FeatureVector> segment_mean_features(const FeatureGrid& grid, const SegmentMask& mask,
                                                                   const std::set<std::int32_t>& ids) {
  std::vector<bool> wanted(detail::id_space(mask), false);
  for (std::int32_t id : ids) {
    if (id >= 0 && static_cast<std::size_t>(id) < wanted.size()) wanted[id] = true;
  }
  auto means = detail::scatter_mean(grid, mask, wanted);
  std::map<std::int32_t, FeatureVector> out;
  for (std::int32_t id : ids) {
    if (id >= 0 && static_cast<std::size_t>(id) < wanted.size() && means.counts[id] > 0) {
      out.emplace(id, std::move(means.means[id]));
    }
  }
  return out;
}

struct PathFeatures {
  std::vector<FeatureVector> vectors;
  std::vector<std::int32_t> ids;  // segment id of each vector
  std::size_t traversed = 0;      // segments touched at full resolution
  std::size_t vanished = 0;       // of those, segments with no pixel left on the grid
};

/// Traversed segments at image resolution, mapped onto the feature grid by
/// nearest-neighbour downscaling of the mask, then averaged.
inline PathFeatures masked_path_features(const FeatureGrid& grid, const SegmentMask& full_mask,
                                         const std::vector<PixelCoord>& path) {
  const auto ids = traversed_segment_ids(full_mask, path);
  PathFeatures out;
  out.traversed = ids.size();
  if (ids.empty()) return out;
  const SegmentMask small = downscale_mask(full_mask, grid.height(), grid.width());
  auto means = segment_mean_features(grid, small, ids);
  for (auto& [id, vec] : means) {
    out.ids.push_back(id);
    out.vectors.push_back(std::move(vec));
  }
  out.vanished = ids.size() - out.vectors.size();
  return out;
}

/// Stacks vectors into an N x 1 x D grid (the training-set file layout).
inline FeatureGrid stack_vectors(const std::vector<FeatureVector>& vectors) {
  require(!vectors.empty(), ErrorCode::empty_input, "no vectors to stack");
  const std::size_t dim = vectors.front().size();
  FeatureGrid grid(vectors.size(), 1, dim);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    require(vectors[i].size() == dim, ErrorCode::dimension, "vectors have mixed lengths");
    std::copy(vectors[i].begin(), vectors[i].end(), grid.data().begin() + static_cast<std::ptrdiff_t>(i * dim));
  }
  return grid;
}

/// Every cell of a grid as one vector, row-major.
inline std::vector<FeatureVector> unstack_vectors(const FeatureGrid& grid) {
  std::vector<FeatureVector> out;
  out.reserve(grid.pixels());
  for (std::size_t r = 0; r < grid.height(); ++r) {
    for (std::size_t c = 0; c < grid.width(); ++c) {
      const auto px = grid.pixel(r, c);
      out.emplace_back(px.begin(), px.end());
    }
  }
  return out;
}

}  // namespace travmap
