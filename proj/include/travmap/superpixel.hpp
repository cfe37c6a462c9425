#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "travmap/defaults.hpp"
#include "travmap/error.hpp"
#include "travmap/geometry.hpp"
#include "travmap/grid.hpp"
#include "travmap/image_io.hpp"

namespace travmap {

/// Integer label image. `num_segments` is the size of the id space: SLIC
/// output uses every id in [0, num_segments); a downscaled mask keeps the
/// id space of its source even when some ids vanish.
struct SegmentMask {
  Grid<std::int32_t> labels;
  std::int32_t num_segments = 0;

  std::size_t height() const noexcept { return labels.height(); }
  std::size_t width() const noexcept { return labels.width(); }
  std::int32_t operator()(std::size_t r, std::size_t c) const { return labels(r, c); }

  friend bool operator==(const SegmentMask&, const SegmentMask&) = default;
};

struct SlicParams {
  int num_superpixels = defaults::superpixels;
  double compactness = defaults::compactness;
  int max_iterations = defaults::slic_iterations;
  /// Unused by plain grid-seeded SLIC; kept so callers can pin it alongside
  /// the other pipeline seeds.
  std::uint64_t seed = 0;

  void validate() const {
    require(num_superpixels >= 1, ErrorCode::invalid_argument, "num_superpixels must be >= 1");
    require(std::isfinite(compactness) && compactness > 0.0, ErrorCode::invalid_argument, "compactness must be > 0");
    require(max_iterations >= 1, ErrorCode::invalid_argument, "max_iterations must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// Colour

/// sRGB (8-bit) to CIELAB, D65 white.
inline std::array<double, 3> rgb_to_lab(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  auto linear = [](std::uint8_t c8) {
    const double c = c8 / 255.0;
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
  };
  const double r = linear(r8), g = linear(g8), b = linear(b8);
  const double x = 0.412453 * r + 0.357580 * g + 0.180423 * b;
  const double y = 0.212671 * r + 0.715160 * g + 0.072169 * b;
  const double z = 0.019334 * r + 0.119193 * g + 0.950227 * b;

  constexpr double xn = 0.95047, yn = 1.0, zn = 1.08883;
  auto f = [](double t) {
    constexpr double eps = 216.0 / 24389.0;
    constexpr double kappa = 24389.0 / 27.0;
    return t > eps ? std::cbrt(t) : (kappa * t + 16.0) / 116.0;
  };
  const double fx = f(x / xn), fy = f(y / yn), fz = f(z / zn);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

inline Grid<float> rgb_to_lab(const RgbImage& image) {
  require(image.channels() == 3, ErrorCode::shape, "rgb_to_lab needs a 3-channel image");
  Grid<float> lab(image.height(), image.width(), 3);
  for (std::size_t r = 0; r < image.height(); ++r) {
    for (std::size_t c = 0; c < image.width(); ++c) {
      const auto v = rgb_to_lab(image(r, c, 0), image(r, c, 1), image(r, c, 2));
      for (std::size_t k = 0; k < 3; ++k) lab(r, c, k) = static_cast<float>(v[k]);
    }
  }
  return lab;
}

// ---------------------------------------------------------------------------
// SLIC

struct SlicResult {
  SegmentMask mask;
  /// Sum of squared combined distances after each assignment step.
  std::vector<double> energy;
  /// Sum of the (unsquared) combined distances after each assignment step.
  std::vector<double> distance_sum;
  int iterations = 0;
};

namespace detail {

struct SlicCenter {
  double l, a, b, x, y;
};

/// Relabels 4-connected components in raster order. Components smaller than
/// `min_size` are absorbed by the already-relabelled neighbour to the left of
/// (or above) their first pixel.
inline SegmentMask enforce_connectivity(const Grid<std::int32_t>& labels, std::size_t min_size) {
  const std::size_t h = labels.height(), w = labels.width();
  Grid<std::int32_t> out(h, w, 1, -1);
  std::vector<std::size_t> component;
  std::vector<std::size_t> stack;
  std::int32_t next = 0;

  for (std::size_t start = 0; start < h * w; ++start) {
    if (out.data()[start] >= 0) continue;
    const std::int32_t original = labels.data()[start];
    const std::size_t sr = start / w, sc = start % w;

    std::int32_t adjacent = -1;
    if (sc > 0) adjacent = out(sr, sc - 1);
    else if (sr > 0) adjacent = out(sr - 1, sc);

    component.clear();
    stack.assign(1, start);
    out.data()[start] = next;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      component.push_back(p);
      const std::size_t r = p / w, c = p % w;
      const std::size_t nbrs[4] = {c > 0 ? p - 1 : p, c + 1 < w ? p + 1 : p, r > 0 ? p - w : p, r + 1 < h ? p + w : p};
      for (std::size_t q : nbrs) {
        if (q != p && out.data()[q] < 0 && labels.data()[q] == original) {
          out.data()[q] = next;
          stack.push_back(q);
        }
      }
    }

    if (component.size() < min_size && adjacent >= 0) {
      for (std::size_t p : component) out.data()[p] = adjacent;
    } else {
      ++next;
    }
  }
  return SegmentMask{std::move(out), next};
}

}  // namespace detail

/// SLIC superpixels (grid-seeded k-means in Lab + xy) followed by connectivity
/// enforcement. Each assignment step considers, per pixel, every centre whose
/// 2S x 2S window covers it plus the pixel's current centre.
inline SlicResult slic_segment_detailed(const RgbImage& image, const SlicParams& params) {
  params.validate();
  const std::size_t h = image.height(), w = image.width();
  require(h > 0 && w > 0, ErrorCode::invalid_argument, "empty image");
  require(h * w >= static_cast<std::size_t>(params.num_superpixels), ErrorCode::invalid_argument,
          "image smaller than one cluster cell");

  const Grid<float> lab = rgb_to_lab(image);
  const double step = std::sqrt(static_cast<double>(h * w) / params.num_superpixels);
  const auto nx = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(w / step)));
  const auto ny = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(h / step)));
  const double sx = static_cast<double>(w) / nx, sy = static_cast<double>(h) / ny;

  std::vector<detail::SlicCenter> centers;
  centers.reserve(nx * ny);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const double x = (i + 0.5) * sx, y = (j + 0.5) * sy;
      const auto r = static_cast<std::size_t>(y), c = static_cast<std::size_t>(x);
      centers.push_back({lab(r, c, 0), lab(r, c, 1), lab(r, c, 2), x, y});
    }
  }

  const double spatial = (params.compactness / step) * (params.compactness / step);
  const auto window = static_cast<long>(std::ceil(std::max({step, sx, sy})));
  constexpr double inf = std::numeric_limits<double>::infinity();

  auto distance = [&](const detail::SlicCenter& k, std::size_t r, std::size_t c) {
    const double dl = lab(r, c, 0) - k.l, da = lab(r, c, 1) - k.a, db = lab(r, c, 2) - k.b;
    const double dx = static_cast<double>(c) - k.x, dy = static_cast<double>(r) - k.y;
    return dl * dl + da * da + db * db + spatial * (dx * dx + dy * dy);
  };

  Grid<std::int32_t> labels(h, w, 1, -1);
  std::vector<double> dist(h * w, inf);
  SlicResult result;

  for (int iter = 0; iter < params.max_iterations; ++iter) {
    for (std::size_t p = 0; p < h * w; ++p) {
      const std::int32_t current = labels.data()[p];
      dist[p] = current >= 0 ? distance(centers[current], p / w, p % w) : inf;
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const auto& ck = centers[k];
      const long r0 = std::max(0L, static_cast<long>(std::floor(ck.y)) - window);
      const long r1 = std::min(static_cast<long>(h) - 1, static_cast<long>(std::floor(ck.y)) + window);
      const long c0 = std::max(0L, static_cast<long>(std::floor(ck.x)) - window);
      const long c1 = std::min(static_cast<long>(w) - 1, static_cast<long>(std::floor(ck.x)) + window);
      for (long r = r0; r <= r1; ++r) {
        for (long c = c0; c <= c1; ++c) {
          const std::size_t p = static_cast<std::size_t>(r) * w + static_cast<std::size_t>(c);
          const double d = distance(ck, static_cast<std::size_t>(r), static_cast<std::size_t>(c));
          if (d < dist[p]) {
            dist[p] = d;
            labels.data()[p] = static_cast<std::int32_t>(k);
          }
        }
      }
    }
    // Pixels no window reached (only possible on degenerate layouts).
    for (std::size_t p = 0; p < h * w; ++p) {
      if (labels.data()[p] >= 0) continue;
      for (std::size_t k = 0; k < centers.size(); ++k) {
        const double d = distance(centers[k], p / w, p % w);
        if (d < dist[p]) {
          dist[p] = d;
          labels.data()[p] = static_cast<std::int32_t>(k);
        }
      }
    }

    double energy = 0.0, distance_sum = 0.0;
    for (double d : dist) {
      energy += d;
      distance_sum += std::sqrt(d);
    }
    result.energy.push_back(energy);
    result.distance_sum.push_back(distance_sum);
    result.iterations = iter + 1;

    std::vector<std::array<double, 6>> sums(centers.size(), std::array<double, 6>{});
    for (std::size_t p = 0; p < h * w; ++p) {
      auto& s = sums[labels.data()[p]];
      const std::size_t r = p / w, c = p % w;
      s[0] += lab(r, c, 0);
      s[1] += lab(r, c, 1);
      s[2] += lab(r, c, 2);
      s[3] += static_cast<double>(c);
      s[4] += static_cast<double>(r);
      s[5] += 1.0;
    }
    double movement = 0.0;
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const auto& s = sums[k];
      if (s[5] == 0.0) continue;
      const detail::SlicCenter next{s[0] / s[5], s[1] / s[5], s[2] / s[5], s[3] / s[5], s[4] / s[5]};
      movement = std::max(movement, std::hypot(next.x - centers[k].x, next.y - centers[k].y));
      centers[k] = next;
    }
    if (movement < 1e-3 * step) break;
  }

  const auto min_size = std::max<std::size_t>(1, static_cast<std::size_t>(step * step / 4.0));
  result.mask = detail::enforce_connectivity(labels, min_size);
  return result;
}

inline SegmentMask slic_segment(const RgbImage& image, const SlicParams& params = {}) {
  return slic_segment_detailed(image, params).mask;
}

// ---------------------------------------------------------------------------
// Mask utilities

/// Nearest-neighbour downscale; target pixel (r, c) samples source pixel
/// (floor((r + 0.5) * H / h), floor((c + 0.5) * W / w)).
inline SegmentMask downscale_mask(const SegmentMask& mask, std::size_t target_h, std::size_t target_w) {
  require(target_h > 0 && target_w > 0, ErrorCode::invalid_argument, "downscale target must be non-empty");
  require(target_h <= mask.height() && target_w <= mask.width(), ErrorCode::invalid_argument,
          "downscale target larger than source mask");
  return SegmentMask{resize_nearest(mask.labels, target_h, target_w), mask.num_segments};
}

/// Pixel coordinate to (row, col) cell by flooring.
inline std::pair<std::size_t, std::size_t> pixel_cell(const PixelCoord& p) {
  return {static_cast<std::size_t>(std::floor(p.v)), static_cast<std::size_t>(std::floor(p.u))};
}

/// Ids of every segment containing at least one path pixel.
inline std::set<std::int32_t> traversed_segment_ids(const SegmentMask& mask, const std::vector<PixelCoord>& path) {
  std::set<std::int32_t> ids;
  for (const PixelCoord& p : path) {
    require(std::isfinite(p.u) && std::isfinite(p.v) && p.u >= 0.0 && p.v >= 0.0, ErrorCode::out_of_range,
            "path pixel outside mask");
    const auto [r, c] = pixel_cell(p);
    require(r < mask.height() && c < mask.width(), ErrorCode::out_of_range, "path pixel outside mask");
    ids.insert(mask(r, c));
  }
  return ids;
}

/// 16-bit PNG, or PGM (maxval 65535) when the path ends in ".pgm".
inline void write_mask(const SegmentMask& mask, const std::string& path) {
  require(mask.num_segments <= 65536, ErrorCode::out_of_range, "too many segments for a 16-bit mask");
  Grid<std::uint16_t> img(mask.height(), mask.width());
  for (std::size_t i = 0; i < img.data().size(); ++i) {
    img.data()[i] = static_cast<std::uint16_t>(mask.labels.data()[i]);
  }
  if (detail::has_suffix(path, ".pgm")) write_gray16_pgm(img, path);
  else write_gray16_png(img, path);
}

/// The id space is taken as max id + 1.
inline SegmentMask read_mask(const std::string& path) {
  const auto img = read_gray16(path);
  SegmentMask mask{Grid<std::int32_t>(img.height(), img.width()), 0};
  for (std::size_t i = 0; i < img.data().size(); ++i) {
    mask.labels.data()[i] = img.data()[i];
    mask.num_segments = std::max(mask.num_segments, static_cast<std::int32_t>(img.data()[i]) + 1);
  }
  return mask;
}

}  // namespace travmap
