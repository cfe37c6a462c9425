#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "travmap/error.hpp"

namespace travmap {

/// Row-major H x W x C buffer. The workhorse container for images, masks,
/// depth maps and cost maps.
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t height, std::size_t width, std::size_t channels = 1, T fill = T{})
      : height_(height), width_(width), channels_(channels), data_(height * width * channels, fill) {}

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t pixels() const noexcept { return height_ * width_; }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t row, std::size_t col, std::size_t ch = 0) {
    return data_[(row * width_ + col) * channels_ + ch];
  }
  const T& operator()(std::size_t row, std::size_t col, std::size_t ch = 0) const {
    return data_[(row * width_ + col) * channels_ + ch];
  }

  std::span<T> pixel(std::size_t row, std::size_t col) {
    return {data_.data() + (row * width_ + col) * channels_, channels_};
  }
  std::span<const T> pixel(std::size_t row, std::size_t col) const {
    return {data_.data() + (row * width_ + col) * channels_, channels_};
  }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  bool same_shape(std::size_t h, std::size_t w) const noexcept { return height_ == h && width_ == w; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 1;
  std::vector<T> data_;
};

/// Source index sampled by nearest-neighbour resizing: floor of the scaled
/// target-cell centre. Shared by mask downscaling, feature synthesis and
/// cost upsampling so all resizes agree pixel for pixel.
inline std::size_t nearest_source_index(std::size_t target, std::size_t target_size, std::size_t source_size) {
  const auto idx = static_cast<std::size_t>((static_cast<double>(target) + 0.5) * static_cast<double>(source_size) /
                                            static_cast<double>(target_size));
  return idx < source_size ? idx : source_size - 1;
}

/// Nearest-neighbour resize (up or down) of any grid.
template <class T>
Grid<T> resize_nearest(const Grid<T>& src, std::size_t height, std::size_t width) {
  require(height > 0 && width > 0, ErrorCode::invalid_argument, "resize target must be non-empty");
  Grid<T> out(height, width, src.channels());
  for (std::size_t r = 0; r < height; ++r) {
    const std::size_t sr = nearest_source_index(r, height, src.height());
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t sc = nearest_source_index(c, width, src.width());
      for (std::size_t k = 0; k < src.channels(); ++k) out(r, c, k) = src(sr, sc, k);
    }
  }
  return out;
}

}  // namespace travmap
