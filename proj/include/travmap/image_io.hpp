#pragma once

#include <png.h>

#include <array>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "travmap/error.hpp"
#include "travmap/grid.hpp"

namespace travmap {

using RgbImage = Grid<std::uint8_t>;  // H x W x 3

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// Decoded PNG: raw samples, no colour expansion (palette images keep indices).
struct RawPng {
  std::size_t width = 0;
  std::size_t height = 0;
  int bit_depth = 0;
  int color_type = 0;
  std::size_t channels = 0;
  std::vector<std::uint16_t> samples;  // row-major, channel-interleaved
};

inline RawPng read_png_raw(const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  require(file != nullptr, ErrorCode::io, "cannot open " + path);
  png_byte sig[8];
  require(std::fread(sig, 1, 8, file.get()) == 8 && png_sig_cmp(sig, 0, 8) == 0, ErrorCode::bad_magic,
          path + " is not a PNG file");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, ErrorCode::io, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  RawPng raw;
  std::vector<png_byte> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::truncated, "corrupt PNG " + path);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  raw.width = png_get_image_width(png, info);
  raw.height = png_get_image_height(png, info);
  raw.bit_depth = png_get_bit_depth(png, info);
  raw.color_type = png_get_color_type(png, info);
  if (raw.bit_depth < 8) png_set_packing(png);
  png_read_update_info(png, info);
  raw.channels = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * raw.height);
  std::vector<png_bytep> rows(raw.height);
  for (std::size_t r = 0; r < raw.height; ++r) rows[r] = buffer.data() + r * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t n = raw.width * raw.height * raw.channels;
  raw.samples.resize(n);
  if (raw.bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      raw.samples[i] = static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) raw.samples[i] = buffer[i];
  }
  return raw;
}

inline void write_png_raw(const std::string& path, std::size_t height, std::size_t width, int color_type,
                          int bit_depth, std::size_t channels, const std::vector<std::uint16_t>& samples,
                          const std::vector<png_color>& palette = {}) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  require(file != nullptr, ErrorCode::io, "cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, ErrorCode::io, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::io, "failed writing PNG " + path);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (!palette.empty()) png_set_PLTE(png, info, palette.data(), static_cast<int>(palette.size()));
  png_write_info(png, info);

  const std::size_t bytes = bit_depth == 16 ? 2 : 1;
  std::vector<png_byte> row(width * channels * bytes);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t i = 0; i < width * channels; ++i) {
      const std::uint16_t s = samples[r * width * channels + i];
      if (bytes == 2) {
        row[2 * i] = static_cast<png_byte>(s >> 8);
        row[2 * i + 1] = static_cast<png_byte>(s & 0xff);
      } else {
        row[i] = static_cast<png_byte>(s);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Netpbm: binary P5 / P6 only.
struct Pnm {
  char kind = 0;
  std::size_t width = 0, height = 0;
  unsigned maxval = 0;
  std::vector<std::uint16_t> samples;
};

inline Pnm read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::io, "cannot open " + path);
  Pnm pnm;
  std::string magic;
  in >> magic;
  require(magic == "P5" || magic == "P6", ErrorCode::bad_magic, path + " is not a binary PGM/PPM");
  pnm.kind = magic[1];
  auto next_number = [&]() {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string skip;
      std::getline(in, skip);
      in >> std::ws;
    }
    std::size_t value = 0;
    require(static_cast<bool>(in >> value), ErrorCode::truncated, "bad netpbm header in " + path);
    return value;
  };
  pnm.width = next_number();
  pnm.height = next_number();
  pnm.maxval = static_cast<unsigned>(next_number());
  require(pnm.maxval > 0 && pnm.maxval <= 65535, ErrorCode::invalid_argument, "bad maxval in " + path);
  in.get();
  const std::size_t channels = pnm.kind == '6' ? 3 : 1;
  const std::size_t n = pnm.width * pnm.height * channels;
  const std::size_t bytes = pnm.maxval > 255 ? 2 : 1;
  std::vector<unsigned char> buffer(n * bytes);
  in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(buffer.size()));
  require(static_cast<std::size_t>(in.gcount()) == buffer.size(), ErrorCode::truncated, "truncated pixel data in " + path);
  pnm.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    pnm.samples[i] = bytes == 2 ? static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1]) : buffer[i];
  }
  return pnm;
}

inline void write_pnm(const std::string& path, char kind, std::size_t height, std::size_t width, unsigned maxval,
                      const std::vector<std::uint16_t>& samples) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::io, "cannot write " + path);
  out << 'P' << kind << '\n' << width << ' ' << height << '\n' << maxval << '\n';
  const bool wide = maxval > 255;
  std::vector<char> buffer;
  buffer.reserve(samples.size() * (wide ? 2 : 1));
  for (std::uint16_t s : samples) {
    if (wide) buffer.push_back(static_cast<char>(s >> 8));
    buffer.push_back(static_cast<char>(s & 0xff));
  }
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  require(out.good(), ErrorCode::io, "failed writing " + path);
}

}  // namespace detail

/// 8-bit RGB from PNG (gray, RGB or RGBA) or binary PPM.
inline RgbImage read_rgb(const std::string& path) {
  if (detail::has_suffix(path, ".ppm")) {
    const auto pnm = detail::read_pnm(path);
    require(pnm.kind == '6' && pnm.maxval == 255, ErrorCode::invalid_argument, path + ": expected 8-bit P6");
    RgbImage img(pnm.height, pnm.width, 3);
    for (std::size_t i = 0; i < pnm.samples.size(); ++i) img.data()[i] = static_cast<std::uint8_t>(pnm.samples[i]);
    return img;
  }
  const auto raw = detail::read_png_raw(path);
  require(raw.bit_depth <= 8, ErrorCode::invalid_argument, path + ": expected an 8-bit colour image");
  require(raw.color_type != PNG_COLOR_TYPE_PALETTE, ErrorCode::invalid_argument,
          path + ": palette images are not supported as RGB input");
  RgbImage img(raw.height, raw.width, 3);
  for (std::size_t p = 0; p < raw.width * raw.height; ++p) {
    for (std::size_t ch = 0; ch < 3; ++ch) {
      std::uint16_t s = 0;
      if (raw.channels >= 3) s = raw.samples[p * raw.channels + ch];
      else s = raw.samples[p * raw.channels];
      img.data()[p * 3 + ch] = static_cast<std::uint8_t>(s);
    }
  }
  return img;
}

inline void write_rgb_png(const RgbImage& img, const std::string& path) {
  require(img.channels() == 3, ErrorCode::shape, "RGB image needs 3 channels");
  std::vector<std::uint16_t> samples(img.data().begin(), img.data().end());
  detail::write_png_raw(path, img.height(), img.width(), PNG_COLOR_TYPE_RGB, 8, 3, samples);
}

/// Single-channel integer image from 8/16-bit grayscale or palette PNG, or PGM.
/// Palette images yield their raw indices.
inline Grid<std::uint16_t> read_gray16(const std::string& path) {
  Grid<std::uint16_t> out;
  if (detail::has_suffix(path, ".pgm")) {
    auto pnm = detail::read_pnm(path);
    require(pnm.kind == '5', ErrorCode::invalid_argument, path + ": expected P5");
    out = Grid<std::uint16_t>(pnm.height, pnm.width);
    out.data() = std::move(pnm.samples);
    return out;
  }
  auto raw = detail::read_png_raw(path);
  require(raw.channels == 1, ErrorCode::invalid_argument, path + ": expected a single-channel PNG");
  out = Grid<std::uint16_t>(raw.height, raw.width);
  out.data() = std::move(raw.samples);
  return out;
}

inline void write_gray16_png(const Grid<std::uint16_t>& img, const std::string& path) {
  detail::write_png_raw(path, img.height(), img.width(), PNG_COLOR_TYPE_GRAY, 16, 1, img.data());
}

inline void write_gray16_pgm(const Grid<std::uint16_t>& img, const std::string& path) {
  detail::write_pnm(path, '5', img.height(), img.width(), 65535, img.data());
}

inline void write_gray8_png(const Grid<std::uint8_t>& img, const std::string& path) {
  std::vector<std::uint16_t> samples(img.data().begin(), img.data().end());
  detail::write_png_raw(path, img.height(), img.width(), PNG_COLOR_TYPE_GRAY, 8, 1, samples);
}

/// Indexed-colour PNG; pixel values are palette indices.
inline void write_palette_png(const Grid<std::uint8_t>& indices, const std::vector<std::array<std::uint8_t, 3>>& colors,
                              const std::string& path) {
  std::vector<png_color> palette;
  for (const auto& c : colors) palette.push_back(png_color{c[0], c[1], c[2]});
  for (std::uint8_t v : indices.data()) {
    require(v < palette.size(), ErrorCode::out_of_range, "palette index outside palette");
  }
  std::vector<std::uint16_t> samples(indices.data().begin(), indices.data().end());
  detail::write_png_raw(path, indices.height(), indices.width(), PNG_COLOR_TYPE_PALETTE, 8, 1, samples, palette);
}

}  // namespace travmap
