// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
//
// 8-bit PNG frames (RGB) and silhouettes (gray, 0/255) through libpng's
// simplified API.
#pragma once

#include "spba/error.hpp"
#include "spba/image.hpp"
#include "spba/io/files.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace spba::io {

namespace detail {

inline std::string encode_png(const std::vector<std::uint8_t>& pixels, int w, int h,
                              std::uint32_t format) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::io_error, std::string("PNG encode failed: ") + img.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::io_error, std::string("PNG encode failed: ") + img.message);
  }
  out.resize(size);
  return out;
}

inline std::vector<std::uint8_t> decode_png(const std::string& bytes, std::uint32_t format,
                                            int& w, int& h) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::io_error, std::string("PNG decode failed: ") + img.message);
  }
  img.format = format;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, pixels.data(), 0, nullptr)) {
    png_image_free(&img);
    throw Error(ErrorCode::io_error, std::string("PNG decode failed: ") + img.message);
  }
  w = static_cast<int>(img.width);
  h = static_cast<int>(img.height);
  return pixels;
}

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

}  // namespace detail

/// Values are rounded to the nearest integer and clamped to [0, 255].
inline std::string encode_png(const Image& image) {
  std::vector<std::uint8_t> px(static_cast<size_t>(image.width()) * image.height() * 3);
  for (size_t i = 0; i < px.size(); ++i) px[i] = detail::to_byte(image.data()[i]);
  return detail::encode_png(px, image.width(), image.height(), PNG_FORMAT_RGB);
}

inline std::string encode_png(const Mask& mask) {
  std::vector<std::uint8_t> px(mask.on.size());
  for (size_t i = 0; i < px.size(); ++i) px[i] = mask.on[i] ? 255 : 0;
  return detail::encode_png(px, mask.width, mask.height, PNG_FORMAT_GRAY);
}

/// Gray or palette PNGs are expanded to RGB.
inline Image decode_png_image(const std::string& bytes) {
  int w = 0, h = 0;
  const auto px = detail::decode_png(bytes, PNG_FORMAT_RGB, w, h);
  Image image(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t i = (static_cast<size_t>(y) * w + x) * 3;
      image.set_pixel(x, y, Vec3(px[i], px[i + 1], px[i + 2]));
    }
  }
  image.update_gradients();
  return image;
}

/// A pixel is on when its gray value is at least 128.
inline Mask decode_png_mask(const std::string& bytes) {
  int w = 0, h = 0;
  const auto px = detail::decode_png(bytes, PNG_FORMAT_GRAY, w, h);
  Mask mask(w, h);
  for (size_t i = 0; i < px.size(); ++i) mask.on[i] = px[i] >= 128 ? 1 : 0;
  return mask;
}

inline void write_png(const fs::path& path, const Image& image) {
  write_file_atomic(path, encode_png(image));
}
inline void write_png(const fs::path& path, const Mask& mask) {
  write_file_atomic(path, encode_png(mask));
}
inline Image read_png_image(const fs::path& path) { return decode_png_image(read_file(path)); }
inline Mask read_png_mask(const fs::path& path) { return decode_png_mask(read_file(path)); }

}  // namespace spba::io
