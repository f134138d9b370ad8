// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "spba/error.hpp"
#include "spba/geometry.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <vector>

namespace spba {

/// Row-major RGB image with values in [0, 255], plus a precomputed forward
/// difference field used by the bilinear sampler.
class Image {
 public:
  Image() = default;
  Image(int width, int height)
      : width_(width), height_(height),
        rgb_(static_cast<size_t>(width) * height * 3, 0.0) {
    if (width <= 0 || height <= 0) {
      throw Error(ErrorCode::invalid_argument, "image dimensions must be positive");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }

  double& at(int x, int y, int c) { return rgb_[index(x, y) * 3 + c]; }
  double at(int x, int y, int c) const { return rgb_[index(x, y) * 3 + c]; }

  Vec3 pixel(int x, int y) const {
    const double* p = &rgb_[index(x, y) * 3];
    return Vec3(p[0], p[1], p[2]);
  }
  void set_pixel(int x, int y, const Vec3& c) {
    double* p = &rgb_[index(x, y) * 3];
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }

  const std::vector<double>& data() const { return rgb_; }

  /// Recomputes the difference field; call after mutating pixels.
  void update_gradients() {
    dx_.assign(rgb_.size(), 0.0);
    dy_.assign(rgb_.size(), 0.0);
    for (int y = 0; y < height_; ++y) {
      for (int x = 0; x < width_; ++x) {
        for (int c = 0; c < 3; ++c) {
          const size_t i = index(x, y) * 3 + c;
          if (x + 1 < width_) dx_[i] = at(x + 1, y, c) - rgb_[i];
          if (y + 1 < height_) dy_[i] = at(x, y + 1, c) - rgb_[i];
        }
      }
    }
  }

  bool has_gradients() const { return dx_.size() == rgb_.size(); }
  /// I(x+1, y) - I(x, y), zero on the last column.
  Vec3 forward_dx(int x, int y) const { return Vec3(&dx_[index(x, y) * 3]); }
  /// I(x, y+1) - I(x, y), zero on the last row.
  Vec3 forward_dy(int x, int y) const { return Vec3(&dy_[index(x, y) * 3]); }

 private:
  size_t index(int x, int y) const { return static_cast<size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> rgb_;
  std::vector<double> dx_;
  std::vector<double> dy_;
};

struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> on;

  Mask() = default;
  Mask(int w, int h) : width(w), height(h), on(static_cast<size_t>(w) * h, 0) {}

  bool operator()(int x, int y) const { return on[static_cast<size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) { on[static_cast<size_t>(y) * width + x] = v ? 1 : 0; }
  size_t count() const {
    size_t n = 0;
    for (auto v : on) n += v != 0;
    return n;
  }
  bool operator==(const Mask&) const = default;
};

/// Inverse-depth map with an explicit validity mask.
struct InvDepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> value;
  std::vector<std::uint8_t> valid;

  InvDepthMap() = default;
  InvDepthMap(int w, int h)
      : width(w), height(h), value(static_cast<size_t>(w) * h, 0.0),
        valid(static_cast<size_t>(w) * h, 0) {}

  size_t size() const { return value.size(); }
  size_t valid_count() const {
    size_t n = 0;
    for (auto v : valid) n += v != 0;
    return n;
  }
};

}  // namespace spba
