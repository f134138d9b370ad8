// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
//
// Pseudo-raytracing of point clouds: points are splatted into an upsampled
// inverse-depth buffer, which is max-pooled back to image resolution. The
// owner of each pooled maximum is the visible point for that pixel.
//
// Pixel (x, y) has its center at continuous coordinate (x, y).
#pragma once

#include "spba/error.hpp"
#include "spba/geometry.hpp"
#include "spba/image.hpp"
#include "spba/shapespace.hpp"

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <vector>

namespace spba {

inline constexpr int kDefaultUpsample = 4;

struct RenderedView {
  int width = 0;
  int height = 0;
  std::vector<int> visible_idx;  // ascending point index
  std::vector<Vec2> pixels;      // continuous projection of each visible point
  std::vector<double> inv_depth; // inverse depth of each visible point
  InvDepthMap invdepth_map;
  Mask silhouette;
  std::vector<int> owner;        // per pixel: position in visible_idx, or -1
  bool empty = true;

  size_t num_visible() const { return visible_idx.size(); }
};

inline RenderedView raytrace(const Eigen::Matrix3Xd& points, const Twist& pose,
                             const Intrinsics& k, int upsample = kDefaultUpsample) {
  if (upsample < 1) throw Error(ErrorCode::invalid_argument, "raytrace: upsample must be >= 1");
  if (points.cols() == 0) throw Error(ErrorCode::invalid_argument, "raytrace: empty cloud");
  const int w = k.width;
  const int h = k.height;
  const int uw = w * upsample;
  const int uh = h * upsample;
  const double scale = upsample;

  struct Cell {
    double inv_depth = -std::numeric_limits<double>::infinity();
    int idx = -1;
  };
  std::vector<Cell> buffer(static_cast<size_t>(uw) * uh);
  std::vector<Vec2> proj_pixel(points.cols());
  std::vector<double> proj_inv_depth(points.cols());

  const Mat3 r = exp_rotation(pose.omega);
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    const auto p = project_camera_point(r * points.col(i) + pose.t, k);
    if (!p) continue;
    const double cu = std::floor((p->pixel.x() + 0.5) * scale);
    const double cv = std::floor((p->pixel.y() + 0.5) * scale);
    if (!(cu >= 0.0 && cu < uw && cv >= 0.0 && cv < uh)) continue;
    Cell& cell = buffer[static_cast<size_t>(cv) * uw + static_cast<size_t>(cu)];
    // Points are visited in ascending index, so a strict comparison keeps the
    // lowest index on ties.
    if (p->inv_depth > cell.inv_depth) {
      cell.inv_depth = p->inv_depth;
      cell.idx = static_cast<int>(i);
    }
    proj_pixel[i] = p->pixel;
    proj_inv_depth[i] = p->inv_depth;
  }

  std::vector<int> pixel_owner(static_cast<size_t>(w) * h, -1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Cell best;
      for (int dy = 0; dy < upsample; ++dy) {
        const Cell* row = &buffer[static_cast<size_t>(y * upsample + dy) * uw + x * upsample];
        for (int dx = 0; dx < upsample; ++dx) {
          const Cell& c = row[dx];
          if (c.idx < 0) continue;
          if (c.inv_depth > best.inv_depth ||
              (c.inv_depth == best.inv_depth && c.idx < best.idx)) {
            best = c;
          }
        }
      }
      pixel_owner[static_cast<size_t>(y) * w + x] = best.idx;
    }
  }

  RenderedView view;
  view.width = w;
  view.height = h;
  view.invdepth_map = InvDepthMap(w, h);
  view.silhouette = Mask(w, h);
  view.owner.assign(static_cast<size_t>(w) * h, -1);

  // Each point owns at most one pixel (it lands in exactly one cell).
  std::vector<int> point_pixel(points.cols(), -1);
  for (size_t p = 0; p < pixel_owner.size(); ++p) {
    if (pixel_owner[p] >= 0) point_pixel[pixel_owner[p]] = static_cast<int>(p);
  }
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    const int p = point_pixel[i];
    if (p < 0) continue;
    view.owner[p] = static_cast<int>(view.visible_idx.size());
    view.visible_idx.push_back(static_cast<int>(i));
    view.pixels.push_back(proj_pixel[i]);
    view.inv_depth.push_back(proj_inv_depth[i]);
    view.invdepth_map.value[p] = proj_inv_depth[i];
    view.invdepth_map.valid[p] = 1;
    view.silhouette.on[p] = 1;
  }
  view.empty = view.visible_idx.empty();
  return view;
}

inline RenderedView raytrace(const PointCloud& cloud, const Twist& pose, const Intrinsics& k,
                             int upsample = kDefaultUpsample) {
  return raytrace(cloud.points, pose, k, upsample);
}

struct Sample {
  Vec3 color = Vec3::Zero();
  Eigen::Matrix<double, 3, 2> jacobian = Eigen::Matrix<double, 3, 2>::Zero();  // d color / d(u, v)
  bool in_bounds = false;
};

/// Bilinear sample with the exact derivative of the interpolant. Samples that
/// need a neighbor outside the image are flagged out of bounds.
inline Sample sample(const Image& image, const Vec2& u) {
  Sample s;
  const int w = image.width();
  const int h = image.height();
  if (w < 2 || h < 2) return s;
  if (!(u.x() >= 0.0 && u.x() <= w - 1 && u.y() >= 0.0 && u.y() <= h - 1)) return s;
  int x0 = static_cast<int>(std::floor(u.x()));
  int y0 = static_cast<int>(std::floor(u.y()));
  x0 = std::min(x0, w - 2);
  y0 = std::min(y0, h - 2);
  const double fx = u.x() - x0;
  const double fy = u.y() - y0;

  const Vec3 i00 = image.pixel(x0, y0);
  const Vec3 i10 = image.pixel(x0 + 1, y0);
  const Vec3 i01 = image.pixel(x0, y0 + 1);
  const Vec3 i11 = image.pixel(x0 + 1, y0 + 1);
  s.color = (1.0 - fy) * ((1.0 - fx) * i00 + fx * i10) + fy * ((1.0 - fx) * i01 + fx * i11);
  if (image.has_gradients()) {
    s.jacobian.col(0) = (1.0 - fy) * image.forward_dx(x0, y0) + fy * image.forward_dx(x0, y0 + 1);
    s.jacobian.col(1) = (1.0 - fx) * image.forward_dy(x0, y0) + fx * image.forward_dy(x0 + 1, y0);
  } else {
    s.jacobian.col(0) = (1.0 - fy) * (i10 - i00) + fy * (i11 - i01);
    s.jacobian.col(1) = (1.0 - fx) * (i01 - i00) + fx * (i11 - i10);
  }
  s.in_bounds = true;
  return s;
}

/// Centers of silhouette pixels, row-major order.
inline std::vector<Vec2> silhouette_pixels(const RenderedView& view) {
  std::vector<Vec2> out;
  for (int y = 0; y < view.height; ++y) {
    for (int x = 0; x < view.width; ++x) {
      if (view.silhouette(x, y)) out.emplace_back(x, y);
    }
  }
  return out;
}

inline std::vector<Vec2> mask_pixels(const Mask& mask) {
  std::vector<Vec2> out;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask(x, y)) out.emplace_back(x, y);
    }
  }
  return out;
}

}  // namespace spba
