// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "spba/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace spba {

/// Uniform bucket grid over a 2-D point set for exact nearest-neighbor queries.
class GridIndex2D {
 public:
  struct Hit {
    int index = -1;
    double dist2 = std::numeric_limits<double>::infinity();
  };

  GridIndex2D() = default;
  GridIndex2D(std::span<const Vec2> points, double cell_size) { build(points, cell_size); }

  void build(std::span<const Vec2> points, double cell_size) {
    points_.assign(points.begin(), points.end());
    cell_ = cell_size;
    if (points_.empty()) return;
    min_x_ = max_x_ = points_[0].x();
    min_y_ = max_y_ = points_[0].y();
    for (const auto& p : points_) {
      min_x_ = std::min(min_x_, p.x());
      max_x_ = std::max(max_x_, p.x());
      min_y_ = std::min(min_y_, p.y());
      max_y_ = std::max(max_y_, p.y());
    }
    nx_ = static_cast<int>(std::floor((max_x_ - min_x_) / cell_)) + 1;
    ny_ = static_cast<int>(std::floor((max_y_ - min_y_) / cell_)) + 1;
    start_.assign(static_cast<size_t>(nx_) * ny_ + 1, 0);
    std::vector<int> cell_of(points_.size());
    for (size_t i = 0; i < points_.size(); ++i) {
      cell_of[i] = cell_index(cell_x(points_[i].x()), cell_y(points_[i].y()));
      ++start_[cell_of[i] + 1];
    }
    for (size_t c = 1; c < start_.size(); ++c) start_[c] += start_[c - 1];
    items_.assign(points_.size(), 0);
    std::vector<int> fill(start_.begin(), start_.end() - 1);
    for (size_t i = 0; i < points_.size(); ++i) items_[fill[cell_of[i]]++] = static_cast<int>(i);
  }

  bool empty() const { return points_.empty(); }
  size_t size() const { return points_.size(); }

  /// Exact nearest neighbor; ties resolve to the lowest index.
  Hit nearest(const Vec2& q) const {
    Hit best;
    if (points_.empty()) return best;
    const int qx = static_cast<int>(std::clamp(std::floor((q.x() - min_x_) / cell_), 0.0, nx_ - 1.0));
    const int qy = static_cast<int>(std::clamp(std::floor((q.y() - min_y_) / cell_), 0.0, ny_ - 1.0));
    const int max_ring = std::max(nx_, ny_);
    for (int ring = 0; ring <= max_ring; ++ring) {
      if (ring > 0) {
        // Cells in this ring are at least (ring - 1) cells away.
        const double bound = (ring - 1) * cell_;
        if (bound * bound > best.dist2) break;
      }
      for (int cy = qy - ring; cy <= qy + ring; ++cy) {
        if (cy < 0 || cy >= ny_) continue;
        const bool edge_row = (cy == qy - ring || cy == qy + ring);
        const int step = edge_row ? 1 : 2 * ring;
        for (int cx = qx - ring; cx <= qx + ring; cx += std::max(step, 1)) {
          if (cx < 0 || cx >= nx_) continue;
          const int c = cell_index(cx, cy);
          for (int k = start_[c]; k < start_[c + 1]; ++k) {
            const int i = items_[k];
            const double d2 = (points_[i] - q).squaredNorm();
            if (d2 < best.dist2 || (d2 == best.dist2 && i < best.index)) best = {i, d2};
          }
        }
      }
    }
    return best;
  }

 private:
  int cell_x(double x) const { return static_cast<int>(std::floor((x - min_x_) / cell_)); }
  int cell_y(double y) const { return static_cast<int>(std::floor((y - min_y_) / cell_)); }
  int cell_index(int cx, int cy) const { return cy * nx_ + cx; }

  std::vector<Vec2> points_;
  std::vector<int> start_;
  std::vector<int> items_;
  double cell_ = 1.0;
  double min_x_ = 0.0, max_x_ = 0.0, min_y_ = 0.0, max_y_ = 0.0;
  int nx_ = 0, ny_ = 0;
};

}  // namespace spba
