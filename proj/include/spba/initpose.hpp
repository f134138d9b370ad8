// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
//
// Coarse initialization from silhouettes: pose retrieval over a grid of
// rendered mean-shape templates, and style selection among seeded samples.
#pragma once

#include "spba/error.hpp"
#include "spba/geometry.hpp"
#include "spba/image.hpp"
#include "spba/renderer.hpp"
#include "spba/shapespace.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace spba {

struct TemplateGridConfig {
  int azimuth_samples = 36;                 // over [0, 2 pi)
  int elevation_samples = 5;                // over [elevation_min, elevation_max]
  double elevation_min = -kPi / 6.0;
  double elevation_max = kPi / 3.0;
  int distance_samples = 5;                 // log-spaced, in shape diameters
  double distance_min = 0.5;
  double distance_max = 4.0;
  int upsample = kDefaultUpsample;

  void validate() const {
    if (azimuth_samples < 1 || elevation_samples < 1 || distance_samples < 1 ||
        !(elevation_max >= elevation_min) || !(distance_min > 0.0) ||
        !(distance_max >= distance_min) || upsample < 1) {
      throw Error(ErrorCode::invalid_argument, "invalid template grid configuration");
    }
  }
  bool operator==(const TemplateGridConfig&) const = default;
};

struct SilhouetteTemplate {
  Twist pose;
  std::vector<std::int32_t> pixels;  // flattened y * width + x, ascending
  Vec2 centroid = Vec2::Zero();
};

struct TemplateGrid {
  TemplateGridConfig config;
  Intrinsics intrinsics;
  std::vector<SilhouetteTemplate> templates;  // azimuth-major, then elevation, then distance

  size_t size() const { return templates.size(); }
};

namespace detail {

inline double grid_value(int i, int n, double lo, double hi) {
  return n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (n - 1);
}

inline Vec2 mask_centroid(const std::vector<std::int32_t>& pixels, int width) {
  Vec2 c = Vec2::Zero();
  for (std::int32_t p : pixels) c += Vec2(p % width, p / width);
  return pixels.empty() ? c : Vec2(c / static_cast<double>(pixels.size()));
}

inline std::vector<std::int32_t> mask_indices(const Mask& m) {
  std::vector<std::int32_t> out;
  for (size_t i = 0; i < m.on.size(); ++i) {
    if (m.on[i]) out.push_back(static_cast<std::int32_t>(i));
  }
  return out;
}

// IoU of `pixels` shifted by an integer offset against the target mask.
inline double shifted_iou(const std::vector<std::int32_t>& pixels, int width, int height, int dx,
                          int dy, const Mask& target, size_t target_count) {
  size_t inter = 0;
  for (std::int32_t p : pixels) {
    const int x = p % width + dx;
    const int y = p / width + dy;
    if (x < 0 || y < 0 || x >= width || y >= height) continue;
    inter += target(x, y);
  }
  const double uni = static_cast<double>(pixels.size() + target_count - inter);
  return uni > 0.0 ? static_cast<double>(inter) / uni : 0.0;
}

inline double iou(const Mask& a, const Mask& b) {
  size_t inter = 0, uni = 0;
  for (size_t i = 0; i < a.on.size(); ++i) {
    inter += a.on[i] && b.on[i];
    uni += a.on[i] || b.on[i];
  }
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

}  // namespace detail

/// Renders the mean shape from every grid pose. Cameras orbit the origin.
inline TemplateGrid build_template_grid(const ShapeBasis& basis, const Intrinsics& k,
                                        const TemplateGridConfig& cfg = {}) {
  basis.validate();
  k.validate();
  cfg.validate();
  const Eigen::Matrix3Xd mean = unflatten(basis.mean);
  const double diameter = PointCloud{mean, {}}.diameter();
  TemplateGrid grid{cfg, k, {}};
  grid.templates.reserve(static_cast<size_t>(cfg.azimuth_samples) * cfg.elevation_samples *
                         cfg.distance_samples);
  for (int a = 0; a < cfg.azimuth_samples; ++a) {
    const double az = 2.0 * kPi * a / cfg.azimuth_samples;
    for (int e = 0; e < cfg.elevation_samples; ++e) {
      const double el = detail::grid_value(e, cfg.elevation_samples, cfg.elevation_min,
                                           cfg.elevation_max);
      for (int d = 0; d < cfg.distance_samples; ++d) {
        const double dist =
            diameter * std::exp(detail::grid_value(d, cfg.distance_samples,
                                                   std::log(cfg.distance_min),
                                                   std::log(cfg.distance_max)));
        SilhouetteTemplate t;
        t.pose = orbit_pose(az, el, dist);
        const RenderedView view = raytrace(mean, t.pose, k, cfg.upsample);
        t.pixels = detail::mask_indices(view.silhouette);
        t.centroid = detail::mask_centroid(t.pixels, k.width);
        grid.templates.push_back(std::move(t));
      }
    }
  }
  return grid;
}

inline constexpr double kRetrievalWarningIoU = 0.05;

struct RetrievalResult {
  Twist pose;
  double iou = 0.0;
  size_t index = 0;
  bool warning = false;  // best IoU below kRetrievalWarningIoU
};

/// Template with the highest centroid-aligned IoU; the alignment shift is
/// folded into the returned translation.
inline RetrievalResult retrieve_pose(const Mask& target, const TemplateGrid& grid) {
  const Intrinsics& k = grid.intrinsics;
  if (target.width != k.width || target.height != k.height) {
    throw Error(ErrorCode::invalid_argument, "retrieve_pose: mask size does not match the grid");
  }
  if (grid.templates.empty()) throw Error(ErrorCode::invalid_argument, "retrieve_pose: empty grid");
  const std::vector<std::int32_t> target_px = detail::mask_indices(target);
  if (target_px.empty()) throw Error(ErrorCode::invalid_argument, "retrieve_pose: empty mask");
  const Vec2 target_c = detail::mask_centroid(target_px, k.width);

  RetrievalResult best;
  best.iou = -1.0;
  for (size_t i = 0; i < grid.templates.size(); ++i) {
    const SilhouetteTemplate& t = grid.templates[i];
    if (t.pixels.empty()) continue;
    const Vec2 shift = target_c - t.centroid;
    const double score =
        detail::shifted_iou(t.pixels, k.width, k.height, static_cast<int>(std::lround(shift.x())),
                            static_cast<int>(std::lround(shift.y())), target, target_px.size());
    if (score > best.iou) {
      best.iou = score;
      best.index = i;
    }
  }
  if (best.iou < 0.0) {
    throw Error(ErrorCode::init_failure, "retrieve_pose: every template silhouette is empty");
  }
  const SilhouetteTemplate& t = grid.templates[best.index];
  const Vec2 shift = target_c - t.centroid;
  const double z = t.pose.t.z();
  best.pose = Twist(t.pose.omega,
                    t.pose.t + Vec3(shift.x() * z / k.fx, shift.y() * z / k.fy, 0.0));
  best.warning = best.iou < kRetrievalWarningIoU;
  return best;
}

enum class StyleInitMode { mean, retrieval };

struct StyleInitOptions {
  StyleInitMode mode = StyleInitMode::mean;
  int samples = 32;
  std::uint64_t seed = 0;
  double style_max = kDefaultStyleMax;
  int upsample = kDefaultUpsample;
};

/// Seeded style candidates, standard normal per mode, clamped to the style ball.
inline std::vector<Eigen::VectorXd> style_candidates(int num_modes, int count, std::uint64_t seed,
                                                     double style_max = kDefaultStyleMax) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::VectorXd> out;
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd s(num_modes);
    for (int m = 0; m < num_modes; ++m) s[m] = normal(rng);
    out.push_back(StyleVector(s, style_max).values());
  }
  return out;
}

/// Mean shape by default; in retrieval mode the candidate with the highest
/// total silhouette IoU over the given frames (first candidate wins ties).
inline StyleVector init_style(std::span<const Mask> masks, std::span<const Twist> poses,
                              const ShapeBasis& basis, const Intrinsics& k,
                              const StyleInitOptions& opt = {}) {
  basis.validate();
  if (opt.mode == StyleInitMode::mean || basis.num_modes() == 0 || opt.samples < 1) {
    return StyleVector::zero(basis.num_modes());
  }
  if (masks.size() != poses.size()) {
    throw Error(ErrorCode::invalid_argument, "init_style: masks and poses differ in length");
  }
  const auto candidates = style_candidates(basis.num_modes(), opt.samples, opt.seed, opt.style_max);
  double best_score = -1.0;
  size_t best = 0;
  for (size_t c = 0; c < candidates.size(); ++c) {
    const Eigen::Matrix3Xd pts = unflatten(generate_flat(basis, candidates[c]));
    double score = 0.0;
    for (size_t l = 0; l < masks.size(); ++l) {
      score += detail::iou(raytrace(pts, poses[l], k, opt.upsample).silhouette, masks[l]);
    }
    if (score > best_score) {
      best_score = score;
      best = c;
    }
  }
  return StyleVector(candidates[best], opt.style_max);
}

}  // namespace spba
