// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "spba/error.hpp"
#include "spba/geometry.hpp"
#include "spba/image.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace spba {

struct DepthMetrics {
  double depth_error = 0.0;  // mean over frames of mean |d_pred - d_gt| / mean(d_gt)
  double density = 0.0;      // mean over frames of |valid(pred) & valid(gt)| / |valid(gt)|
  std::vector<double> per_frame_error;
  std::vector<double> per_frame_density;
  std::vector<double> pixel_errors;  // normalized |d_pred - d_gt|, every overlapping pixel
};

/// Inverse-depth error of reprojected predictions against ground truth maps.
inline DepthMetrics depth_metrics(std::span<const InvDepthMap> pred,
                                  std::span<const InvDepthMap> gt) {
  if (pred.size() != gt.size() || gt.empty()) {
    throw Error(ErrorCode::invalid_input, "depth_metrics: frame count mismatch or no frames");
  }
  DepthMetrics m;
  double err_sum = 0.0;
  int err_frames = 0;
  for (size_t l = 0; l < gt.size(); ++l) {
    const InvDepthMap& p = pred[l];
    const InvDepthMap& g = gt[l];
    if (p.size() != g.size()) {
      throw Error(ErrorCode::invalid_input, "depth_metrics: resolution mismatch");
    }
    double gt_sum = 0.0;
    size_t gt_count = 0;
    for (size_t i = 0; i < g.size(); ++i) {
      if (!g.valid[i]) continue;
      gt_sum += g.value[i];
      ++gt_count;
    }
    if (gt_count == 0) {
      throw Error(ErrorCode::invalid_input, "depth_metrics: ground truth frame has no valid pixels");
    }
    const double gt_mean = gt_sum / static_cast<double>(gt_count);
    double abs_sum = 0.0;
    size_t overlap = 0;
    for (size_t i = 0; i < g.size(); ++i) {
      if (!g.valid[i] || !p.valid[i]) continue;
      const double e = std::abs(p.value[i] - g.value[i]);
      abs_sum += e;
      m.pixel_errors.push_back(e / gt_mean);
      ++overlap;
    }
    const double density = static_cast<double>(overlap) / static_cast<double>(gt_count);
    m.per_frame_density.push_back(density);
    m.density += density;
    if (overlap > 0) {
      const double e = abs_sum / static_cast<double>(overlap) / gt_mean;
      m.per_frame_error.push_back(e);
      err_sum += e;
      ++err_frames;
    } else {
      m.per_frame_error.push_back(std::nan(""));
    }
  }
  m.density /= static_cast<double>(gt.size());
  m.depth_error = err_frames > 0 ? err_sum / err_frames : std::nan("");
  return m;
}

struct CameraMetrics {
  std::vector<double> location_error;
  std::vector<double> orientation_error_deg;  // angle between principal axes
  std::vector<double> geodesic_error_deg;     // angle of R_pred R_gt^T
  double mean_location_error = 0.0;
  double mean_orientation_error_deg = 0.0;
  double mean_geodesic_error_deg = 0.0;
};

/// Angle between the viewing axes (third rows of R) of two poses, degrees.
inline double principal_axis_angle_deg(const Twist& a, const Twist& b) {
  const Vec3 za = exp_rotation(a.omega).row(2).transpose();
  const Vec3 zb = exp_rotation(b.omega).row(2).transpose();
  return rad_to_deg(std::atan2(za.cross(zb).norm(), za.dot(zb)));
}

inline double geodesic_angle_deg(const Twist& a, const Twist& b) {
  const Mat3 rel = exp_rotation(a.omega) * exp_rotation(b.omega).transpose();
  const Vec3 vee(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  return rad_to_deg(std::atan2(0.5 * vee.norm(), (rel.trace() - 1.0) * 0.5));
}

inline CameraMetrics camera_metrics(std::span<const Twist> pred, std::span<const Twist> gt) {
  if (pred.size() != gt.size()) {
    throw Error(ErrorCode::invalid_argument, "camera_metrics: pose count mismatch");
  }
  CameraMetrics m;
  for (size_t l = 0; l < gt.size(); ++l) {
    m.location_error.push_back((camera_center(pred[l]) - camera_center(gt[l])).norm());
    m.orientation_error_deg.push_back(principal_axis_angle_deg(pred[l], gt[l]));
    m.geodesic_error_deg.push_back(geodesic_angle_deg(pred[l], gt[l]));
  }
  if (!gt.empty()) {
    const double n = static_cast<double>(gt.size());
    for (size_t l = 0; l < gt.size(); ++l) {
      m.mean_location_error += m.location_error[l] / n;
      m.mean_orientation_error_deg += m.orientation_error_deg[l] / n;
      m.mean_geodesic_error_deg += m.geodesic_error_deg[l] / n;
    }
  }
  return m;
}

struct ThresholdCurve {
  double max_error = 0.0;
  std::vector<double> bin_upper;   // upper edge of each bin
  std::vector<double> histogram;   // fraction of errors per bin
  std::vector<double> cumulative;  // fraction of errors <= bin_upper
};

inline constexpr int kThresholdBins = 50;

/// Fixed 50-bin histogram over [0, max_error]; errors above the range land in
/// the last bin.
inline ThresholdCurve threshold_curve(std::span<const double> errors, double max_error = 0.2) {
  if (errors.empty()) throw Error(ErrorCode::invalid_input, "threshold_curve: no errors");
  if (!(max_error > 0.0)) throw Error(ErrorCode::invalid_argument, "threshold_curve: max <= 0");
  ThresholdCurve c;
  c.max_error = max_error;
  std::vector<size_t> counts(kThresholdBins, 0);
  const double width = max_error / kThresholdBins;
  for (double e : errors) {
    int bin = e <= 0.0 ? 0 : static_cast<int>(std::ceil(e / width)) - 1;
    counts[std::clamp(bin, 0, kThresholdBins - 1)]++;
  }
  const double n = static_cast<double>(errors.size());
  size_t running = 0;
  for (int b = 0; b < kThresholdBins; ++b) {
    running += counts[b];
    c.bin_upper.push_back(width * (b + 1));
    c.histogram.push_back(counts[b] / n);
    c.cumulative.push_back(running / n);
  }
  return c;
}

struct EvalReport {
  DepthMetrics depth;
  CameraMetrics camera;
  ThresholdCurve curve;
};

/// Depth, camera and threshold-curve metrics of one predicted sequence.
inline EvalReport evaluate_prediction(std::span<const Twist> pred_poses,
                                      std::span<const InvDepthMap> pred_invdepth,
                                      std::span<const Twist> gt_poses,
                                      std::span<const InvDepthMap> gt_invdepth,
                                      double curve_max = 0.2) {
  EvalReport r;
  r.depth = depth_metrics(pred_invdepth, gt_invdepth);
  r.camera = camera_metrics(pred_poses, gt_poses);
  if (!r.depth.pixel_errors.empty()) r.curve = threshold_curve(r.depth.pixel_errors, curve_max);
  return r;
}

}  // namespace spba
