// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
//
// Scale and motion alignment between the object-centric camera model and an
// external PBA result related to it by
//   R_l x + t_l = alpha (R'_l x' + t'_l).
#pragma once

#include "spba/error.hpp"
#include "spba/geometry.hpp"
#include "spba/image.hpp"
#include "spba/sequence.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace spba {

/// Our units per external unit.
class ScaleFactor {
 public:
  explicit ScaleFactor(double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      throw Error(ErrorCode::inconsistent_depth, "scale factor must be positive and finite");
    }
  }
  double value() const { return alpha_; }

 private:
  double alpha_;
};

/// argmin_alpha ||d' - alpha d||^2 over pixels valid in both maps.
inline ScaleFactor solve_alpha_invdepth(const InvDepthMap& external, const InvDepthMap& ours) {
  if (external.size() != ours.size()) {
    throw Error(ErrorCode::invalid_argument, "solve_alpha_invdepth: map size mismatch");
  }
  double num = 0.0;
  double den = 0.0;
  size_t count = 0;
  for (size_t p = 0; p < ours.size(); ++p) {
    if (!external.valid[p] || !ours.valid[p]) continue;
    num += external.value[p] * ours.value[p];
    den += ours.value[p] * ours.value[p];
    ++count;
  }
  if (count == 0 || den == 0.0) {
    throw Error(ErrorCode::no_overlap, "solve_alpha_invdepth: no overlapping valid pixels");
  }
  const double alpha = num / den;
  if (!(alpha > 0.0)) {
    throw Error(ErrorCode::inconsistent_depth, "solve_alpha_invdepth: non-positive scale");
  }
  return ScaleFactor(alpha);
}

/// Relative motions dp_l such that compose(dp_l, p0) reproduces the external
/// motion of frame l:
///   dR_l = R'_l R'_0^T
///   dt_l = dR_l t_0 - t_0 + alpha (t'_l - dR_l t'_0)
inline std::vector<Twist> init_motion(const Twist& p0, const ExternalPBAResult& ext,
                                      const ScaleFactor& alpha) {
  if (ext.size() < 2) throw Error(ErrorCode::invalid_argument, "init_motion: need L >= 2");
  ext.validate(ext.size());
  const double a = alpha.value();
  std::vector<Twist> deltas;
  deltas.reserve(ext.size() - 1);
  for (size_t l = 1; l < ext.size(); ++l) {
    const Mat3 dr = ext.rotations[l] * ext.rotations[0].transpose();
    const Vec3 dt = dr * p0.t - p0.t + a * (ext.translations[l] - dr * ext.translations[0]);
    deltas.emplace_back(log_rotation(dr), dt);
  }
  return deltas;
}

/// Per-frame closed-form alpha_l at the evaluation point x, averaged over
/// frames with a non-degenerate external baseline.
inline ScaleFactor solve_alpha_poses(const Twist& p0, std::span<const Twist> deltas,
                                     const ExternalPBAResult& ext, const Vec3& x_eval) {
  if (deltas.empty() || ext.size() != deltas.size() + 1) {
    throw Error(ErrorCode::invalid_argument, "solve_alpha_poses: need L >= 2 matching frames");
  }
  const Mat3 r0 = exp_rotation(p0.omega);
  const Vec3 cam0 = r0 * x_eval + p0.t;
  double sum = 0.0;
  int used = 0;
  for (size_t l = 1; l < ext.size(); ++l) {
    const Mat3 rel = ext.rotations[l] * ext.rotations[0].transpose();
    const Vec3 b = ext.translations[l] - rel * ext.translations[0];
    const double bb = b.squaredNorm();
    if (std::sqrt(bb) < 1e-12) continue;
    const Mat3 rl = exp_rotation(deltas[l - 1].omega) * r0;
    const Vec3 tl = deltas[l - 1].t + p0.t;
    const Vec3 a = rl * x_eval + tl - rel * cam0;
    sum += a.dot(b) / bb;
    ++used;
  }
  if (used == 0) {
    throw Error(ErrorCode::stationary_camera, "solve_alpha_poses: external cameras are stationary");
  }
  const double alpha = sum / used;
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::inconsistent_depth, "solve_alpha_poses: non-positive scale");
  }
  return ScaleFactor(alpha);
}

/// World-frame poses for external cameras: frame 0 is anchored at
/// `gt_first_pose` and relative external motion is carried over at scale alpha.
inline std::vector<Twist> align_external_for_eval(const ExternalPBAResult& ext,
                                                  const Twist& gt_first_pose,
                                                  const ScaleFactor& alpha) {
  if (ext.size() == 0) return {};
  ext.validate(ext.size());
  std::vector<Twist> out{gt_first_pose};
  if (ext.size() == 1) return out;
  for (const Twist& d : init_motion(gt_first_pose, ext, alpha)) {
    out.push_back(compose(d, gt_first_pose));
  }
  return out;
}

/// Residual of the external relation for frame l at world point x:
///   (R_l x + t_l) - [dR_l (R_0 x + t_0) + alpha (t'_l - dR_l t'_0)].
inline double motion_residual(const Twist& p0, const Twist& pose_l, size_t l,
                              const ExternalPBAResult& ext, double alpha, const Vec3& x) {
  const Mat3 dr = ext.rotations[l] * ext.rotations[0].transpose();
  const Vec3 lhs = exp_rotation(pose_l.omega) * x + pose_l.t;
  const Vec3 rhs = dr * (exp_rotation(p0.omega) * x + p0.t) +
                   alpha * (ext.translations[l] - dr * ext.translations[0]);
  return (lhs - rhs).norm();
}

}  // namespace spba
