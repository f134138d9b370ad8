// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
//
// Camera math: exponential-map rotations, the additive-translation pose
// composition used throughout the pipeline, and pinhole projection with
// analytic Jacobians.
#pragma once

#include "spba/error.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

namespace spba {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;

inline constexpr double rad_to_deg(double r) { return r * 180.0 / kPi; }
inline constexpr double deg_to_rad(double d) { return d * kPi / 180.0; }

/// Rotation as a plain 3x3 matrix. Kept as an alias: every producer in this
/// library returns a proper rotation; validate with is_rotation() at trust
/// boundaries (file input).
using RotationMatrix = Mat3;

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

inline bool is_rotation(const Mat3& r, double tol = 1e-9) {
  if (!r.allFinite()) return false;
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(r.determinant() - 1.0) <= tol;
}

/// Maps an axis-angle vector onto the principal branch ||omega|| <= pi.
inline Vec3 wrap_rotation_vector(const Vec3& omega) {
  const double theta = omega.norm();
  if (theta <= kPi) return omega;
  double wrapped = std::fmod(theta, 2.0 * kPi);
  if (wrapped > kPi) wrapped -= 2.0 * kPi;
  return omega * (wrapped / theta);
}

/// Camera extrinsic [omega; t]: x_cam = R(omega) x + t.
struct Twist {
  Vec3 omega = Vec3::Zero();
  Vec3 t = Vec3::Zero();

  Twist() = default;
  Twist(const Vec3& rotation, const Vec3& translation)
      : omega(wrap_rotation_vector(rotation)), t(translation) {
    if (!omega.allFinite() || !t.allFinite()) {
      throw Error(ErrorCode::invalid_argument, "twist has non-finite components");
    }
  }

  static Twist from_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
    return Twist(v.segment<3>(0), v.segment<3>(3));
  }

  Eigen::Matrix<double, 6, 1> to_vector() const {
    Eigen::Matrix<double, 6, 1> v;
    v << omega, t;
    return v;
  }

  bool operator==(const Twist&) const = default;
};

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0) || width <= 0 || height <= 0 || !(cx >= 0.0) ||
        !(cx < width) || !(cy >= 0.0) || !(cy < height)) {
      throw Error(ErrorCode::invalid_argument, "invalid camera intrinsics");
    }
  }

  bool operator==(const Intrinsics&) const = default;
};

/// Rodrigues formula; second-order Taylor expansion near the identity.
inline RotationMatrix exp_rotation(const Vec3& omega) {
  if (!omega.allFinite()) {
    throw Error(ErrorCode::invalid_argument, "exp_rotation: non-finite input");
  }
  const double theta = omega.norm();
  const Mat3 k = skew(omega);
  if (theta < 1e-8) return Mat3::Identity() + k + 0.5 * k * k;
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + a * k + b * k * k;
}

/// Left Jacobian of SO(3): exp(omega + d) ~= exp(J_l(omega) d) exp(omega).
inline Mat3 left_jacobian(const Vec3& omega) {
  const double theta = omega.norm();
  const Mat3 k = skew(omega);
  if (theta < 1e-8) return Mat3::Identity() + 0.5 * k + (1.0 / 6.0) * k * k;
  const double t2 = theta * theta;
  const double a = (1.0 - std::cos(theta)) / t2;
  const double b = (theta - std::sin(theta)) / (t2 * theta);
  return Mat3::Identity() + a * k + b * k * k;
}

inline Vec3 log_rotation(const RotationMatrix& r) {
  if (!is_rotation(r, 1e-6)) {
    throw Error(ErrorCode::invalid_argument, "log_rotation: input is not a rotation");
  }
  const Vec3 vee(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double theta = std::atan2(0.5 * vee.norm(), (r.trace() - 1.0) * 0.5);
  if (theta < 1e-6) {
    // sin(theta)/theta -> 1
    return 0.5 * (1.0 + theta * theta / 6.0) * vee;
  }
  if (kPi - theta > 1e-4) {
    return (theta / (2.0 * std::sin(theta))) * vee;
  }
  // Near pi the antisymmetric part vanishes; recover the axis from the
  // symmetric part (R + I)/2 = n n^T + O(pi - theta).
  const Mat3 s = 0.5 * (r + Mat3::Identity());
  int col = 0;
  s.diagonal().maxCoeff(&col);
  Vec3 axis = s.col(col) / std::sqrt(std::max(s(col, col), 1e-300));
  axis.normalize();
  if (axis.dot(vee) < 0.0) axis = -axis;
  return theta * axis;
}

/// Pose composition: rotations multiply, translations add.
inline Twist compose(const Twist& delta, const Twist& base) {
  const RotationMatrix r = exp_rotation(delta.omega) * exp_rotation(base.omega);
  return Twist(log_rotation(r), delta.t + base.t);
}

struct Projection {
  Vec2 pixel;
  double inv_depth = 0.0;
  Vec3 cam;  // camera-frame point
};

inline constexpr double kMinDepth = 1e-6;

/// Projects a camera-frame point. Empty when the depth is at or below min_depth.
inline std::optional<Projection> project_camera_point(const Vec3& cam, const Intrinsics& k,
                                                      double min_depth = kMinDepth) {
  if (!(cam.z() > min_depth)) return std::nullopt;
  const double inv_z = 1.0 / cam.z();
  return Projection{Vec2(k.fx * cam.x() * inv_z + k.cx, k.fy * cam.y() * inv_z + k.cy),
                    inv_z, cam};
}

inline std::optional<Projection> try_project(const Vec3& x, const Twist& pose,
                                             const Intrinsics& k,
                                             double min_depth = kMinDepth) {
  return project_camera_point(exp_rotation(pose.omega) * x + pose.t, k, min_depth);
}

inline Projection project(const Vec3& x, const Twist& pose, const Intrinsics& k,
                          double min_depth = kMinDepth) {
  auto p = try_project(x, pose, k, min_depth);
  if (!p) throw Error(ErrorCode::behind_camera, "project: point is behind the camera");
  return *p;
}

/// d(u, v, inverse depth)/d(camera point).
inline Eigen::Matrix3d projection_derivative(const Vec3& cam, const Intrinsics& k) {
  const double iz = 1.0 / cam.z();
  const double iz2 = iz * iz;
  Eigen::Matrix3d d;
  d << k.fx * iz, 0.0, -k.fx * cam.x() * iz2,
       0.0, k.fy * iz, -k.fy * cam.y() * iz2,
       0.0, 0.0, -iz2;
  return d;
}

struct ProjectionJacobians {
  Eigen::Matrix<double, 3, 6> pose;  // rows: u, v, inverse depth; cols: omega, t
  Eigen::Matrix3d point;
};

inline ProjectionJacobians project_jacobians(const Vec3& x, const Twist& pose,
                                             const Intrinsics& k) {
  const Mat3 r = exp_rotation(pose.omega);
  const Vec3 rx = r * x;
  const Vec3 cam = rx + pose.t;
  if (!(cam.z() > kMinDepth)) {
    throw Error(ErrorCode::behind_camera, "project_jacobians: point is behind the camera");
  }
  const Eigen::Matrix3d dproj = projection_derivative(cam, k);
  ProjectionJacobians j;
  j.pose.leftCols<3>() = dproj * (-skew(rx) * left_jacobian(pose.omega));
  j.pose.rightCols<3>() = dproj;
  j.point = dproj * r;
  return j;
}

/// Camera center in world coordinates, -R^T t.
inline Vec3 camera_center(const Twist& pose) {
  return -exp_rotation(pose.omega).transpose() * pose.t;
}

/// Pose of a camera at `eye` looking at `target` with image y pointing down
/// and `up` pointing up in the image.
inline Twist look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitY()) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-12) right = forward.cross(Vec3::UnitZ());
  right.normalize();
  const Vec3 down = forward.cross(right);
  Mat3 r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  return Twist(log_rotation(r), -r * eye);
}

/// Camera orbiting the origin: azimuth about +y, elevation above the xz-plane.
inline Twist orbit_pose(double azimuth, double elevation, double distance) {
  const Vec3 eye(distance * std::cos(elevation) * std::sin(azimuth),
                 distance * std::sin(elevation),
                 distance * std::cos(elevation) * std::cos(azimuth));
  return look_at(eye, Vec3::Zero());
}

}  // namespace spba
