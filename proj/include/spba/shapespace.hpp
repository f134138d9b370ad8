// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
//
// Linear point-cloud shape prior: X = mean + sum_k s_k * sigma_k * mode_k.
#pragma once

#include "spba/error.hpp"
#include "spba/geometry.hpp"

#include <Eigen/Core>
#include <Eigen/SVD>

#include <cmath>
#include <span>
#include <vector>

namespace spba {

struct PointCloud {
  Eigen::Matrix3Xd points;
  Eigen::Matrix3Xd colors;  // empty, or one RGB column per point in [0, 255]

  Eigen::Index size() const { return points.cols(); }
  bool has_colors() const { return colors.cols() == points.cols() && colors.cols() > 0; }

  Vec3 centroid() const {
    return size() > 0 ? Vec3(points.rowwise().mean()) : Vec3::Zero();
  }

  /// Bounding-box diagonal length.
  double diameter() const {
    if (size() == 0) return 0.0;
    return (points.rowwise().maxCoeff() - points.rowwise().minCoeff()).norm();
  }
};

inline constexpr double kDefaultStyleMax = 4.0;

/// Basis coefficients in units of per-mode standard deviation, kept inside
/// the ball ||s|| <= max_norm by radial projection.
class StyleVector {
 public:
  StyleVector() = default;
  explicit StyleVector(Eigen::VectorXd s, double max_norm = kDefaultStyleMax)
      : s_(std::move(s)) {
    if (!s_.allFinite()) {
      throw Error(ErrorCode::invalid_argument, "style vector has non-finite entries");
    }
    const double n = s_.norm();
    if (n > max_norm) s_ *= max_norm / n;
  }

  static StyleVector zero(Eigen::Index dim) { return StyleVector(Eigen::VectorXd::Zero(dim)); }

  const Eigen::VectorXd& values() const { return s_; }
  Eigen::Index size() const { return s_.size(); }

 private:
  Eigen::VectorXd s_;
};

struct ShapeBasis {
  Eigen::VectorXd mean;         // 3N, point-major (x0 y0 z0 x1 ...)
  Eigen::MatrixXd modes;        // 3N x S, orthonormal columns
  Eigen::VectorXd mode_scales;  // S

  Eigen::Index num_points() const { return mean.size() / 3; }
  Eigen::Index num_modes() const { return modes.cols(); }

  /// d(flattened cloud)/ds, constant.
  Eigen::MatrixXd jacobian() const { return modes * mode_scales.asDiagonal(); }

  void validate() const {
    if (mean.size() % 3 != 0 || modes.rows() != mean.size() ||
        mode_scales.size() != modes.cols()) {
      throw Error(ErrorCode::invalid_argument, "shape basis has inconsistent dimensions");
    }
  }
};

inline Eigen::VectorXd flatten(const Eigen::Matrix3Xd& points) {
  return Eigen::Map<const Eigen::VectorXd>(points.data(), points.size());
}

inline Eigen::Matrix3Xd unflatten(const Eigen::VectorXd& flat) {
  return Eigen::Map<const Eigen::Matrix3Xd>(flat.data(), 3, flat.size() / 3);
}

/// PCA over corresponded exemplars. Modes are the top principal directions of
/// the 3N-dimensional residuals; scales are singular values / sqrt(count - 1).
inline ShapeBasis fit_basis(std::span<const PointCloud> exemplars, int num_modes) {
  const auto count = static_cast<Eigen::Index>(exemplars.size());
  if (num_modes < 0 || count < num_modes + 1 || count < 2) {
    throw Error(ErrorCode::insufficient_data,
                "fit_basis: need at least S+1 exemplars (and at least two)");
  }
  const Eigen::Index n = exemplars.front().size();
  if (n == 0) throw Error(ErrorCode::invalid_argument, "fit_basis: empty exemplar");
  for (const auto& e : exemplars) {
    if (e.size() != n || !e.points.allFinite()) {
      throw Error(ErrorCode::invalid_argument,
                  "fit_basis: exemplars must be finite with identical point counts");
    }
  }

  Eigen::MatrixXd data(3 * n, count);
  for (Eigen::Index i = 0; i < count; ++i) data.col(i) = flatten(exemplars[i].points);

  ShapeBasis basis;
  basis.mean = data.rowwise().mean();
  data.colwise() -= basis.mean;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(data, Eigen::ComputeThinU);
  basis.modes = svd.matrixU().leftCols(num_modes);
  basis.mode_scales =
      svd.singularValues().head(num_modes) / std::sqrt(static_cast<double>(count - 1));
  // Sign convention: largest-magnitude entry of each mode is positive.
  for (int k = 0; k < num_modes; ++k) {
    Eigen::Index arg = 0;
    basis.modes.col(k).cwiseAbs().maxCoeff(&arg);
    if (basis.modes(arg, k) < 0.0) basis.modes.col(k) *= -1.0;
  }
  return basis;
}

inline Eigen::VectorXd generate_flat(const ShapeBasis& basis, const Eigen::VectorXd& s) {
  if (s.size() != basis.num_modes()) {
    throw Error(ErrorCode::invalid_argument, "generate: style dimension mismatch");
  }
  return basis.mean + basis.modes * (basis.mode_scales.cwiseProduct(s));
}

inline PointCloud generate(const ShapeBasis& basis, const StyleVector& s) {
  return PointCloud{unflatten(generate_flat(basis, s.values())), {}};
}

/// Least-squares style coefficients of a corresponded cloud (zero for
/// modes with zero scale).
inline Eigen::VectorXd project_to_style(const ShapeBasis& basis, const PointCloud& cloud) {
  const Eigen::VectorXd coeff = basis.modes.transpose() * (flatten(cloud.points) - basis.mean);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(coeff.size());
  for (Eigen::Index k = 0; k < coeff.size(); ++k) {
    if (basis.mode_scales[k] > 0.0) s[k] = coeff[k] / basis.mode_scales[k];
  }
  return s;
}

}  // namespace spba
