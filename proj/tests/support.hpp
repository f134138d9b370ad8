// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
//
// Fixtures shared by the unit tests.
#pragma once

#include "spba/geometry.hpp"
#include "spba/shapespace.hpp"
#include "spba/synth.hpp"

#include <Eigen/Core>

#include <random>

namespace spba::testing {

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Vec3(n(rng), n(rng), n(rng)).normalized();
}

/// Rotation vector with norm uniform in [0, max_angle).
inline Vec3 random_rotation_vector(std::mt19937_64& rng, double max_angle = kPi) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return random_unit(rng) * (max_angle * u(rng));
}

inline Twist random_twist(std::mt19937_64& rng, double max_angle = kPi, double t_scale = 1.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Twist(random_rotation_vector(rng, max_angle), t_scale * Vec3(n(rng), n(rng), n(rng)));
}

/// Small category basis: 400 points, 4 modes.
inline const ShapeBasis& small_basis() {
  static const ShapeBasis basis = [] {
    CategoryOptions opt;
    opt.num_points = 400;
    const auto ex = category_exemplars(12, 7, opt);
    return fit_basis(ex, 4);
  }();
  return basis;
}

/// 64x64 noise-free scene over small_basis().
inline SyntheticSpec small_spec(std::uint64_t seed = 1, int frames = 3) {
  SyntheticSpec spec;
  spec.width = 64;
  spec.height = 64;
  spec.focal = 60.0;
  spec.frames = frames;
  spec.rotation_deg = 10.0;
  spec.noise_sigma = 0.0;
  spec.upsample_gt = 4;
  spec.seed = seed;
  return spec;
}

inline Intrinsics test_intrinsics(int w = 64, int h = 64, double f = 60.0) {
  return Intrinsics{f, f, 0.5 * (w - 1), 0.5 * (h - 1), w, h};
}

}  // namespace spba::testing
