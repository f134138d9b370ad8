// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic small-motion sequences with full ground truth: a procedurally
// textured instance of the shape prior, orbiting cameras, noisy images,
// silhouettes, inverse-depth maps, and a fabricated external PBA result that
// differs from the ground truth by a planted similarity.
#pragma once

#include "spba/alignment.hpp"
#include "spba/error.hpp"
#include "spba/geometry.hpp"
#include "spba/image.hpp"
#include "spba/renderer.hpp"
#include "spba/sequence.hpp"
#include "spba/shapespace.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace spba {

// ---------------------------------------------------------------------------
// Procedural category: car-like shapes built from two superellipsoids (body
// and cabin). Point i always comes from the same sphere direction, so all
// exemplars are in correspondence.

struct CategoryOptions {
  int num_points = 2000;
  double body_fraction = 0.6;
};

namespace detail {

inline Vec3 fibonacci_direction(int i, int n) {
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  const double y = 1.0 - 2.0 * (i + 0.5) / n;
  const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
  const double phi = golden * i;
  return Vec3(r * std::cos(phi), y, r * std::sin(phi));
}

inline Vec3 superellipsoid_point(const Vec3& dir, const Vec3& semi_axes, double exponent) {
  double acc = 0.0;
  for (int k = 0; k < 3; ++k) acc += std::pow(std::abs(dir[k]) / semi_axes[k], exponent);
  return dir * std::pow(acc, -1.0 / exponent);
}

}  // namespace detail

/// Random member of the category, normalized to a unit bounding-box diagonal
/// and centered at the origin. Length runs along x (front at +x), up is +y.
inline PointCloud category_instance(std::mt19937_64& rng, const CategoryOptions& opt = {}) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  const double length = range(3.8, 4.8);
  const double width = range(1.6, 2.0);
  const double body_h = range(0.7, 1.0);
  const double body_p = range(3.0, 5.0);
  const double cabin_len = length * range(0.4, 0.55);
  const double cabin_h = range(0.6, 0.9);
  const double cabin_w = width * range(0.8, 0.92);
  const double cabin_off = length * range(0.06, 0.18);
  const double cabin_p = range(2.5, 4.0);

  const int n = opt.num_points;
  const int n_body = static_cast<int>(std::lround(opt.body_fraction * n));
  PointCloud cloud;
  cloud.points.resize(3, n);
  const Vec3 body_axes(length / 2, body_h / 2, width / 2);
  const Vec3 cabin_axes(cabin_len / 2, cabin_h / 2, cabin_w / 2);
  for (int i = 0; i < n_body; ++i) {
    cloud.points.col(i) = detail::superellipsoid_point(detail::fibonacci_direction(i, n_body),
                                                       body_axes, body_p) +
                          Vec3(0.0, body_h / 2, 0.0);
  }
  for (int i = n_body; i < n; ++i) {
    cloud.points.col(i) =
        detail::superellipsoid_point(detail::fibonacci_direction(i - n_body, n - n_body),
                                     cabin_axes, cabin_p) +
        Vec3(-cabin_off, body_h + 0.3 * cabin_h, 0.0);
  }
  const Vec3 lo = cloud.points.rowwise().minCoeff();
  const Vec3 hi = cloud.points.rowwise().maxCoeff();
  cloud.points.colwise() -= 0.5 * (lo + hi);
  cloud.points /= (hi - lo).norm();
  return cloud;
}

inline std::vector<PointCloud> category_exemplars(int count, std::uint64_t seed,
                                                  const CategoryOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  std::vector<PointCloud> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(category_instance(rng, opt));
  return out;
}

// ---------------------------------------------------------------------------
// Smooth 3-D color field (value noise, two octaves).

class ValueNoiseColor {
 public:
  ValueNoiseColor(std::uint64_t seed, double frequency) : seed_(seed), frequency_(frequency) {}

  Vec3 operator()(const Vec3& x) const {
    Vec3 c = Vec3::Zero();
    c += 0.7 * octave(x * frequency_, 0);
    c += 0.3 * octave(x * (2.0 * frequency_), 1);
    return Vec3::Constant(30.0) + 195.0 * c;
  }

 private:
  static std::uint64_t mix(std::uint64_t h) {
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    h *= 0xc4ceb9fe1a85ec53ULL;
    h ^= h >> 33;
    return h;
  }

  double lattice(std::int64_t i, std::int64_t j, std::int64_t k, int channel, int octave) const {
    std::uint64_t h = seed_ * 0x9E3779B97F4A7C15ULL;
    h = mix(h ^ static_cast<std::uint64_t>(i) * 0x8da6b343ULL);
    h = mix(h ^ static_cast<std::uint64_t>(j) * 0xd8163841ULL);
    h = mix(h ^ static_cast<std::uint64_t>(k) * 0xcb1ab31fULL);
    h = mix(h ^ static_cast<std::uint64_t>(channel * 16 + octave));
    return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
  }

  static double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

  Vec3 octave(const Vec3& p, int oct) const {
    const double fx = std::floor(p.x()), fy = std::floor(p.y()), fz = std::floor(p.z());
    const auto i = static_cast<std::int64_t>(fx);
    const auto j = static_cast<std::int64_t>(fy);
    const auto k = static_cast<std::int64_t>(fz);
    const double tx = smooth(p.x() - fx), ty = smooth(p.y() - fy), tz = smooth(p.z() - fz);
    Vec3 out;
    for (int c = 0; c < 3; ++c) {
      double v = 0.0;
      for (int dz = 0; dz < 2; ++dz) {
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const double w = (dx ? tx : 1 - tx) * (dy ? ty : 1 - ty) * (dz ? tz : 1 - tz);
            v += w * lattice(i + dx, j + dy, k + dz, c, oct);
          }
        }
      }
      out[c] = v;
    }
    return out;
  }

  std::uint64_t seed_;
  double frequency_;
};

// ---------------------------------------------------------------------------

struct SyntheticSpec {
  std::optional<Eigen::VectorXd> style;  // true style; drawn when absent
  double style_sigma = 0.7;              // per-mode std of drawn styles
  int frames = 9;
  double rotation_deg = 30.0;            // total orbit across the sequence
  double translation = 0.05;             // look-at drift across the sequence
  int width = 128;
  int height = 128;
  double focal = 100.0;
  std::optional<double> azimuth_deg;     // drawn in [0, 360) when absent
  std::optional<double> elevation_deg;   // drawn in [15, 35] when absent
  std::optional<double> distance;        // drawn in [2.2, 2.8] x diameter when absent
  double texture_frequency = 2.0;        // lattice cells per unit length
  double noise_sigma = 2.0;
  Vec3 background = Vec3(96.0, 104.0, 112.0);  // flat background when frequency is 0
  double background_frequency = 4.0;             // environment texture, cells per radian
  int upsample_gt = 2 * kDefaultUpsample;
  // fabricated external PBA
  double alpha_star = 2.0;
  double ext_rotation_noise_deg = 0.5;  // about each camera center
  double ext_translation_noise = 0.0;    // external units
  double ext_hole_fraction = 0.3;
  double ext_depth_noise = 0.0;          // relative
  std::uint64_t seed = 1;

  void validate() const {
    if (frames < 2 || width < 2 || height < 2 || !(focal > 0.0) || upsample_gt < 1 ||
        !(noise_sigma >= 0.0) || !(alpha_star > 0.0) || !(ext_hole_fraction >= 0.0) ||
        !(ext_hole_fraction < 1.0) || !(texture_frequency > 0.0) ||
        !(background_frequency >= 0.0)) {
      throw Error(ErrorCode::invalid_spec, "invalid synthetic spec");
    }
  }
};

struct GroundTruth {
  std::vector<Twist> poses;  // global pose per frame
  Eigen::VectorXd style;
  PointCloud cloud;          // with colors
  std::vector<InvDepthMap> invdepth;
  std::vector<Mask> silhouettes;
  double alpha_star = 1.0;
  Mat3 ext_rotation = Mat3::Identity();  // x' = (Q x + q) / alpha*
  Vec3 ext_translation = Vec3::Zero();
};

struct SyntheticData {
  Sequence sequence;
  GroundTruth truth;
};

/// Relative motions of ground-truth global poses: dR = R_l R_0^T, dt = t_l - t_0.
inline std::vector<Twist> relative_motions(std::span<const Twist> poses) {
  std::vector<Twist> out;
  const Mat3 r0t = exp_rotation(poses[0].omega).transpose();
  for (size_t l = 1; l < poses.size(); ++l) {
    out.emplace_back(log_rotation(exp_rotation(poses[l].omega) * r0t), poses[l].t - poses[0].t);
  }
  return out;
}

/// Colors each image pixel from the visible surface point under it; pixels
/// are back-projected to the visible point's depth before the field lookup.
/// Uncovered pixels look up `environment` by world viewing direction, or get
/// the flat `background` color when no environment is given.
inline Image shade(const RenderedView& view, const Twist& pose, const Intrinsics& k,
                   const ValueNoiseColor& field, const Vec3& background,
                   const ValueNoiseColor* environment = nullptr) {
  Image img(k.width, k.height);
  const Mat3 rt = exp_rotation(pose.omega).transpose();
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      const int o = view.owner[static_cast<size_t>(y) * k.width + x];
      if (o < 0) {
        if (environment) {
          const Vec3 ray((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
          img.set_pixel(x, y, (*environment)(rt * ray.normalized()));
        } else {
          img.set_pixel(x, y, background);
        }
        continue;
      }
      const double z = 1.0 / view.inv_depth[o];
      const Vec3 cam(z * (x - k.cx) / k.fx, z * (y - k.cy) / k.fy, z);
      img.set_pixel(x, y, field(rt * (cam - pose.t)));
    }
  }
  return img;
}

inline SyntheticData generate_sequence(const SyntheticSpec& spec, const ShapeBasis& basis) {
  spec.validate();
  basis.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  SyntheticData out;
  GroundTruth& gt = out.truth;
  if (spec.style) {
    if (spec.style->size() != basis.num_modes()) {
      throw Error(ErrorCode::invalid_spec, "synthetic spec style dimension mismatch");
    }
    gt.style = StyleVector(*spec.style).values();
  } else {
    gt.style = Eigen::VectorXd(basis.num_modes());
    for (Eigen::Index k = 0; k < gt.style.size(); ++k) gt.style[k] = spec.style_sigma * normal(rng);
    gt.style = StyleVector(gt.style).values();
  }
  gt.cloud = generate(basis, StyleVector(gt.style));
  const double diameter = PointCloud{unflatten(basis.mean), {}}.diameter();

  const double az0 = deg_to_rad(spec.azimuth_deg ? *spec.azimuth_deg : 360.0 * uni(rng));
  const double el0 = deg_to_rad(spec.elevation_deg ? *spec.elevation_deg : 15.0 + 20.0 * uni(rng));
  const double dist = spec.distance ? *spec.distance : diameter * (2.2 + 0.6 * uni(rng));
  const Vec3 drift_dir = Vec3(normal(rng), 0.3 * normal(rng), normal(rng)).normalized();
  const std::uint64_t texture_seed = rng();
  const std::uint64_t background_seed = rng();

  Intrinsics& k = out.sequence.intrinsics;
  k = Intrinsics{spec.focal, spec.focal, 0.5 * (spec.width - 1), 0.5 * (spec.height - 1),
                 spec.width, spec.height};

  const ValueNoiseColor field(texture_seed, spec.texture_frequency);
  std::optional<ValueNoiseColor> environment;
  if (spec.background_frequency > 0.0) environment.emplace(background_seed, spec.background_frequency);
  gt.cloud.colors.resize(3, gt.cloud.size());
  for (Eigen::Index i = 0; i < gt.cloud.size(); ++i) {
    gt.cloud.colors.col(i) = field(gt.cloud.points.col(i));
  }

  const double span = deg_to_rad(spec.rotation_deg);
  for (int l = 0; l < spec.frames; ++l) {
    const double f = spec.frames > 1 ? static_cast<double>(l) / (spec.frames - 1) : 0.0;
    const double az = az0 + f * span;
    const Vec3 eye(dist * std::cos(el0) * std::sin(az), dist * std::sin(el0),
                   dist * std::cos(el0) * std::cos(az));
    const Vec3 target = f * spec.translation * drift_dir;
    gt.poses.push_back(look_at(eye + target, target));
  }

  for (int l = 0; l < spec.frames; ++l) {
    const RenderedView view = raytrace(gt.cloud.points, gt.poses[l], k, spec.upsample_gt);
    if (view.empty) {
      throw Error(ErrorCode::invalid_spec, "synthetic object is outside the frustum of a frame");
    }
    Image img = shade(view, gt.poses[l], k, field, spec.background,
                      environment ? &*environment : nullptr);
    if (spec.noise_sigma > 0.0) {
      for (int y = 0; y < k.height; ++y) {
        for (int x = 0; x < k.width; ++x) {
          for (int c = 0; c < 3; ++c) {
            img.at(x, y, c) = std::clamp(img.at(x, y, c) + spec.noise_sigma * normal(rng), 0.0, 255.0);
          }
        }
      }
    }
    img.update_gradients();
    out.sequence.frames.push_back(Frame{std::move(img), view.silhouette});
    gt.invdepth.push_back(view.invdepth_map);
    gt.silhouettes.push_back(view.silhouette);
  }

  // External result: x' = (Q x + q) / alpha*, so R'_l = R_l Q^T and
  // t'_l = (t_l - R_l Q^T q) / alpha*; inverse depth scales by alpha*.
  gt.alpha_star = spec.alpha_star;
  gt.ext_rotation = exp_rotation(Vec3(normal(rng), normal(rng), normal(rng)).normalized() *
                                 (kPi * uni(rng) * 0.9));
  gt.ext_translation = Vec3(normal(rng), normal(rng), normal(rng));
  ExternalPBAResult ext;
  const double rot_noise = deg_to_rad(spec.ext_rotation_noise_deg);
  for (int l = 0; l < spec.frames; ++l) {
    const Mat3 rl = exp_rotation(gt.poses[l].omega);
    Mat3 r_ext = rl * gt.ext_rotation.transpose();
    Vec3 t_ext = (gt.poses[l].t - r_ext * gt.ext_translation) / spec.alpha_star;
    if (rot_noise > 0.0) {
      const Vec3 axis = Vec3(normal(rng), normal(rng), normal(rng)).normalized();
      const Vec3 center = -r_ext.transpose() * t_ext;
      r_ext = exp_rotation(axis * rot_noise) * r_ext;
      t_ext = -r_ext * center;
    }
    if (spec.ext_translation_noise > 0.0) {
      t_ext += spec.ext_translation_noise * Vec3(normal(rng), normal(rng), normal(rng));
    }
    ext.rotations.push_back(r_ext);
    ext.translations.push_back(t_ext);

    InvDepthMap d = gt.invdepth[l];
    for (size_t p = 0; p < d.size(); ++p) {
      if (!d.valid[p]) continue;
      const double hole = uni(rng);
      const double noise = normal(rng);
      if (hole < spec.ext_hole_fraction) {
        d.valid[p] = 0;
        d.value[p] = 0.0;
        continue;
      }
      d.value[p] *= spec.alpha_star * (1.0 + spec.ext_depth_noise * noise);
    }
    ext.invdepth_maps.emplace_back(std::move(d));
  }
  out.sequence.external = std::move(ext);
  out.sequence.validate();
  return out;
}

}  // namespace spba
