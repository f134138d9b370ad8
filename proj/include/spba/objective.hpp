// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
//
// Combined objective: bi-directional photometric consistency, silhouette
// Chamfer distance and inverse-depth agreement, with analytic gradients with
// respect to the target pose p0, the relative motions dp_l and the style s.
//
// Visibility is recomputed on every evaluation and treated as constant under
// differentiation.
#pragma once

#include "spba/error.hpp"
#include "spba/geometry.hpp"
#include "spba/image.hpp"
#include "spba/nn_grid.hpp"
#include "spba/renderer.hpp"
#include "spba/sequence.hpp"
#include "spba/shapespace.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spba {

struct ObjectiveConfig {
  double lambda1 = 0.1;    // silhouette Chamfer weight
  double delta1 = 100.0;   // photometric Huber knee, RGB units in [0, 255]
  double lambda2 = 1000.0; // inverse-depth weight
  double delta2 = 10.0;    // inverse-depth Huber knee
  int upsample = kDefaultUpsample;
  double empty_silhouette_penalty = 1e6;
  int mask_pixel_cap = 4096;

  void validate() const {
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !(delta1 > 0.0) || !(delta2 > 0.0) ||
        upsample < 1 || mask_pixel_cap < 1 || !(empty_silhouette_penalty >= 0.0)) {
      throw Error(ErrorCode::invalid_argument, "invalid objective configuration");
    }
  }
};

struct LossBreakdown {
  double l_ph = 0.0;
  double l_cd = 0.0;
  double l_invd = 0.0;
  double total = 0.0;
  double alpha = 1.0;
  size_t ph_residuals = 0;
  size_t cd_residuals = 0;
  size_t invd_residuals = 0;
  size_t empty_silhouette_frames = 0;
  bool invd_no_overlap = false;
};

/// One CSV row: iter,l_ph,l_cd,l_invd,total,alpha
inline std::string loss_csv_header() { return "iter,l_ph,l_cd,l_invd,total,alpha\n"; }
inline std::string loss_csv_row(int iter, const LossBreakdown& b) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", iter, b.l_ph, b.l_cd,
                b.l_invd, b.total, b.alpha);
  return buf;
}

inline double huber(double r, double delta) {
  const double a = std::abs(r);
  return a <= delta ? 0.5 * a * a : delta * (a - 0.5 * delta);
}

/// d huber(r) / dr for signed r.
inline double huber_derivative(double r, double delta) {
  if (std::abs(r) <= delta) return r;
  return r > 0.0 ? delta : -delta;
}

/// Huber of the Euclidean norm of a residual vector, and its gradient.
inline double huber_norm(const Vec3& r, double delta, Vec3* grad) {
  const double n = r.norm();
  if (n <= delta) {
    if (grad) *grad = r;
    return 0.5 * n * n;
  }
  if (grad) *grad = (delta / n) * r;
  return delta * (n - 0.5 * delta);
}

/// Optimization variables shared by the objective and the solver.
struct Parameters {
  Twist p0;
  std::vector<Twist> deltas;  // L - 1 relative motions
  Eigen::VectorXd s;
  double alpha = 1.0;

  size_t frames() const { return deltas.size() + 1; }
  Eigen::Index gradient_size() const {
    return static_cast<Eigen::Index>(6 * frames()) + s.size();
  }
};

/// Global pose of frame l: p0 for l == 0, compose(dp_l, p0) otherwise.
inline Twist frame_pose(const Parameters& p, size_t l) {
  return l == 0 ? p.p0 : compose(p.deltas[l - 1], p.p0);
}

namespace detail {

struct FrameGeometry {
  Mat3 r_delta = Mat3::Identity();
  Vec3 omega_delta = Vec3::Zero();
  Mat3 r;
  Vec3 t;
  std::vector<std::optional<Projection>> proj;  // every point
};

inline std::vector<FrameGeometry> frame_geometry(const Twist& p0, std::span<const Twist> deltas,
                                                 const Eigen::Matrix3Xd& points,
                                                 const Intrinsics& k) {
  const Mat3 r0 = exp_rotation(p0.omega);
  std::vector<FrameGeometry> out(deltas.size() + 1);
  for (size_t l = 0; l < out.size(); ++l) {
    FrameGeometry& g = out[l];
    if (l > 0) {
      g.omega_delta = deltas[l - 1].omega;
      g.r_delta = exp_rotation(g.omega_delta);
      g.t = deltas[l - 1].t + p0.t;
    } else {
      g.t = p0.t;
    }
    g.r = g.r_delta * r0;
    g.proj.resize(points.cols());
    for (Eigen::Index i = 0; i < points.cols(); ++i) {
      g.proj[i] = project_camera_point(g.r * points.col(i) + g.t, k);
    }
  }
  return out;
}

/// Gradient of the loss with respect to (u, v, inverse depth) of every point
/// in every frame.
class ProjectionGradients {
 public:
  ProjectionGradients(size_t frames, Eigen::Index points)
      : points_(points), g_(frames * static_cast<size_t>(points), Vec3::Zero()) {}
  Vec3& at(size_t l, Eigen::Index i) { return g_[l * points_ + i]; }
  const Vec3& at(size_t l, Eigen::Index i) const { return g_[l * points_ + i]; }
  Eigen::Index points() const { return points_; }

 private:
  Eigen::Index points_;
  std::vector<Vec3> g_;
};

/// Chains projection gradients to [p0 | dp_1..dp_{L-1}] and to the points.
inline void chain_to_parameters(std::span<const FrameGeometry> geoms, const Twist& p0,
                                const ProjectionGradients& pg, const Intrinsics& k,
                                Eigen::Ref<Eigen::VectorXd> grad_poses,
                                Eigen::Ref<Eigen::VectorXd> grad_points) {
  const Mat3 j0t = left_jacobian(p0.omega).transpose();
  for (size_t l = 0; l < geoms.size(); ++l) {
    const FrameGeometry& g = geoms[l];
    Vec3 a_sum = Vec3::Zero();
    Vec3 t_sum = Vec3::Zero();
    const Mat3 rt = g.r.transpose();
    for (Eigen::Index i = 0; i < pg.points(); ++i) {
      const Vec3& gp = pg.at(l, i);
      if (gp.isZero(0.0) || !g.proj[i]) continue;
      const Vec3 gy = projection_derivative(g.proj[i]->cam, k).transpose() * gp;
      grad_points.segment<3>(3 * i) += rt * gy;
      a_sum += (g.proj[i]->cam - g.t).cross(gy);
      t_sum += gy;
    }
    if (l == 0) {
      grad_poses.segment<3>(0) += j0t * a_sum;
      grad_poses.segment<3>(3) += t_sum;
    } else {
      grad_poses.segment<3>(6 * l) += left_jacobian(g.omega_delta).transpose() * a_sum;
      grad_poses.segment<3>(6 * l + 3) += t_sum;
      grad_poses.segment<3>(0) += j0t * (g.r_delta.transpose() * a_sum);
      grad_poses.segment<3>(3) += t_sum;
    }
  }
}

/// Rebuilds views with a fixed visible set but current projections.
inline std::vector<RenderedView> reproject_views(std::span<const RenderedView> frozen,
                                                 std::span<const FrameGeometry> geoms) {
  std::vector<RenderedView> out(frozen.begin(), frozen.end());
  for (size_t l = 0; l < out.size(); ++l) {
    RenderedView& v = out[l];
    for (size_t k = 0; k < v.visible_idx.size(); ++k) {
      const auto& p = geoms[l].proj[v.visible_idx[k]];
      if (!p) continue;
      v.pixels[k] = p->pixel;
      v.inv_depth[k] = p->inv_depth;
    }
    for (size_t px = 0; px < v.owner.size(); ++px) {
      if (v.owner[px] >= 0) v.invdepth_map.value[px] = v.inv_depth[v.owner[px]];
    }
  }
  return out;
}

struct TermValue {
  double value = 0.0;
  size_t count = 0;
};

/// Photometric term over all source frames. Each directional sum is divided
/// by its residual count.
inline TermValue photometric_term(const Sequence& seq, std::span<const FrameGeometry> geoms,
                                  std::span<const RenderedView> views, double delta,
                                  ProjectionGradients* grad, double weight) {
  struct Residual {
    int point;
    Vec3 g;  // d huber / d r
    Eigen::Matrix<double, 3, 2> j_a;
    Eigen::Matrix<double, 3, 2> j_b;
  };
  TermValue out;
  std::vector<Residual> residuals;
  const Image& target = seq.frames[0].image;
  for (size_t l = 1; l < geoms.size(); ++l) {
    const Image& source = seq.frames[l].image;
    // dir 0: target-visible points, r = I0(u0) - Il(ul)
    // dir 1: source-visible points, r = Il(ul) - I0(u0)
    for (int dir = 0; dir < 2; ++dir) {
      const RenderedView& view = dir == 0 ? views[0] : views[l];
      const size_t a_frame = dir == 0 ? 0 : l;
      const size_t b_frame = dir == 0 ? l : 0;
      const Image& img_a = dir == 0 ? target : source;
      const Image& img_b = dir == 0 ? source : target;
      residuals.clear();
      double sum = 0.0;
      for (int i : view.visible_idx) {
        const auto& pa = geoms[a_frame].proj[i];
        const auto& pb = geoms[b_frame].proj[i];
        if (!pa || !pb) continue;
        const Sample sa = sample(img_a, pa->pixel);
        if (!sa.in_bounds) continue;
        const Sample sb = sample(img_b, pb->pixel);
        if (!sb.in_bounds) continue;
        Vec3 g;
        sum += huber_norm(sa.color - sb.color, delta, grad ? &g : nullptr);
        if (grad) residuals.push_back({i, g, sa.jacobian, sb.jacobian});
        else residuals.push_back({i, Vec3::Zero(), {}, {}});
      }
      if (residuals.empty()) continue;
      const double n = static_cast<double>(residuals.size());
      out.value += sum / n;
      out.count += residuals.size();
      if (!grad) continue;
      const double scale = weight / n;
      for (const Residual& r : residuals) {
        const Eigen::Vector2d ga = scale * (r.j_a.transpose() * r.g);
        const Eigen::Vector2d gb = -scale * (r.j_b.transpose() * r.g);
        grad->at(a_frame, r.point).head<2>() += ga;
        grad->at(b_frame, r.point).head<2>() += gb;
      }
    }
  }
  return out;
}

}  // namespace detail

/// One-sided-pair Chamfer: sum_a min_b |a-b|^2 + sum_b min_a |b-a|^2.
/// Gradient is with respect to the points of `b`.
struct ChamferValue {
  double value = 0.0;
  std::vector<Vec2> grad_b;
};

inline ChamferValue chamfer_distance(std::span<const Vec2> a, std::span<const Vec2> b,
                                     const GridIndex2D* a_index = nullptr,
                                     bool with_gradient = true) {
  ChamferValue out;
  if (with_gradient) out.grad_b.assign(b.size(), Vec2::Zero());
  if (a.empty() || b.empty()) return out;
  GridIndex2D local_a;
  if (!a_index) {
    local_a.build(a, 2.0);
    a_index = &local_a;
  }
  const GridIndex2D b_index(b, 2.0);
  for (const Vec2& u : a) {
    const auto hit = b_index.nearest(u);
    out.value += hit.dist2;
    if (with_gradient) out.grad_b[hit.index] += 2.0 * (b[hit.index] - u);
  }
  for (size_t j = 0; j < b.size(); ++j) {
    const auto hit = a_index->nearest(b[j]);
    out.value += hit.dist2;
    if (with_gradient) out.grad_b[j] += 2.0 * (b[j] - a[hit.index]);
  }
  return out;
}

/// Uniform-stride subsample to at most `cap` pixels.
inline std::vector<Vec2> cap_pixels(std::vector<Vec2> pixels, int cap) {
  if (static_cast<int>(pixels.size()) <= cap) return pixels;
  std::vector<Vec2> out;
  out.reserve(cap);
  const double stride = static_cast<double>(pixels.size()) / cap;
  for (int i = 0; i < cap; ++i) out.push_back(pixels[static_cast<size_t>(i * stride)]);
  return out;
}

struct ChamferLoss {
  double value = 0.0;
  size_t residuals = 0;
  size_t empty_frames = 0;
  std::vector<std::vector<Vec2>> grad_pixels;  // per frame, per visible point
};

/// (1/L) sum over frames of the Chamfer distance between mask pixels and the
/// rendered visible-point pixels. Frames without mask pixels are skipped;
/// frames whose render is empty add `empty_penalty` with zero gradient.
inline ChamferLoss chamfer_loss(std::span<const std::vector<Vec2>> mask_px,
                                std::span<const RenderedView> views,
                                double empty_penalty = 1e6,
                                std::span<const GridIndex2D> mask_index = {},
                                bool with_gradient = true) {
  if (mask_px.size() != views.size()) {
    throw Error(ErrorCode::invalid_argument, "chamfer_loss: frame count mismatch");
  }
  ChamferLoss out;
  out.grad_pixels.resize(views.size());
  const double inv_l = 1.0 / static_cast<double>(views.size());
  for (size_t l = 0; l < views.size(); ++l) {
    out.grad_pixels[l].assign(views[l].pixels.size(), Vec2::Zero());
    if (mask_px[l].empty()) continue;
    if (views[l].pixels.empty()) {
      out.value += inv_l * empty_penalty;
      ++out.empty_frames;
      continue;
    }
    const GridIndex2D* index = mask_index.empty() ? nullptr : &mask_index[l];
    ChamferValue c = chamfer_distance(mask_px[l], views[l].pixels, index, with_gradient);
    out.value += inv_l * c.value;
    out.residuals += mask_px[l].size() + views[l].pixels.size();
    if (with_gradient) {
      for (size_t k = 0; k < c.grad_b.size(); ++k) out.grad_pixels[l][k] = inv_l * c.grad_b[k];
    }
  }
  return out;
}

struct InvDepthLoss {
  double value = 0.0;
  size_t residuals = 0;
  bool no_overlap = true;
  std::vector<std::vector<double>> grad_pixels;  // per frame, per map pixel: d/d(rendered)
};

/// (1/L) sum over frames of the mean Huber of d'_l - alpha d_l over pixels
/// valid in both maps. Null external maps contribute nothing.
inline InvDepthLoss invdepth_loss(std::span<const InvDepthMap* const> external,
                                  std::span<const InvDepthMap* const> rendered, double alpha,
                                  double delta, bool with_gradient = true) {
  if (external.size() != rendered.size()) {
    throw Error(ErrorCode::invalid_argument, "invdepth_loss: frame count mismatch");
  }
  if (!(alpha > 0.0)) throw Error(ErrorCode::invalid_argument, "invdepth_loss: alpha must be > 0");
  InvDepthLoss out;
  out.grad_pixels.resize(rendered.size());
  const double inv_l = 1.0 / static_cast<double>(rendered.size());
  for (size_t l = 0; l < rendered.size(); ++l) {
    const InvDepthMap* ext = external[l];
    const InvDepthMap* ren = rendered[l];
    if (!ext || !ren) continue;
    if (ext->size() != ren->size()) {
      throw Error(ErrorCode::invalid_argument, "invdepth_loss: map size mismatch");
    }
    if (with_gradient) out.grad_pixels[l].assign(ren->size(), 0.0);
    double sum = 0.0;
    size_t count = 0;
    for (size_t p = 0; p < ren->size(); ++p) {
      if (!ext->valid[p] || !ren->valid[p]) continue;
      const double r = ext->value[p] - alpha * ren->value[p];
      sum += huber(r, delta);
      ++count;
    }
    if (count == 0) continue;
    out.no_overlap = false;
    out.residuals += count;
    const double scale = inv_l / static_cast<double>(count);
    out.value += scale * sum;
    if (!with_gradient) continue;
    for (size_t p = 0; p < ren->size(); ++p) {
      if (!ext->valid[p] || !ren->valid[p]) continue;
      const double r = ext->value[p] - alpha * ren->value[p];
      out.grad_pixels[l][p] = scale * huber_derivative(r, delta) * (-alpha);
    }
  }
  return out;
}

struct PhotometricLoss {
  double value = 0.0;
  size_t residuals = 0;
  Eigen::VectorXd grad_poses;   // [p0 | dp_1 .. dp_{L-1}]
  Eigen::VectorXd grad_points;  // 3N
};

inline PhotometricLoss photometric_loss(const Sequence& seq, const Twist& p0,
                                        std::span<const Twist> deltas, const PointCloud& cloud,
                                        double delta1 = 100.0, int upsample = kDefaultUpsample) {
  if (seq.size() < 2 || deltas.size() + 1 != seq.size()) {
    throw Error(ErrorCode::invalid_argument, "photometric_loss: need L >= 2 and L-1 deltas");
  }
  const auto geoms = detail::frame_geometry(p0, deltas, cloud.points, seq.intrinsics);
  std::vector<RenderedView> views;
  for (size_t l = 0; l < seq.size(); ++l) {
    views.push_back(raytrace(cloud.points, l == 0 ? p0 : compose(deltas[l - 1], p0),
                             seq.intrinsics, upsample));
  }
  detail::ProjectionGradients pg(seq.size(), cloud.size());
  const auto term = detail::photometric_term(seq, geoms, views, delta1, &pg, 1.0);
  if (term.count == 0) {
    throw Error(ErrorCode::degenerate_objective, "photometric_loss: no usable residuals");
  }
  PhotometricLoss out;
  out.value = term.value;
  out.residuals = term.count;
  out.grad_poses = Eigen::VectorXd::Zero(6 * static_cast<Eigen::Index>(seq.size()));
  out.grad_points = Eigen::VectorXd::Zero(3 * cloud.size());
  detail::chain_to_parameters(geoms, p0, pg, seq.intrinsics, out.grad_poses, out.grad_points);
  return out;
}

struct Evaluation {
  LossBreakdown loss;
  Eigen::VectorXd gradient;  // [p0 | dp_1..dp_{L-1} | s]; empty when not requested
  std::vector<RenderedView> views;
};

/// Total loss L_ph + lambda1 L_cd + lambda2 L_invd for a fixed sequence and basis.
class Objective {
 public:
  Objective(const Sequence& seq, const ShapeBasis& basis, ObjectiveConfig cfg = {})
      : seq_(&seq), basis_(&basis), cfg_(cfg), jacobian_(basis.jacobian()) {
    cfg_.validate();
    seq.validate();
    basis.validate();
    mask_px_.resize(seq.size());
    mask_index_.resize(seq.size());
    for (size_t l = 0; l < seq.size(); ++l) {
      if (!seq.frames[l].mask) continue;
      mask_px_[l] = cap_pixels(mask_pixels(*seq.frames[l].mask), cfg_.mask_pixel_cap);
      mask_index_[l].build(mask_px_[l], 2.0);
    }
  }

  const Sequence& sequence() const { return *seq_; }
  const ShapeBasis& basis() const { return *basis_; }
  const ObjectiveConfig& config() const { return cfg_; }
  const std::vector<std::vector<Vec2>>& mask_pixel_sets() const { return mask_px_; }

  Eigen::Matrix3Xd points(const Eigen::VectorXd& s) const {
    return unflatten(generate_flat(*basis_, s));
  }

  std::vector<RenderedView> render(const Parameters& p) const {
    const Eigen::Matrix3Xd pts = points(p.s);
    std::vector<RenderedView> views;
    views.reserve(seq_->size());
    for (size_t l = 0; l < seq_->size(); ++l) {
      views.push_back(raytrace(pts, frame_pose(p, l), seq_->intrinsics, cfg_.upsample));
    }
    return views;
  }

  /// Evaluates the loss (and gradient). With `frozen`, the visible sets of
  /// those views are reused instead of re-rendering.
  Evaluation evaluate(const Parameters& p, bool with_gradient = true,
                      const std::vector<RenderedView>* frozen = nullptr) const {
    if (p.frames() != seq_->size()) {
      throw Error(ErrorCode::invalid_argument, "objective: motion count does not match sequence");
    }
    const Eigen::Matrix3Xd pts = points(p.s);
    const auto geoms = detail::frame_geometry(p.p0, p.deltas, pts, seq_->intrinsics);

    Evaluation ev;
    if (frozen) {
      ev.views = detail::reproject_views(*frozen, geoms);
    } else {
      ev.views = render(p);
    }

    const size_t frames = seq_->size();
    std::optional<detail::ProjectionGradients> pg;
    if (with_gradient) pg.emplace(frames, pts.cols());

    LossBreakdown& b = ev.loss;
    b.alpha = p.alpha;
    const auto ph = detail::photometric_term(*seq_, geoms, ev.views, cfg_.delta1,
                                             pg ? &*pg : nullptr, 1.0);
    if (ph.count == 0) {
      throw Error(ErrorCode::degenerate_objective, "objective: no usable photometric residuals");
    }
    b.l_ph = ph.value;
    b.ph_residuals = ph.count;

    const auto cd = chamfer_loss(mask_px_, ev.views, cfg_.empty_silhouette_penalty, mask_index_,
                                 with_gradient);
    b.l_cd = cd.value;
    b.cd_residuals = cd.residuals;
    b.empty_silhouette_frames = cd.empty_frames;

    std::vector<const InvDepthMap*> ext(frames, nullptr);
    std::vector<const InvDepthMap*> ren(frames, nullptr);
    for (size_t l = 0; l < frames; ++l) {
      if (seq_->external) ext[l] = seq_->external->invdepth(l);
      ren[l] = &ev.views[l].invdepth_map;
    }
    const auto id = invdepth_loss(ext, ren, p.alpha, cfg_.delta2, with_gradient);
    b.l_invd = id.value;
    b.invd_residuals = id.residuals;
    b.invd_no_overlap = id.no_overlap;

    b.total = b.l_ph + cfg_.lambda1 * b.l_cd + cfg_.lambda2 * b.l_invd;
    if (!with_gradient) return ev;

    for (size_t l = 0; l < frames; ++l) {
      const RenderedView& v = ev.views[l];
      for (size_t k = 0; k < v.visible_idx.size(); ++k) {
        pg->at(l, v.visible_idx[k]).head<2>() += cfg_.lambda1 * cd.grad_pixels[l][k];
      }
      if (id.grad_pixels[l].empty()) continue;
      for (size_t px = 0; px < v.owner.size(); ++px) {
        if (v.owner[px] < 0 || id.grad_pixels[l][px] == 0.0) continue;
        pg->at(l, v.visible_idx[v.owner[px]])[2] += cfg_.lambda2 * id.grad_pixels[l][px];
      }
    }

    const Eigen::Index pose_dim = 6 * static_cast<Eigen::Index>(frames);
    ev.gradient = Eigen::VectorXd::Zero(pose_dim + p.s.size());
    Eigen::VectorXd grad_points = Eigen::VectorXd::Zero(pts.size());
    detail::chain_to_parameters(geoms, p.p0, *pg, seq_->intrinsics, ev.gradient.head(pose_dim),
                                grad_points);
    ev.gradient.tail(p.s.size()) = jacobian_.transpose() * grad_points;
    return ev;
  }

 private:
  const Sequence* seq_;
  const ShapeBasis* basis_;
  ObjectiveConfig cfg_;
  Eigen::MatrixXd jacobian_;
  std::vector<std::vector<Vec2>> mask_px_;
  std::vector<GridIndex2D> mask_index_;
};

}  // namespace spba
