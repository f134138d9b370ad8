// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
//
// Alternating block optimization: each outer iteration runs a short L-BFGS on
// p0, then on all relative motions jointly, then on the style vector, and
// finally re-solves the scale alpha from the current poses.
#pragma once

#include "spba/alignment.hpp"
#include "spba/error.hpp"
#include "spba/geometry.hpp"
#include "spba/lbfgs.hpp"
#include "spba/objective.hpp"
#include "spba/shapespace.hpp"

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace spba {

struct SolverConfig {
  int max_outer_iters = 200;
  int inner_lbfgs_steps = 10;
  int lbfgs_memory = 10;
  double rel_tolerance = 1e-6;  // relative total-loss decrease counted as a stall
  int patience = 3;             // consecutive stalls before stopping
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search_evals = 20;
  double first_step = 1e-2;     // first L-BFGS step length, scaled units
  double max_step = 0.5;        // cap on any single step, scaled units
  double style_max = kDefaultStyleMax;
  int checkpoint_every = 10;

  void validate() const {
    if (max_outer_iters < 0 || inner_lbfgs_steps < 1 || lbfgs_memory < 1 ||
        !(rel_tolerance > 0.0) || patience < 1 || !(c1 > 0.0) || !(c2 > c1) || !(c2 < 1.0) ||
        max_line_search_evals < 1 || !(first_step > 0.0) || !(max_step > 0.0) ||
        !(style_max > 0.0) || checkpoint_every < 1) {
      throw Error(ErrorCode::invalid_argument, "invalid solver configuration");
    }
  }
};

enum class SolverStatus { not_started, converged, max_iterations, non_finite };

inline const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::not_started: return "not_started";
    case SolverStatus::converged: return "converged";
    case SolverStatus::max_iterations: return "max_iterations";
    case SolverStatus::non_finite: return "non_finite";
  }
  return "unknown";
}

struct SolverState {
  Parameters params;
  int iter = 0;
  std::vector<LossBreakdown> loss_history;  // entry 0 is the initial loss
  SolverStatus status = SolverStatus::not_started;
  int evaluations = 0;
};

namespace detail {

// Inside the solver a pose is coordinatized by its rotation and by the
// camera-frame position of an anchor point, c = R a + t, in length units of
// `scale`. Rotating with c fixed turns the camera about the anchor, so the
// rotation and translation blocks are far less coupled than in (omega, t).
inline Eigen::VectorXd pack_anchored(std::span<const Twist> poses, std::span<const Vec3> anchors,
                                     double scale) {
  Eigen::VectorXd x(6 * poses.size());
  for (size_t i = 0; i < poses.size(); ++i) {
    x.segment<3>(6 * i) = poses[i].omega;
    x.segment<3>(6 * i + 3) = (exp_rotation(poses[i].omega) * anchors[i] + poses[i].t) / scale;
  }
  return x;
}

inline std::vector<Twist> unpack_anchored(const Eigen::VectorXd& x, std::span<const Vec3> anchors,
                                          double scale) {
  std::vector<Twist> out(x.size() / 6);
  for (size_t i = 0; i < out.size(); ++i) {
    const Vec3 omega = x.segment<3>(6 * i);
    out[i] = Twist(omega, scale * x.segment<3>(6 * i + 3) - exp_rotation(omega) * anchors[i]);
  }
  return out;
}

/// Maps a gradient with respect to (omega, t) blocks to anchored coordinates
/// at x, in place.
inline void anchored_gradient(const Eigen::VectorXd& x, std::span<const Vec3> anchors, double scale,
                              Eigen::Ref<Eigen::VectorXd> g) {
  for (size_t i = 0; i < anchors.size(); ++i) {
    const Vec3 omega = x.segment<3>(6 * i);
    const Vec3 ra = exp_rotation(omega) * anchors[i];
    const Vec3 gt = g.segment<3>(6 * i + 3);
    g.segment<3>(6 * i) -= left_jacobian(omega).transpose() * (skew(ra) * gt);
    g.segment<3>(6 * i + 3) = scale * gt;
  }
}

inline Eigen::VectorXd project_to_ball(const Eigen::VectorXd& s, double radius) {
  const double n = s.norm();
  return n > radius ? Eigen::VectorXd(s * (radius / n)) : s;
}

}  // namespace detail

/// Receives the state every `checkpoint_every` outer iterations.
using CheckpointFn = std::function<void(const SolverState&)>;

inline SolverState optimize(const Objective& objective, const SolverState& init,
                            const SolverConfig& cfg, const CheckpointFn& checkpoint = {}) {
  cfg.validate();
  if (cfg.max_outer_iters == 0) return init;
  const Sequence& seq = objective.sequence();
  if (init.params.frames() != seq.size() || seq.size() < 2) {
    throw Error(ErrorCode::invalid_argument, "optimize: state does not match the sequence");
  }

  SolverState state = init;
  state.params.s = detail::project_to_ball(state.params.s, cfg.style_max);
  // Translations are optimized in object-diameter units, anchored at the
  // mean-shape centroid.
  const PointCloud mean_shape{unflatten(objective.basis().mean), {}};
  const double length_scale = std::max(mean_shape.diameter(), 1e-9);
  const Vec3 anchor = mean_shape.centroid();

  Evaluation current;
  try {
    current = objective.evaluate(state.params, false);
  } catch (const Error& e) {
    throw Error(ErrorCode::init_failure,
                std::string("optimize: objective is degenerate at the initial state: ") + e.what());
  }
  ++state.evaluations;
  if (!std::isfinite(current.loss.total)) {
    throw Error(ErrorCode::init_failure, "optimize: non-finite loss at the initial state");
  }
  if (state.loss_history.empty()) state.loss_history.push_back(current.loss);
  double total = current.loss.total;

  LbfgsOptions lopt;
  lopt.max_iterations = cfg.inner_lbfgs_steps;
  lopt.memory = cfg.lbfgs_memory;
  lopt.c1 = cfg.c1;
  lopt.c2 = cfg.c2;
  lopt.max_line_search_evals = cfg.max_line_search_evals;
  lopt.first_step_norm = cfg.first_step;
  lopt.max_step_norm = cfg.max_step;

  const size_t frames = seq.size();
  const Eigen::Index pose_dim = 6 * static_cast<Eigen::Index>(frames);

  // Evaluates a trial parameter set; rejected (infinite) when the objective
  // is degenerate there.
  auto eval_total = [&](const Parameters& p, Eigen::VectorXd* grad,
                        const std::vector<RenderedView>* frozen) {
    ++state.evaluations;
    try {
      Evaluation ev = objective.evaluate(p, grad != nullptr, frozen);
      if (grad) *grad = std::move(ev.gradient);
      return ev.loss.total;
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  // One L-BFGS block. Visibility is re-rendered at every iterate and held
  // fixed along each line search. `assign` writes block coordinates into a
  // parameter set; `extract` maps the full gradient to block coordinates.
  std::vector<RenderedView> frozen;
  auto run_block = [&](const Eigen::VectorXd& x0, const auto& assign, const auto& extract,
                       const LbfgsProjection& project) {
    Parameters& p = state.params;
    auto f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
      Parameters trial = p;
      assign(trial, x);
      Eigen::VectorXd full;
      const double v = eval_total(trial, &full, &frozen);
      if (std::isfinite(v)) extract(x, full, g);
      return v;
    };
    auto relinearize = [&](const Eigen::VectorXd& x) {
      Parameters trial = p;
      assign(trial, x);
      frozen = objective.render(trial);
    };
    const LbfgsResult r = lbfgs_minimize(f, x0, lopt, project, relinearize);
    if (r.f < total) {
      assign(p, r.x);
      total = r.f;
    }
  };

  int stalls = 0;
  state.status = SolverStatus::max_iterations;
  for (int it = 0; it < cfg.max_outer_iters; ++it) {
    const double previous = total;
    Parameters& p = state.params;

    {  // p0
      const Vec3 anchors[1] = {anchor};
      const Twist p0[1] = {p.p0};
      run_block(
          detail::pack_anchored(p0, anchors, length_scale),
          [&](Parameters& q, const Eigen::VectorXd& x) {
            q.p0 = detail::unpack_anchored(x, anchors, length_scale)[0];
          },
          [&](const Eigen::VectorXd& x, const Eigen::VectorXd& full, Eigen::VectorXd& g) {
            g = full.head<6>();
            detail::anchored_gradient(x, anchors, length_scale, g);
          },
          {});
    }
    {  // relative motions, anchored at the centroid as seen from the target camera
      const std::vector<Vec3> anchors(frames - 1, exp_rotation(p.p0.omega) * anchor);
      run_block(
          detail::pack_anchored(p.deltas, anchors, length_scale),
          [&](Parameters& q, const Eigen::VectorXd& x) {
            q.deltas = detail::unpack_anchored(x, anchors, length_scale);
          },
          [&](const Eigen::VectorXd& x, const Eigen::VectorXd& full, Eigen::VectorXd& g) {
            g = full.segment(6, pose_dim - 6);
            detail::anchored_gradient(x, anchors, length_scale, g);
          },
          {});
    }
    if (p.s.size() > 0) {  // style
      run_block(
          p.s, [](Parameters& q, const Eigen::VectorXd& x) { q.s = x; },
          [&](const Eigen::VectorXd&, const Eigen::VectorXd& full, Eigen::VectorXd& g) {
            g = full.tail(p.s.size());
          },
          [&](const Eigen::VectorXd& x) { return detail::project_to_ball(x, cfg.style_max); });
    }
    if (seq.external) {  // scale, kept only if it does not raise the loss
      try {
        const Vec3 centroid = objective.points(p.s).rowwise().mean();
        Parameters trial = p;
        trial.alpha = solve_alpha_poses(p.p0, p.deltas, *seq.external, centroid).value();
        const double v = eval_total(trial, nullptr, nullptr);
        if (v <= total) {
          p.alpha = trial.alpha;
          total = v;
        }
      } catch (const Error&) {
      }
    }

    state.iter = it + 1;
    if (!std::isfinite(total)) {
      state.status = SolverStatus::non_finite;
      break;
    }
    LossBreakdown b = objective.evaluate(p, false).loss;
    ++state.evaluations;
    state.loss_history.push_back(b);
    total = b.total;
    if (checkpoint && state.iter % cfg.checkpoint_every == 0) checkpoint(state);

    const double rel = (previous - total) / std::max(std::abs(previous), 1e-300);
    stalls = rel < cfg.rel_tolerance ? stalls + 1 : 0;
    if (stalls >= cfg.patience) {
      state.status = SolverStatus::converged;
      break;
    }
  }
  return state;
}

}  // namespace spba
