// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
//
// Limited-memory BFGS with a strong-Wolfe line search (bracketing + zoom with
// safeguarded cubic interpolation). The objective callback may return a
// non-finite value to reject a trial point.
#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace spba {

struct LbfgsOptions {
  int max_iterations = 10;
  int memory = 10;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search_evals = 20;
  /// Length of the very first step along -g (later steps use unit length
  /// under the scaled inverse-Hessian estimate).
  double first_step_norm = 1e-2;
  /// Upper bound on any single step length.
  double max_step_norm = 1.0;
  double gradient_tolerance = 1e-12;
};

enum class LbfgsStatus { max_iterations, converged, line_search_failed, non_finite_start };

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  int evaluations = 0;
  LbfgsStatus status = LbfgsStatus::max_iterations;
};

/// f(x, grad) returns the value and writes the gradient.
using LbfgsObjective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;
/// Optional map applied to every trial point (e.g. a norm-ball projection).
using LbfgsProjection = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
/// Optional hook run at every accepted iterate before the objective is
/// re-evaluated there. Lets a caller hold a piecewise-smooth objective fixed
/// for the duration of one line search (e.g. a frozen visibility set) and
/// refresh it between iterations.
using LbfgsRelinearize = std::function<void(const Eigen::VectorXd&)>;

namespace detail {

struct LinePoint {
  double a = 0.0;
  double f = 0.0;
  double d = 0.0;  // directional derivative
  Eigen::VectorXd x;
  Eigen::VectorXd g;
};

// Minimizer of the cubic through (a, fa, da), (b, fb, db); NaN when undefined.
inline double cubic_minimizer(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (!(disc >= 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double d2 = std::copysign(std::sqrt(disc), b - a);
  return b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
}

}  // namespace detail

/// Minimizes f from x0. With `relinearize`, the returned point is the best
/// iterate as measured right after its refresh.
inline LbfgsResult lbfgs_minimize(const LbfgsObjective& f, Eigen::VectorXd x0,
                                  const LbfgsOptions& opt = {},
                                  const LbfgsProjection& project = {},
                                  const LbfgsRelinearize& relinearize = {}) {
  using detail::LinePoint;
  LbfgsResult res;
  if (project) x0 = project(x0);
  res.x = x0;
  res.gradient = Eigen::VectorXd::Zero(x0.size());
  if (relinearize) relinearize(res.x);
  res.f = f(res.x, res.gradient);
  res.evaluations = 1;
  if (!std::isfinite(res.f) || !res.gradient.allFinite()) {
    res.status = LbfgsStatus::non_finite_start;
    return res;
  }
  LbfgsResult best_iterate = res;
  auto finish = [&](LbfgsStatus status) {
    res.status = status;
    if (best_iterate.f < res.f) {
      best_iterate.iterations = res.iterations;
      best_iterate.evaluations = res.evaluations;
      best_iterate.status = status;
      return best_iterate;
    }
    return res;
  };

  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;
  std::deque<double> rho_hist;

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    if (res.gradient.norm() <= opt.gradient_tolerance) return finish(LbfgsStatus::converged);
    // Two-loop recursion.
    Eigen::VectorXd q = res.gradient;
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    double gamma = 1.0;
    if (!s_hist.empty()) gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    Eigen::VectorXd dir = gamma * q;
    for (size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(dir);
      dir += s_hist[i] * (alpha[i] - beta);
    }
    dir = -dir;
    double d0 = res.gradient.dot(dir);
    if (!(d0 < 0.0)) {
      // Curvature memory produced an ascent direction; restart.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -res.gradient;
      d0 = res.gradient.dot(dir);
    }
    double a_init = s_hist.empty() ? opt.first_step_norm / dir.norm() : 1.0;
    const double a_max = opt.max_step_norm / dir.norm();
    a_init = std::min(a_init, a_max);

    const double f0 = res.f;
    int evals = 0;
    LinePoint best{0.0, f0, d0, res.x, res.gradient};
    auto eval = [&](double a) {
      LinePoint p;
      p.a = a;
      p.x = res.x + a * dir;
      if (project) p.x = project(p.x);
      p.g = Eigen::VectorXd::Zero(p.x.size());
      p.f = f(p.x, p.g);
      if (!std::isfinite(p.f) || !p.g.allFinite()) {
        p.f = std::numeric_limits<double>::infinity();
        p.d = std::numeric_limits<double>::quiet_NaN();
      } else {
        p.d = p.g.dot(dir);
      }
      ++evals;
      if (p.f < best.f) best = p;
      return p;
    };
    auto armijo_fails = [&](const LinePoint& p) { return !(p.f <= f0 + opt.c1 * p.a * d0); };
    auto curvature_ok = [&](const LinePoint& p) { return std::abs(p.d) <= -opt.c2 * d0; };

    std::optional<LinePoint> accepted;
    auto zoom = [&](LinePoint lo, LinePoint hi) -> std::optional<LinePoint> {
      while (evals < opt.max_line_search_evals) {
        double a = std::numeric_limits<double>::quiet_NaN();
        if (std::isfinite(hi.f) && std::isfinite(hi.d)) {
          a = detail::cubic_minimizer(lo.a, lo.f, lo.d, hi.a, hi.f, hi.d);
        }
        const double lo_a = std::min(lo.a, hi.a);
        const double hi_a = std::max(lo.a, hi.a);
        const double margin = 0.1 * (hi_a - lo_a);
        if (!std::isfinite(a) || a < lo_a + margin || a > hi_a - margin) a = 0.5 * (lo.a + hi.a);
        if (hi_a - lo_a < 1e-14 * std::max(1.0, hi_a)) return std::nullopt;
        LinePoint p = eval(a);
        if (armijo_fails(p) || p.f >= lo.f) {
          hi = p;
        } else {
          if (curvature_ok(p)) return p;
          if (p.d * (hi.a - lo.a) >= 0.0) hi = lo;
          lo = p;
        }
      }
      return std::nullopt;
    };

    LinePoint prev{0.0, f0, d0, res.x, res.gradient};
    double a = a_init;
    for (int k = 0; evals < opt.max_line_search_evals; ++k) {
      LinePoint p = eval(a);
      if (armijo_fails(p) || (k > 0 && p.f >= prev.f)) {
        accepted = zoom(prev, p);
        break;
      }
      if (curvature_ok(p)) {
        accepted = p;
        break;
      }
      if (p.d >= 0.0) {
        accepted = zoom(p, prev);
        break;
      }
      prev = p;
      if (a >= a_max) {
        accepted = p;
        break;
      }
      a = std::min(2.0 * a, a_max);
    }
    res.evaluations += evals;

    LinePoint next;
    if (accepted && accepted->f < f0) {
      next = *accepted;
    } else if (best.f < f0) {
      next = best;  // sufficient decrease without the curvature condition
    } else {
      return finish(LbfgsStatus::line_search_failed);
    }

    Eigen::VectorXd s = next.x - res.x;
    Eigen::VectorXd y = next.g - res.gradient;
    res.x = next.x;
    res.f = next.f;
    res.gradient = next.g;
    res.iterations = iter + 1;
    if (relinearize) {
      relinearize(res.x);
      res.f = f(res.x, res.gradient);
      ++res.evaluations;
      if (!std::isfinite(res.f) || !res.gradient.allFinite()) {
        return finish(LbfgsStatus::line_search_failed);
      }
    }
    if (res.f < best_iterate.f) best_iterate = res;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opt.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
  }
  return finish(LbfgsStatus::max_iterations);
}

}  // namespace spba
