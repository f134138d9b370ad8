// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
//
// Initialization pipeline (pose retrieval, style, scale, relative motion) and
// the perturbation sweep used to map the solver's basin of convergence.
#pragma once

#include "spba/alignment.hpp"
#include "spba/error.hpp"
#include "spba/geometry.hpp"
#include "spba/initpose.hpp"
#include "spba/metrics.hpp"
#include "spba/objective.hpp"
#include "spba/sequence.hpp"
#include "spba/shapespace.hpp"
#include "spba/solver.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <thread>
#include <vector>

namespace spba {

struct InitConfig {
  StyleInitOptions style;
  int upsample = kDefaultUpsample;
  bool motion_from_external = true;  // false: all relative motions start at zero
};

struct InitResult {
  SolverState state;
  RetrievalResult retrieval;
  bool alpha_from_depth = false;
};

/// p0 by template retrieval on the target mask, s by init_style, alpha from
/// the target frame's external inverse depth, relative motions from the
/// external poses.
inline InitResult initialize(const Sequence& seq, const ShapeBasis& basis, const TemplateGrid& grid,
                             const InitConfig& cfg = {}) {
  seq.validate();
  basis.validate();
  if (!seq.frames[0].mask) {
    throw Error(ErrorCode::invalid_input, "initialize: the target frame has no mask");
  }
  InitResult out;
  out.retrieval = retrieve_pose(*seq.frames[0].mask, grid);
  Parameters& p = out.state.params;
  p.p0 = out.retrieval.pose;

  std::vector<Mask> masks{*seq.frames[0].mask};
  std::vector<Twist> poses{p.p0};
  p.s = init_style(masks, poses, basis, seq.intrinsics, cfg.style).values();

  p.alpha = 1.0;
  if (seq.external) {
    if (const InvDepthMap* ext0 = seq.external->invdepth(0)) {
      const RenderedView view =
          raytrace(unflatten(generate_flat(basis, p.s)), p.p0, seq.intrinsics, cfg.upsample);
      try {
        p.alpha = solve_alpha_invdepth(*ext0, view.invdepth_map).value();
        out.alpha_from_depth = true;
      } catch (const Error&) {
      }
    }
  }
  if (seq.external && cfg.motion_from_external) {
    p.deltas = init_motion(p.p0, *seq.external, ScaleFactor(p.alpha));
  } else {
    p.deltas.assign(seq.size() - 1, Twist{});
  }
  return out;
}

// ---------------------------------------------------------------------------

struct SweepConfig {
  std::vector<double> magnitudes{0.0, 2.0, 5.0, 10.0, 20.0};
  int seeds = 20;
  std::uint64_t seed = 0;
  double translation_per_degree = 0.005;  // fraction of |t0| per degree of magnitude
  double converged_orientation_deg = 1.0;
  double converged_center_fraction = 0.02;  // of the object diameter
  int threads = 1;
};

struct SweepRun {
  double magnitude = 0.0;
  int seed_index = 0;
  bool zero_motion = false;
  bool converged = false;
  double orientation_error_deg = 0.0;
  double center_error = 0.0;
  SolverState state;
};

struct SweepRow {
  double magnitude = 0.0;
  double converged_fraction = 0.0;
  double converged_fraction_zero_motion = 0.0;
  double mean_p0_orientation_error_deg = 0.0;
  double mean_p0_orientation_error_deg_zero_motion = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepRun> runs;
};

/// Rotates p0 by `degrees` about a random axis through the camera center
/// and shifts it by `translation` in a random direction.
inline Twist perturb_pose(const Twist& p0, double degrees, double translation, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const Vec3 axis = Vec3(normal(rng), normal(rng), normal(rng)).normalized();
  const Vec3 dir = Vec3(normal(rng), normal(rng), normal(rng)).normalized();
  const Mat3 dr = exp_rotation(axis * deg_to_rad(degrees));
  return Twist(log_rotation(dr * exp_rotation(p0.omega)), dr * p0.t + translation * dir);
}

/// For each magnitude and seed, perturbs the ground-truth p0 and optimizes
/// twice: relative motions from the external result, and from zero.
inline SweepResult basin_sweep(const Objective& objective, const SolverState& gt,
                               const SweepConfig& sweep, const SolverConfig& solver) {
  const Sequence& seq = objective.sequence();
  const double diameter = PointCloud{unflatten(objective.basis().mean), {}}.diameter();
  const Vec3 gt_center = camera_center(gt.params.p0);

  struct Job {
    double magnitude;
    int seed_index;
    bool zero_motion;
  };
  std::vector<Job> jobs;
  for (double m : sweep.magnitudes) {
    for (int k = 0; k < sweep.seeds; ++k) {
      jobs.push_back({m, k, false});
      jobs.push_back({m, k, true});
    }
  }
  SweepResult result;
  result.runs.resize(jobs.size());

  auto run_job = [&](size_t j) {
    const Job& job = jobs[j];
    std::mt19937_64 rng(sweep.seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(job.seed_index) + 1)) ^
                        static_cast<std::uint64_t>(job.magnitude * 1000.0));
    SolverState init;
    init.params = gt.params;
    init.params.p0 = perturb_pose(gt.params.p0, job.magnitude,
                                  job.magnitude * sweep.translation_per_degree * gt.params.p0.t.norm(),
                                  rng);
    if (job.zero_motion || !seq.external) {
      init.params.deltas.assign(seq.size() - 1, Twist{});
    } else {
      init.params.deltas = init_motion(init.params.p0, *seq.external, ScaleFactor(gt.params.alpha));
    }
    SweepRun& run = result.runs[j];
    run.magnitude = job.magnitude;
    run.seed_index = job.seed_index;
    run.zero_motion = job.zero_motion;
    try {
      run.state = optimize(objective, init, solver);
      const Twist& p0 = run.state.params.p0;
      run.orientation_error_deg = geodesic_angle_deg(p0, gt.params.p0);
      run.center_error = (camera_center(p0) - gt_center).norm();
      run.converged = run.orientation_error_deg < sweep.converged_orientation_deg &&
                      run.center_error < sweep.converged_center_fraction * diameter;
    } catch (const Error&) {
      run.converged = false;
      run.orientation_error_deg = 180.0;
      run.center_error = std::numeric_limits<double>::infinity();
    }
  };

  const int threads = std::max(1, std::min<int>(sweep.threads, static_cast<int>(jobs.size())));
  if (threads == 1) {
    for (size_t j = 0; j < jobs.size(); ++j) run_job(j);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (size_t j = t; j < jobs.size(); j += threads) run_job(j);
      });
    }
    for (auto& th : pool) th.join();
  }

  for (double m : sweep.magnitudes) {
    SweepRow row;
    row.magnitude = m;
    int n = 0, nz = 0;
    for (const SweepRun& r : result.runs) {
      if (r.magnitude != m) continue;
      if (r.zero_motion) {
        row.converged_fraction_zero_motion += r.converged;
        row.mean_p0_orientation_error_deg_zero_motion += r.orientation_error_deg;
        ++nz;
      } else {
        row.converged_fraction += r.converged;
        row.mean_p0_orientation_error_deg += r.orientation_error_deg;
        ++n;
      }
    }
    if (n > 0) {
      row.converged_fraction /= n;
      row.mean_p0_orientation_error_deg /= n;
    }
    if (nz > 0) {
      row.converged_fraction_zero_motion /= nz;
      row.mean_p0_orientation_error_deg_zero_motion /= nz;
    }
    result.rows.push_back(row);
  }
  return result;
}

}  // namespace spba
