// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Pass criterion numbers to run a subset.

#include "spba/config.hpp"
#include "spba/io/files.hpp"
#include "spba/metrics.hpp"
#include "spba/objective.hpp"
#include "spba/pipeline.hpp"
#include "spba/synth.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace spba;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Vec3(n(rng), n(rng), n(rng)).normalized();
}

Vec3 random_rotation_vector(std::mt19937_64& rng, double max_angle) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return random_unit(rng) * (max_angle * u(rng));
}

fs::path work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "spba_acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

const ShapeBasis& desk_basis() {
  static const ShapeBasis basis = build_default_basis(BasisSpec{});
  return basis;
}

Parameters truth_parameters(const SyntheticData& d) {
  Parameters p;
  p.p0 = d.truth.poses[0];
  p.deltas = relative_motions(d.truth.poses);
  p.s = d.truth.style;
  p.alpha = d.truth.alpha_star;
  return p;
}

// ---------------------------------------------------------------------------
// 1. Lie math

Mat3 matrix_exponential(const Mat3& a) {
  int squarings = 0;
  double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  while (norm > 0.25) {
    norm *= 0.5;
    ++squarings;
  }
  const Mat3 scaled = a / std::ldexp(1.0, squarings);
  Mat3 term = Mat3::Identity();
  Mat3 sum = Mat3::Identity();
  for (int k = 1; k < 30; ++k) {
    term = term * scaled / k;
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

Outcome lie_math() {
  std::mt19937_64 rng(101);
  std::normal_distribution<double> n(0.0, 1.0);
  double roundtrip = 0.0, expm = 0.0, comp = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 w = random_rotation_vector(rng, kPi * 0.999);
    const Twist a(w, Vec3(n(rng), n(rng), n(rng)));
    const Twist b(random_rotation_vector(rng, kPi), Vec3(n(rng), n(rng), n(rng)));
    roundtrip = std::max(roundtrip, (log_rotation(exp_rotation(w)) - w).norm());
    expm = std::max(expm, (exp_rotation(w) - matrix_exponential(skew(w))).cwiseAbs().maxCoeff());
    const Twist c = compose(a, b);
    const Mat3 oracle = exp_rotation(a.omega) * exp_rotation(b.omega);
    comp = std::max(comp, (exp_rotation(c.omega) - oracle).cwiseAbs().maxCoeff());
    comp = std::max(comp, (c.t - (a.t + b.t)).cwiseAbs().maxCoeff());
  }
  return {roundtrip <= 1e-8 && expm <= 1e-9 && comp <= 1e-9,
          format("round-trip %.2e (<=1e-8), expm %.2e (<=1e-9), compose %.2e (<=1e-9)", roundtrip,
                 expm, comp)};
}

// ---------------------------------------------------------------------------
// 2. Gradients against central differences

Eigen::VectorXd pack(const Parameters& q) {
  Eigen::VectorXd v(q.gradient_size());
  v.head<6>() = q.p0.to_vector();
  for (size_t l = 0; l < q.deltas.size(); ++l) v.segment<6>(6 + 6 * l) = q.deltas[l].to_vector();
  v.tail(q.s.size()) = q.s;
  return v;
}

Parameters unpack(const Eigen::VectorXd& v, Parameters q) {
  q.p0 = Twist::from_vector(v.head<6>());
  for (size_t l = 0; l < q.deltas.size(); ++l) q.deltas[l] = Twist::from_vector(v.segment<6>(6 + 6 * l));
  q.s = v.tail(q.s.size());
  return q;
}

Outcome gradients() {
  BasisSpec bs;
  bs.points = 1000;
  const ShapeBasis basis = build_default_basis(bs);
  double worst = 0.0;
  int blocks = 0;
  for (int trial = 0; trial < 20; ++trial) {
    SyntheticSpec spec;
    spec.width = 64;
    spec.height = 64;
    spec.focal = 50.0;
    spec.frames = 3;
    spec.seed = 200 + trial;
    const SyntheticData d = generate_sequence(spec, basis);
    const Objective obj(d.sequence, basis);
    std::mt19937_64 rng(300 + trial);
    std::normal_distribution<double> n(0.0, 1.0);
    Parameters p = truth_parameters(d);
    p.p0 = Twist(p.p0.omega + 0.01 * random_unit(rng), p.p0.t + 0.01 * random_unit(rng));
    for (Twist& t : p.deltas) t = Twist(t.omega + 0.005 * random_unit(rng), t.t + 0.005 * random_unit(rng));
    for (Eigen::Index k = 0; k < p.s.size(); ++k) p.s[k] += 0.2 * n(rng);
    p.alpha *= 1.0 + 0.05 * n(rng);

    const auto frozen = obj.render(p);
    const Eigen::VectorXd g = obj.evaluate(p, true, &frozen).gradient;
    const Eigen::VectorXd x = pack(p);
    Eigen::VectorXd fd(x.size());
    const double h = 1e-6;  // bilinear sampling is only C0 across pixel lines
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Eigen::VectorXd a = x, b = x;
      a[i] += h;
      b[i] -= h;
      fd[i] = (obj.evaluate(unpack(a, p), false, &frozen).loss.total -
               obj.evaluate(unpack(b, p), false, &frozen).loss.total) / (2 * h);
    }
    std::vector<std::pair<Eigen::Index, Eigen::Index>> ranges;
    for (size_t l = 0; l < p.frames(); ++l) ranges.emplace_back(6 * l, 6);
    ranges.emplace_back(6 * p.frames(), p.s.size());
    for (const auto& [start, len] : ranges) {
      const Eigen::VectorXd ga = g.segment(start, len), gf = fd.segment(start, len);
      worst = std::max(worst, (ga - gf).norm() / std::max({ga.norm(), gf.norm(), 1e-300}));
      ++blocks;
    }
  }
  return {worst < 1e-3, format("worst block relative error %.2e over %d blocks (<1e-3)", worst, blocks)};
}

// ---------------------------------------------------------------------------
// 3. Renderer against an exhaustive scan

Outcome renderer() {
  std::mt19937_64 rng(400);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::uniform_int_distribution<int> count(1, 500);
  const Intrinsics k{40.0, 40.0, 23.5, 17.5, 48, 36};
  int mismatches = 0, checks = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = count(rng);
    Eigen::Matrix3Xd pts(3, n);
    for (int i = 0; i < n; ++i) pts.col(i) = Vec3(u(rng), u(rng), u(rng));
    const Twist pose(random_rotation_vector(rng, kPi), Vec3(0.1 * u(rng), 0.1 * u(rng), 1.6));
    const Mat3 r = exp_rotation(pose.omega);
    std::set<int> oracle;
    for (int y = 0; y < k.height; ++y) {
      for (int x = 0; x < k.width; ++x) {
        int best = -1;
        double best_inv = 0.0;
        for (int i = 0; i < n; ++i) {
          const Vec3 c = r * pts.col(i) + pose.t;
          if (c.z() <= kMinDepth) continue;
          const double pu = k.fx * c.x() / c.z() + k.cx;
          const double pv = k.fy * c.y() / c.z() + k.cy;
          if (std::floor(pu + 0.5) != x || std::floor(pv + 0.5) != y) continue;
          if (best < 0 || 1.0 / c.z() > best_inv) {
            best = i;
            best_inv = 1.0 / c.z();
          }
        }
        if (best >= 0) oracle.insert(best);
      }
    }
    for (int up : {1, 2, 4}) {
      const RenderedView v = raytrace(pts, pose, k, up);
      mismatches += std::set<int>(v.visible_idx.begin(), v.visible_idx.end()) != oracle;
      ++checks;
    }
  }
  return {mismatches == 0, format("%d of %d visible sets differ from the scan", mismatches, checks)};
}

// ---------------------------------------------------------------------------
// 4. Loss oracles

Vec3 naive_bilinear(const Image& img, double u, double v) {
  const int x0 = std::min(static_cast<int>(u), img.width() - 2);
  const int y0 = std::min(static_cast<int>(v), img.height() - 2);
  const double a = u - x0, b = v - y0;
  return (1 - a) * (1 - b) * img.pixel(x0, y0) + a * (1 - b) * img.pixel(x0 + 1, y0) +
         (1 - a) * b * img.pixel(x0, y0 + 1) + a * b * img.pixel(x0 + 1, y0 + 1);
}

double naive_huber(double r, double delta) {
  r = std::abs(r);
  return r <= delta ? 0.5 * r * r : delta * (r - 0.5 * delta);
}

double naive_photometric(const Sequence& seq, const std::vector<Twist>& poses,
                         const Eigen::Matrix3Xd& pts, double delta) {
  const Intrinsics& k = seq.intrinsics;
  auto pixel = [&](int i, size_t l, double* u, double* v) {
    const Vec3 c = exp_rotation(poses[l].omega) * pts.col(i) + poses[l].t;
    if (c.z() <= kMinDepth) return false;
    *u = k.fx * c.x() / c.z() + k.cx;
    *v = k.fy * c.y() / c.z() + k.cy;
    return *u >= 0 && *v >= 0 && *u <= k.width - 1 && *v <= k.height - 1;
  };
  double total = 0.0;
  for (size_t l = 1; l < poses.size(); ++l) {
    for (int dir = 0; dir < 2; ++dir) {
      const size_t a = dir == 0 ? 0 : l;
      const size_t b = dir == 0 ? l : 0;
      const RenderedView view = raytrace(pts, poses[a], k);
      double sum = 0.0;
      int n = 0;
      for (int i : view.visible_idx) {
        double ua, va, ub, vb;
        if (!pixel(i, a, &ua, &va) || !pixel(i, b, &ub, &vb)) continue;
        const Vec3 r = naive_bilinear(seq.frames[a].image, ua, va) -
                       naive_bilinear(seq.frames[b].image, ub, vb);
        sum += naive_huber(r.norm(), delta);
        ++n;
      }
      if (n > 0) total += sum / n;
    }
  }
  return total;
}

double relative(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

Outcome loss_oracles() {
  BasisSpec bs;
  bs.points = 800;
  const ShapeBasis basis = build_default_basis(bs);
  double ph = 0.0, cd = 0.0, id = 0.0;
  for (int trial = 0; trial < 4; ++trial) {
    SyntheticSpec spec;
    spec.width = 80;
    spec.height = 64;
    spec.focal = 60.0;
    spec.frames = 4;
    spec.seed = 500 + trial;
    const SyntheticData d = generate_sequence(spec, basis);
    std::mt19937_64 rng(600 + trial);
    Parameters p = truth_parameters(d);
    for (Twist& t : p.deltas) t = Twist(t.omega + 0.02 * random_unit(rng), t.t + 0.01 * random_unit(rng));
    const PointCloud cloud = generate(basis, StyleVector(p.s));
    std::vector<Twist> poses{p.p0};
    for (const Twist& t : p.deltas) poses.push_back(compose(t, p.p0));
    const double want = naive_photometric(d.sequence, poses, cloud.points, 100.0);
    ph = std::max(ph, relative(photometric_loss(d.sequence, p.p0, p.deltas, cloud).value, want));

    // Chamfer between mask pixels and rendered projections.
    std::vector<std::vector<Vec2>> masks;
    std::vector<RenderedView> views;
    double cd_want = 0.0;
    for (size_t l = 0; l < poses.size(); ++l) {
      masks.push_back(mask_pixels(*d.sequence.frames[l].mask));
      views.push_back(raytrace(cloud.points, poses[l], d.sequence.intrinsics));
      for (const Vec2& a : masks[l]) {
        double best = 1e300;
        for (const Vec2& b : views[l].pixels) best = std::min(best, (a - b).squaredNorm());
        cd_want += best / poses.size();
      }
      for (const Vec2& b : views[l].pixels) {
        double best = 1e300;
        for (const Vec2& a : masks[l]) best = std::min(best, (a - b).squaredNorm());
        cd_want += best / poses.size();
      }
    }
    cd = std::max(cd, relative(chamfer_loss(masks, views).value, cd_want));

    // Inverse depth against the external maps.
    const double alpha = p.alpha * 1.1;
    std::vector<const InvDepthMap*> ext, ren;
    double id_want = 0.0;
    for (size_t l = 0; l < poses.size(); ++l) {
      ext.push_back(d.sequence.external->invdepth(l));
      ren.push_back(&views[l].invdepth_map);
      double sum = 0.0;
      int n = 0;
      for (size_t px = 0; px < ren[l]->size(); ++px) {
        if (!ext[l]->valid[px] || !ren[l]->valid[px]) continue;
        sum += naive_huber(ext[l]->value[px] - alpha * ren[l]->value[px], 10.0);
        ++n;
      }
      if (n > 0) id_want += sum / n / poses.size();
    }
    id = std::max(id, relative(invdepth_loss(ext, ren, alpha, 10.0).value, id_want));
  }
  return {ph <= 1e-8 && cd <= 1e-8 && id <= 1e-8,
          format("relative error photometric %.2e, chamfer %.2e, inverse depth %.2e (<=1e-8)", ph,
                 cd, id)};
}

// ---------------------------------------------------------------------------
// 5. Alignment exactness

Outcome alignment() {
  double alpha_err = 0.0, motion_err = 0.0, residual = 0.0;
  int trial = 0;
  for (double star : {0.3, 1.0, 1.7, 5.0}) {
    SyntheticSpec spec;
    spec.width = 64;
    spec.height = 64;
    spec.focal = 50.0;
    spec.frames = 5;
    spec.noise_sigma = 0.0;
    spec.ext_rotation_noise_deg = 0.0;
    spec.alpha_star = star;
    spec.seed = 700 + trial++;
    BasisSpec bs;
    bs.points = 500;
    const ShapeBasis basis = build_default_basis(bs);
    const SyntheticData d = generate_sequence(spec, basis);
    const ExternalPBAResult& ext = *d.sequence.external;
    const Twist& p0 = d.truth.poses[0];

    const double a1 = solve_alpha_invdepth(*ext.invdepth(0), d.truth.invdepth[0]).value();
    const std::vector<Twist> deltas = init_motion(p0, ext, ScaleFactor(star));
    const double a2 = solve_alpha_poses(p0, deltas, ext, d.truth.cloud.centroid()).value();
    alpha_err = std::max({alpha_err, std::abs(a1 - star) / star, std::abs(a2 - star) / star});
    const std::vector<Twist> truth = relative_motions(d.truth.poses);
    for (size_t l = 1; l < d.truth.poses.size(); ++l) {
      motion_err = std::max({motion_err, (deltas[l - 1].omega - truth[l - 1].omega).norm(),
                             (deltas[l - 1].t - truth[l - 1].t).norm()});
      const Twist pose = compose(deltas[l - 1], p0);
      for (Eigen::Index i = 0; i < d.truth.cloud.size(); i += 50) {
        residual = std::max(residual, motion_residual(p0, pose, l, ext, star, d.truth.cloud.points.col(i)));
      }
    }
  }
  return {alpha_err <= 1e-8 && motion_err <= 1e-8 && residual <= 1e-8,
          format("alpha relative error %.2e, motion error %.2e, reconstruction residual %.2e (<=1e-8)",
                 alpha_err, motion_err, residual)};
}

// ---------------------------------------------------------------------------
// 6, 8, 9. End-to-end recovery from the initialization pipeline

struct PipelineRun {
  std::vector<Twist> poses;
  std::string loss_csv;
  SolverStatus status = SolverStatus::not_started;
  int iterations = 0;
  double orientation_deg = 0.0;
  double center_fraction = 0.0;
  double depth_error = 0.0;
  double density = 0.0;
  double init_orientation_deg = 0.0;
};

std::string loss_csv(const SolverState& s) {
  std::string out = loss_csv_header();
  for (size_t i = 0; i < s.loss_history.size(); ++i) out += loss_csv_row(static_cast<int>(i), s.loss_history[i]);
  return out;
}

PipelineRun run_pipeline(std::uint64_t seed, const TemplateGrid& grid) {
  const ShapeBasis& basis = desk_basis();
  SyntheticSpec spec;
  spec.seed = seed;
  const SyntheticData d = generate_sequence(spec, basis);
  const InitResult init = initialize(d.sequence, basis, grid, InitConfig{});
  const Objective obj(d.sequence, basis);
  const SolverState out = optimize(obj, init.state, SolverConfig{});

  PipelineRun run;
  run.status = out.status;
  run.iterations = out.iter;
  run.loss_csv = loss_csv(out);
  const Eigen::Matrix3Xd pts = obj.points(out.params.s);
  std::vector<InvDepthMap> depth;
  for (size_t l = 0; l < d.sequence.size(); ++l) {
    run.poses.push_back(frame_pose(out.params, l));
    depth.push_back(raytrace(pts, run.poses.back(), d.sequence.intrinsics).invdepth_map);
  }
  const EvalReport r = evaluate_prediction(run.poses, depth, d.truth.poses, d.truth.invdepth);
  run.orientation_deg = r.camera.mean_orientation_error_deg;
  run.center_fraction = r.camera.mean_location_error / d.truth.cloud.diameter();
  run.depth_error = r.depth.depth_error;
  run.density = r.depth.density;
  run.init_orientation_deg = principal_axis_angle_deg(init.state.params.p0, d.truth.poses[0]);
  return run;
}

constexpr int kEndToEndSeeds = 10;

struct EndToEnd {
  std::vector<PipelineRun> runs;
  double seconds = 0.0;
};

EndToEnd end_to_end_runs() {
  const auto t0 = Clock::now();
  SyntheticSpec spec;
  const SyntheticData probe = generate_sequence(spec, desk_basis());
  const TemplateGrid grid = build_template_grid(desk_basis(), probe.sequence.intrinsics, TemplateGridConfig{});
  EndToEnd e;
  for (int k = 0; k < kEndToEndSeeds; ++k) e.runs.push_back(run_pipeline(static_cast<std::uint64_t>(k + 1), grid));
  e.seconds = seconds_since(t0);
  return e;
}

const EndToEnd& end_to_end() {
  static const EndToEnd e = end_to_end_runs();
  return e;
}

Outcome end_to_end_recovery() {
  const EndToEnd& e = end_to_end();
  std::vector<double> orient, center, depth, density;
  for (size_t k = 0; k < e.runs.size(); ++k) {
    const PipelineRun& r = e.runs[k];
    std::printf("       seed %zu: init %.2f deg -> orientation %.3f deg, center %.4f D, depth %.4f, density %.3f, %d iters (%s)\n",
                k + 1, r.init_orientation_deg, r.orientation_deg, r.center_fraction, r.depth_error,
                r.density, r.iterations, to_string(r.status));
    orient.push_back(r.orientation_deg);
    center.push_back(r.center_fraction);
    depth.push_back(r.depth_error);
    density.push_back(r.density);
  }
  const double mo = median(orient), mc = median(center), md = median(depth), mn = median(density);
  return {mo < 0.5 && mc < 0.01 && md < 0.03 && mn > 0.9 && e.seconds < 600.0,
          format("median orientation %.3f deg (<0.5), center %.4f D (<0.01), depth %.4f (<0.03), "
                 "density %.3f (>0.9), %.0f s (<600)",
                 mo, mc, md, mn, e.seconds)};
}

// ---------------------------------------------------------------------------
// 7. Basin of convergence

constexpr int kSweepSeeds = 5;

struct Sweep {
  SweepResult result;
  double seconds = 0.0;
};

const Sweep& sweep() {
  static const Sweep s = [] {
    const auto t0 = Clock::now();
    SyntheticSpec spec;
    spec.seed = 1;
    const SyntheticData d = generate_sequence(spec, desk_basis());
    const Objective obj(d.sequence, desk_basis());
    SolverState gt;
    gt.params = truth_parameters(d);
    SweepConfig cfg;
    cfg.seeds = kSweepSeeds;
    Sweep out;
    out.result = basin_sweep(obj, gt, cfg, SolverConfig{});
    out.seconds = seconds_since(t0);
    return out;
  }();
  return s;
}

Outcome basin() {
  const Sweep& s = sweep();
  bool dominated = true;
  std::string rows;
  for (const SweepRow& r : s.result.rows) {
    dominated = dominated && r.converged_fraction >= r.converged_fraction_zero_motion;
    rows += format(" %g:%.2f/%.2f", r.magnitude, r.converged_fraction, r.converged_fraction_zero_motion);
  }
  const double at_zero = s.result.rows.front().magnitude == 0.0 ? s.result.rows.front().converged_fraction : 0.0;
  return {dominated && at_zero == 1.0 && s.seconds < 1200.0,
          format("converged fraction (motion init/zero init) by degrees:%s; at 0 = %.2f (=1), %.0f s (<1200)",
                 rows.c_str(), at_zero, s.seconds)};
}

// ---------------------------------------------------------------------------
// 8. Monotone descent, read back from loss CSVs

std::vector<double> read_totals(const fs::path& path) {
  std::istringstream in(io::read_file(path));
  std::string line;
  std::getline(in, line);
  std::vector<double> totals;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    totals.push_back(std::stod(cols.at(4)));
  }
  return totals;
}

Outcome monotone() {
  std::vector<fs::path> files;
  const fs::path dir = work_dir() / "loss";
  const EndToEnd& e = end_to_end();
  for (size_t k = 0; k < e.runs.size(); ++k) {
    if (e.runs[k].status != SolverStatus::converged) continue;
    files.push_back(dir / format("end_to_end_%02zu.csv", k + 1));
    io::write_file_atomic(files.back(), e.runs[k].loss_csv);
  }
  const Sweep& s = sweep();
  for (size_t j = 0; j < s.result.runs.size(); ++j) {
    const SweepRun& r = s.result.runs[j];
    if (r.state.status != SolverStatus::converged) continue;
    files.push_back(dir / format("sweep_%03zu.csv", j));
    io::write_file_atomic(files.back(), loss_csv(r.state));
  }
  int violations = 0;
  for (const fs::path& f : files) {
    const std::vector<double> t = read_totals(f);
    for (size_t i = 1; i < t.size(); ++i) violations += t[i] > t[i - 1];
  }
  return {violations == 0 && !files.empty(),
          format("%d increases across %zu converged runs", violations, files.size())};
}

// ---------------------------------------------------------------------------
// 9. Determinism

Outcome determinism() {
  const EndToEnd& first = end_to_end();
  const EndToEnd second = end_to_end_runs();
  int pose_diffs = 0, csv_diffs = 0;
  for (size_t k = 0; k < first.runs.size(); ++k) {
    const auto& a = first.runs[k].poses;
    const auto& b = second.runs[k].poses;
    for (size_t l = 0; l < a.size(); ++l) {
      pose_diffs += std::memcmp(a[l].omega.data(), b[l].omega.data(), sizeof(double) * 3) != 0 ||
                    std::memcmp(a[l].t.data(), b[l].t.data(), sizeof(double) * 3) != 0;
    }
    csv_diffs += first.runs[k].loss_csv != second.runs[k].loss_csv;
  }
  return {pose_diffs == 0 && csv_diffs == 0,
          format("%d poses and %d loss CSVs differ between two runs of %d seeds", pose_diffs,
                 csv_diffs, kEndToEndSeeds)};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "lie math", lie_math},
      {2, "gradients vs finite differences", gradients},
      {3, "renderer vs exhaustive scan", renderer},
      {4, "loss oracles", loss_oracles},
      {5, "alignment exactness", alignment},
      {6, "end-to-end recovery", end_to_end_recovery},
      {7, "basin of convergence", basin},
      {8, "monotone descent", monotone},
      {9, "determinism", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("[%s] %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
