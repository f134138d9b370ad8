// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
//
// spba command-line tool: synth, fit-basis, init, optimize, eval, sweep.

#include "spba/config.hpp"
#include "spba/io/basis.hpp"
#include "spba/io/documents.hpp"
#include "spba/io/pfm.hpp"
#include "spba/io/ply.hpp"
#include "spba/io/sequence.hpp"
#include "spba/metrics.hpp"
#include "spba/pipeline.hpp"
#include "spba/solver.hpp"
#include "spba/synth.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace spba;
using io::Json;
namespace fs = std::filesystem;

struct Common {
  std::string config_path;
  int threads = 0;
};

RunConfig load_config(const Common& c) {
  RunConfig cfg;
  if (!c.config_path.empty()) cfg = config_from_json(io::read_json(c.config_path));
  if (c.threads > 0) cfg.threads = c.threads;
  apply_seed_override(cfg);
  cfg.apply_upsample();
  cfg.validate();
  return cfg;
}

// Every run directory carries the effective configuration, its hash, the
// seeds in play and the flags marking substitutes for the published method.
Json meta(const std::string& command, const RunConfig& cfg, Json extra = Json::object()) {
  Json m{{"command", command},
         {"config_hash", hex64(config_hash(cfg))},
         {"seeds",
          {{"synth", cfg.synth.seed},
           {"style_init", cfg.init.style.seed},
           {"sweep", cfg.sweep.seed},
           {"basis", cfg.basis.seed}}},
         {"deviations",
          {{"linear_basis_substitute", true},
           {"style_init_substitute", true},
           {"motion_init_translation_correction", true},
           {"photometric_count_normalization", true},
           {"relative_decrease_stopping", true},
           {"visibility_frozen_within_line_search", true}}},
         {"config", config_to_json(cfg)}};
  for (auto& [k, v] : extra.items()) m[k] = v;
  return m;
}

ShapeBasis load_basis(const std::string& path, const fs::path& seq_dir, const RunConfig& cfg) {
  if (!path.empty()) return io::read_basis(path);
  if (fs::is_regular_file(seq_dir / "basis.bin")) return io::read_basis(seq_dir / "basis.bin");
  return build_default_basis(cfg.basis);
}

std::string loss_csv(const SolverState& st) {
  std::string out = loss_csv_header();
  for (size_t i = 0; i < st.loss_history.size(); ++i) {
    out += loss_csv_row(static_cast<int>(i), st.loss_history[i]);
  }
  return out;
}

std::vector<Twist> frame_poses(const Parameters& p) {
  std::vector<Twist> out;
  for (size_t l = 0; l < p.frames(); ++l) out.push_back(frame_pose(p, l));
  return out;
}

Json report_json(const EvalReport& r) {
  return Json{{"depth_error", r.depth.depth_error},
              {"density", r.depth.density},
              {"per_frame_depth_error", r.depth.per_frame_error},
              {"per_frame_density", r.depth.per_frame_density},
              {"cam_location_error", r.camera.location_error},
              {"cam_location_error_mean", r.camera.mean_location_error},
              {"cam_orientation_error_deg", r.camera.orientation_error_deg},
              {"cam_orientation_error_deg_mean", r.camera.mean_orientation_error_deg},
              {"cam_geodesic_error_deg", r.camera.geodesic_error_deg},
              {"cam_geodesic_error_deg_mean", r.camera.mean_geodesic_error_deg}};
}

// ---------------------------------------------------------------------------

int cmd_synth(const std::string& spec_path, const std::string& out_dir, const std::string& basis_path,
              const Common& common) {
  Common c = common;
  c.config_path = spec_path;
  const RunConfig cfg = load_config(c);
  const ShapeBasis basis = basis_path.empty() ? build_default_basis(cfg.basis) : io::read_basis(basis_path);
  const SyntheticData data = generate_sequence(cfg.synth, basis);
  const fs::path dir(out_dir);
  io::write_sequence(dir, data.sequence);
  io::write_ground_truth(dir, data.truth);
  io::write_basis(dir / "basis.bin", basis);
  io::write_ply(dir / "gt" / "cloud.ply", data.truth.cloud);
  Json truth{{"alpha_star", data.truth.alpha_star},
             {"ext_rotation", io::to_json(Twist(log_rotation(data.truth.ext_rotation), data.truth.ext_translation))}};
  io::write_json(dir / "meta.json", meta("synth", cfg, Json{{"truth", truth}}));
  return 0;
}

int cmd_fit_basis(const std::vector<std::string>& clouds, int modes, const std::string& out) {
  std::vector<PointCloud> ex;
  for (const auto& p : clouds) ex.push_back(io::read_ply(p));
  io::write_basis(out, fit_basis(ex, modes));
  return 0;
}

int cmd_init(const std::string& seq_dir, const std::string& basis_path, const std::string& out,
             const std::string& cache_dir, const Common& common) {
  const RunConfig cfg = load_config(common);
  const Sequence seq = io::read_sequence(seq_dir);
  const ShapeBasis basis = load_basis(basis_path, seq_dir, cfg);
  const TemplateGrid grid = cache_dir.empty()
                                ? build_template_grid(basis, seq.intrinsics, cfg.grid)
                                : io::cached_template_grid(cache_dir, basis, seq.intrinsics, cfg.grid);
  const InitResult init = initialize(seq, basis, grid, cfg.init);
  Json doc = io::to_json(init.state);
  doc["retrieval"] = Json{{"iou", init.retrieval.iou},
                          {"template", init.retrieval.index},
                          {"warning", init.retrieval.warning}};
  doc["alpha_from_depth"] = init.alpha_from_depth;
  io::write_json(out, doc);
  if (init.retrieval.warning) {
    std::cerr << Json{{"warning", "low_retrieval_iou"}, {"iou", init.retrieval.iou}}.dump() << "\n";
  }
  return 0;
}

int cmd_optimize(const std::string& seq_dir, const std::string& state_path, const std::string& out_dir,
                 const std::string& basis_path, const Common& common) {
  const RunConfig cfg = load_config(common);
  const Sequence seq = io::read_sequence(seq_dir);
  const ShapeBasis basis = load_basis(basis_path, seq_dir, cfg);
  const SolverState init = io::state_from_json(io::read_json(state_path));
  const Objective objective(seq, basis, cfg.objective);
  const fs::path dir(out_dir);
  const SolverState st = optimize(objective, init, cfg.solver, [&](const SolverState& s) {
    io::write_json(dir / "checkpoint.json", io::to_json(s));
  });
  io::write_json(dir / "state.json", io::to_json(st));
  const std::vector<Twist> poses = frame_poses(st.params);
  io::write_json(dir / "poses.json", io::poses_to_json(poses));
  io::write_ply(dir / "cloud.ply", PointCloud{objective.points(st.params.s), {}});
  const std::vector<RenderedView> views = objective.render(st.params);
  for (size_t l = 0; l < views.size(); ++l) {
    io::write_pfm(dir / "invdepth" / io::frame_name(l, ".pfm"), views[l].invdepth_map);
  }
  io::write_file_atomic(dir / "loss.csv", loss_csv(st));
  io::write_json(dir / "meta.json",
                 meta("optimize", cfg,
                      Json{{"status", to_string(st.status)}, {"iterations", st.iter},
                           {"evaluations", st.evaluations}}));
  return 0;
}

// A prediction directory holds poses.json and invdepth/; a sequence
// directory is read through its gt/ subdirectory.
fs::path prediction_root(const fs::path& dir) {
  if (!fs::is_regular_file(dir / "poses.json") && fs::is_directory(dir / "gt")) return dir / "gt";
  return dir;
}

int cmd_eval(const std::string& result_dir, const std::string& gt_dir, const std::string& out_dir,
             double curve_max) {
  const fs::path pred_root = prediction_root(result_dir);
  const fs::path gt_root = prediction_root(gt_dir);
  const std::vector<Twist> pred_poses = io::poses_from_json(io::read_json(pred_root / "poses.json"));
  const std::vector<Twist> gt_poses = io::poses_from_json(io::read_json(gt_root / "poses.json"));
  std::vector<InvDepthMap> pred, gt;
  for (size_t l = 0; l < gt_poses.size(); ++l) {
    gt.push_back(io::read_pfm(gt_root / "invdepth" / io::frame_name(l, ".pfm")));
    pred.push_back(io::read_pfm(pred_root / "invdepth" / io::frame_name(l, ".pfm")));
  }
  const EvalReport r = evaluate_prediction(pred_poses, pred, gt_poses, gt, curve_max);
  const fs::path dir(out_dir);
  io::write_json(dir / "report.json", report_json(r));
  std::ostringstream curve;
  curve << "threshold,histogram,cumulative\n";
  char buf[128];
  for (size_t b = 0; b < r.curve.bin_upper.size(); ++b) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", r.curve.bin_upper[b], r.curve.histogram[b],
                  r.curve.cumulative[b]);
    curve << buf;
  }
  io::write_file_atomic(dir / "depth_curve.csv", curve.str());
  std::ostringstream cams;
  cams << "frame,location_error,orientation_error_deg,geodesic_error_deg\n";
  for (size_t l = 0; l < gt_poses.size(); ++l) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", l, r.camera.location_error[l],
                  r.camera.orientation_error_deg[l], r.camera.geodesic_error_deg[l]);
    cams << buf;
  }
  io::write_file_atomic(dir / "camera_errors.csv", cams.str());
  std::cout << report_json(r).dump() << "\n";
  return 0;
}

int cmd_sweep(const std::string& seq_dir, const std::vector<double>& magnitudes, int seeds,
              const std::string& out, const std::string& basis_path, const Common& common) {
  RunConfig cfg = load_config(common);
  if (!magnitudes.empty()) cfg.sweep.magnitudes = magnitudes;
  if (seeds > 0) cfg.sweep.seeds = seeds;
  cfg.sweep.threads = cfg.threads;
  const Sequence seq = io::read_sequence(seq_dir);
  const ShapeBasis basis = load_basis(basis_path, seq_dir, cfg);
  const io::GroundTruthFiles truth = io::read_ground_truth(seq_dir);
  SolverState gt;
  gt.params.p0 = truth.poses.at(0);
  gt.params.deltas = relative_motions(truth.poses);
  gt.params.s = truth.style ? *truth.style : Eigen::VectorXd::Zero(basis.num_modes());
  gt.params.alpha = 1.0;
  if (seq.external) {
    const PointCloud cloud = generate(basis, StyleVector(gt.params.s));
    gt.params.alpha =
        solve_alpha_poses(gt.params.p0, gt.params.deltas, *seq.external, cloud.centroid()).value();
  }
  const Objective objective(seq, basis, cfg.objective);
  const SweepResult r = basin_sweep(objective, gt, cfg.sweep, cfg.solver);
  std::ostringstream csv;
  csv << "magnitude,converged_fraction,converged_fraction_zero_motion,mean_p0_orientation_error_deg,"
         "mean_p0_orientation_error_deg_zero_motion\n";
  char buf[256];
  for (const SweepRow& row : r.rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", row.magnitude,
                  row.converged_fraction, row.converged_fraction_zero_motion,
                  row.mean_p0_orientation_error_deg, row.mean_p0_orientation_error_deg_zero_motion);
    csv << buf;
  }
  io::write_file_atomic(out, csv.str());
  std::ostringstream runs;
  runs << "magnitude,seed_index,zero_motion,converged,orientation_error_deg,center_error,iterations\n";
  for (const SweepRun& run : r.runs) {
    std::snprintf(buf, sizeof(buf), "%.17g,%d,%d,%d,%.17g,%.17g,%d\n", run.magnitude, run.seed_index,
                  run.zero_motion ? 1 : 0, run.converged ? 1 : 0, run.orientation_error_deg,
                  run.center_error, run.state.iter);
    runs << buf;
  }
  fs::path runs_path(out);
  runs_path.replace_extension(".runs.csv");
  io::write_file_atomic(runs_path, runs.str());
  return 0;
}

int report_error(const std::string& code, const std::string& message) {
  std::cerr << Json{{"error", code}, {"message", message}}.dump() << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic photometric bundle adjustment"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config_path, "Flat JSON run configuration");
  app.add_option("--threads", common.threads, "Worker thread cap")->check(CLI::PositiveNumber);

  std::string a, b, out, basis, cache;
  std::vector<std::string> clouds;
  std::vector<double> magnitudes;
  int modes = 8, seeds = 0;
  double curve_max = 0.2;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic sequence");
  synth->add_option("spec", a, "Flat JSON spec (synth.* keys)")->required()->check(CLI::ExistingFile);
  synth->add_option("out_dir", b, "Output sequence directory")->required();
  synth->add_option("--basis", basis, "Shape basis (default: procedural category)");

  auto* fit = app.add_subcommand("fit-basis", "Fit a linear shape basis to corresponded clouds");
  fit->add_option("clouds", clouds, "ASCII PLY exemplars")->required()->check(CLI::ExistingFile);
  fit->add_option("--modes", modes, "Number of modes S")->check(CLI::NonNegativeNumber);
  fit->add_option("-o,--output", out, "Output basis file")->required();

  auto* init = app.add_subcommand("init", "Initialize pose, style, scale and motion");
  init->add_option("seq_dir", a)->required()->check(CLI::ExistingDirectory);
  init->add_option("--basis", basis, "Shape basis (default: <seq_dir>/basis.bin)");
  init->add_option("--grid-cache", cache, "Directory caching template grids");
  init->add_option("-o,--output", out, "Output state JSON")->required();

  auto* opt = app.add_subcommand("optimize", "Run the alternating optimization");
  opt->add_option("seq_dir", a)->required()->check(CLI::ExistingDirectory);
  opt->add_option("--state", b, "Initial state JSON")->required()->check(CLI::ExistingFile);
  opt->add_option("--basis", basis, "Shape basis (default: <seq_dir>/basis.bin)");
  opt->add_option("-o,--output", out, "Result directory")->required();

  auto* ev = app.add_subcommand("eval", "Evaluate a result against ground truth");
  ev->add_option("result_dir", a)->required()->check(CLI::ExistingDirectory);
  ev->add_option("gt_dir", b)->required()->check(CLI::ExistingDirectory);
  ev->add_option("-o,--output", out, "Report directory")->required();
  ev->add_option("--curve-max", curve_max, "Upper end of the threshold curve")->check(CLI::PositiveNumber);

  auto* sw = app.add_subcommand("sweep", "Perturbation sweep around the ground-truth target pose");
  sw->add_option("seq_dir", a)->required()->check(CLI::ExistingDirectory);
  sw->add_option("--magnitudes", magnitudes, "Perturbation magnitudes, degrees")->delimiter(',');
  sw->add_option("--seeds", seeds, "Perturbations per magnitude")->check(CLI::PositiveNumber);
  sw->add_option("--basis", basis, "Shape basis (default: <seq_dir>/basis.bin)");
  sw->add_option("-o,--output", out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("usage", e.what());
  }

  try {
    if (*synth) return cmd_synth(a, b, basis, common);
    if (*fit) return cmd_fit_basis(clouds, modes, out);
    if (*init) return cmd_init(a, basis, out, cache, common);
    if (*opt) return cmd_optimize(a, b, out, basis, common);
    if (*ev) return cmd_eval(a, b, out, curve_max);
    if (*sw) return cmd_sweep(a, magnitudes, seeds, out, basis, common);
  } catch (const spba::Error& e) {
    return report_error(std::string(spba::to_string(e.code())), e.what());
  } catch (const std::exception& e) {
    return report_error("internal", e.what());
  }
  return 1;
}
