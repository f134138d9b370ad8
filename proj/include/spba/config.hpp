// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration serialized as one flat JSON object with dotted keys,
// e.g. {"objective.lambda1": 0.1, "solver.max_outer_iters": 50}. Absent keys
// keep their module defaults; unknown keys are rejected.
#pragma once

#include "spba/error.hpp"
#include "spba/initpose.hpp"
#include "spba/io/basis.hpp"
#include "spba/io/documents.hpp"
#include "spba/objective.hpp"
#include "spba/pipeline.hpp"
#include "spba/solver.hpp"
#include "spba/synth.hpp"

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace spba {

/// Procedural category used when no basis file is given.
struct BasisSpec {
  int exemplars = 40;
  std::uint64_t seed = 12345;
  int modes = 8;
  int points = 2000;
};

inline ShapeBasis build_default_basis(const BasisSpec& b) {
  CategoryOptions opt;
  opt.num_points = b.points;
  const auto ex = category_exemplars(b.exemplars, b.seed, opt);
  return fit_basis(ex, b.modes);
}

struct RunConfig {
  int upsample = kDefaultUpsample;  // renderer U everywhere except synthetic ground truth
  ObjectiveConfig objective;
  SolverConfig solver;
  TemplateGridConfig grid;
  InitConfig init;
  SyntheticSpec synth;
  std::optional<int> synth_upsample_gt;  // 2 U when absent
  BasisSpec basis;
  SweepConfig sweep;
  int threads = 1;

  /// Pushes the shared renderer factor into every module config.
  void apply_upsample() {
    objective.upsample = upsample;
    grid.upsample = upsample;
    init.upsample = upsample;
    init.style.upsample = upsample;
    synth.upsample_gt = synth_upsample_gt ? *synth_upsample_gt : 2 * upsample;
  }

  void validate() const {
    if (upsample < 1 || threads < 1) throw Error(ErrorCode::invalid_argument, "invalid run configuration");
    objective.validate();
    solver.validate();
    grid.validate();
    synth.validate();
    if (basis.exemplars < basis.modes + 1 || basis.modes < 0 || basis.points < 1) {
      throw Error(ErrorCode::invalid_argument, "invalid basis configuration");
    }
    if (init.style.samples < 1 || sweep.seeds < 0) {
      throw Error(ErrorCode::invalid_argument, "invalid init or sweep configuration");
    }
  }
};

namespace detail {

using io::Json;

struct ConfigField {
  const char* key;
  std::function<Json(const RunConfig&)> get;
  std::function<void(RunConfig&, const Json&)> set;
};

template <typename T>
T as(const Json& j, const char* key) {
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!j.is_number()) throw Error(ErrorCode::invalid_input, "");
    } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!j.is_number_integer()) throw Error(ErrorCode::invalid_input, "");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) throw Error(ErrorCode::invalid_input, "");
    }
    return j.get<T>();
  } catch (const std::exception&) {
    throw Error(ErrorCode::invalid_input, std::string("config key '") + key + "' has the wrong type");
  }
}

#define SPBA_FIELD(KEY, MEMBER, TYPE)                                              \
  ConfigField {                                                                    \
    KEY, [](const RunConfig& c) { return Json(c.MEMBER); },                        \
        [](RunConfig& c, const Json& j) { c.MEMBER = as<TYPE>(j, KEY); }           \
  }

#define SPBA_OPT_FIELD(KEY, MEMBER, TYPE)                                          \
  ConfigField {                                                                    \
    KEY, [](const RunConfig& c) { return c.MEMBER ? Json(*c.MEMBER) : Json(nullptr); }, \
        [](RunConfig& c, const Json& j) {                                          \
          if (j.is_null()) c.MEMBER.reset();                                       \
          else c.MEMBER = as<TYPE>(j, KEY);                                        \
        }                                                                          \
  }

inline const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = {
      SPBA_FIELD("renderer.upsample", upsample, int),
      SPBA_FIELD("threads", threads, int),
      SPBA_FIELD("objective.lambda1", objective.lambda1, double),
      SPBA_FIELD("objective.delta1", objective.delta1, double),
      SPBA_FIELD("objective.lambda2", objective.lambda2, double),
      SPBA_FIELD("objective.delta2", objective.delta2, double),
      SPBA_FIELD("objective.empty_silhouette_penalty", objective.empty_silhouette_penalty, double),
      SPBA_FIELD("objective.mask_pixel_cap", objective.mask_pixel_cap, int),
      SPBA_FIELD("solver.max_outer_iters", solver.max_outer_iters, int),
      SPBA_FIELD("solver.inner_lbfgs_steps", solver.inner_lbfgs_steps, int),
      SPBA_FIELD("solver.lbfgs_memory", solver.lbfgs_memory, int),
      SPBA_FIELD("solver.rel_tolerance", solver.rel_tolerance, double),
      SPBA_FIELD("solver.patience", solver.patience, int),
      SPBA_FIELD("solver.c1", solver.c1, double),
      SPBA_FIELD("solver.c2", solver.c2, double),
      SPBA_FIELD("solver.max_line_search_evals", solver.max_line_search_evals, int),
      SPBA_FIELD("solver.first_step", solver.first_step, double),
      SPBA_FIELD("solver.max_step", solver.max_step, double),
      SPBA_FIELD("solver.style_max", solver.style_max, double),
      SPBA_FIELD("solver.checkpoint_every", solver.checkpoint_every, int),
      SPBA_FIELD("grid.azimuth_samples", grid.azimuth_samples, int),
      SPBA_FIELD("grid.elevation_samples", grid.elevation_samples, int),
      SPBA_FIELD("grid.elevation_min", grid.elevation_min, double),
      SPBA_FIELD("grid.elevation_max", grid.elevation_max, double),
      SPBA_FIELD("grid.distance_samples", grid.distance_samples, int),
      SPBA_FIELD("grid.distance_min", grid.distance_min, double),
      SPBA_FIELD("grid.distance_max", grid.distance_max, double),
      ConfigField{"init.style_mode",
                  [](const RunConfig& c) {
                    return Json(c.init.style.mode == StyleInitMode::mean ? "mean" : "retrieval");
                  },
                  [](RunConfig& c, const Json& j) {
                    const auto s = as<std::string>(j, "init.style_mode");
                    if (s == "mean") c.init.style.mode = StyleInitMode::mean;
                    else if (s == "retrieval") c.init.style.mode = StyleInitMode::retrieval;
                    else throw Error(ErrorCode::invalid_input, "init.style_mode must be mean or retrieval");
                  }},
      SPBA_FIELD("init.style_samples", init.style.samples, int),
      SPBA_FIELD("init.style_seed", init.style.seed, std::uint64_t),
      SPBA_FIELD("init.motion_from_external", init.motion_from_external, bool),
      SPBA_FIELD("synth.seed", synth.seed, std::uint64_t),
      SPBA_FIELD("synth.style_sigma", synth.style_sigma, double),
      SPBA_FIELD("synth.frames", synth.frames, int),
      SPBA_FIELD("synth.rotation_deg", synth.rotation_deg, double),
      SPBA_FIELD("synth.translation", synth.translation, double),
      SPBA_FIELD("synth.width", synth.width, int),
      SPBA_FIELD("synth.height", synth.height, int),
      SPBA_FIELD("synth.focal", synth.focal, double),
      SPBA_OPT_FIELD("synth.azimuth_deg", synth.azimuth_deg, double),
      SPBA_OPT_FIELD("synth.elevation_deg", synth.elevation_deg, double),
      SPBA_OPT_FIELD("synth.distance", synth.distance, double),
      SPBA_FIELD("synth.texture_frequency", synth.texture_frequency, double),
      SPBA_FIELD("synth.noise_sigma", synth.noise_sigma, double),
      SPBA_FIELD("synth.background_frequency", synth.background_frequency, double),
      SPBA_OPT_FIELD("synth.upsample_gt", synth_upsample_gt, int),
      SPBA_FIELD("synth.alpha_star", synth.alpha_star, double),
      SPBA_FIELD("synth.ext_rotation_noise_deg", synth.ext_rotation_noise_deg, double),
      SPBA_FIELD("synth.ext_translation_noise", synth.ext_translation_noise, double),
      SPBA_FIELD("synth.ext_hole_fraction", synth.ext_hole_fraction, double),
      SPBA_FIELD("synth.ext_depth_noise", synth.ext_depth_noise, double),
      ConfigField{"synth.background",
                  [](const RunConfig& c) {
                    return Json::array({c.synth.background[0], c.synth.background[1], c.synth.background[2]});
                  },
                  [](RunConfig& c, const Json& j) {
                    const auto v = as<std::vector<double>>(j, "synth.background");
                    if (v.size() != 3) throw Error(ErrorCode::invalid_input, "synth.background needs 3 values");
                    c.synth.background = Vec3(v[0], v[1], v[2]);
                  }},
      ConfigField{"synth.style",
                  [](const RunConfig& c) {
                    if (!c.synth.style) return Json(nullptr);
                    Json a = Json::array();
                    for (Eigen::Index i = 0; i < c.synth.style->size(); ++i) a.push_back((*c.synth.style)[i]);
                    return a;
                  },
                  [](RunConfig& c, const Json& j) {
                    if (j.is_null()) {
                      c.synth.style.reset();
                      return;
                    }
                    const auto v = as<std::vector<double>>(j, "synth.style");
                    c.synth.style = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
                  }},
      SPBA_FIELD("basis.exemplars", basis.exemplars, int),
      SPBA_FIELD("basis.seed", basis.seed, std::uint64_t),
      SPBA_FIELD("basis.modes", basis.modes, int),
      SPBA_FIELD("basis.points", basis.points, int),
      SPBA_FIELD("sweep.magnitudes", sweep.magnitudes, std::vector<double>),
      SPBA_FIELD("sweep.seeds", sweep.seeds, int),
      SPBA_FIELD("sweep.seed", sweep.seed, std::uint64_t),
      SPBA_FIELD("sweep.translation_per_degree", sweep.translation_per_degree, double),
      SPBA_FIELD("sweep.converged_orientation_deg", sweep.converged_orientation_deg, double),
      SPBA_FIELD("sweep.converged_center_fraction", sweep.converged_center_fraction, double),
  };
  return fields;
}

#undef SPBA_FIELD
#undef SPBA_OPT_FIELD

}  // namespace detail

/// Every key with its effective value, in a fixed order.
inline io::Json config_to_json(const RunConfig& c) {
  io::Json j = io::Json::object();
  for (const auto& f : detail::config_fields()) j[f.key] = f.get(c);
  return j;
}

/// Applies the keys present in `j` on top of `base`.
inline RunConfig config_from_json(const io::Json& j, RunConfig base = {}) {
  if (!j.is_object()) throw Error(ErrorCode::invalid_input, "config must be a JSON object");
  const auto& fields = detail::config_fields();
  for (const auto& [key, value] : j.items()) {
    const auto it = std::find_if(fields.begin(), fields.end(),
                                 [&](const detail::ConfigField& f) { return key == f.key; });
    if (it == fields.end()) throw Error(ErrorCode::invalid_input, "unknown config key '" + key + "'");
    it->set(base, value);
  }
  base.apply_upsample();
  base.validate();
  return base;
}

/// SPBA_SEED, when set, replaces every seed in the configuration.
inline bool apply_seed_override(RunConfig& c, const char* env = std::getenv("SPBA_SEED")) {
  if (!env || !*env) return false;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (!end || *end != '\0') throw Error(ErrorCode::invalid_input, "SPBA_SEED must be an unsigned integer");
  c.synth.seed = v;
  c.init.style.seed = v;
  c.sweep.seed = v;
  return true;
}

inline std::uint64_t config_hash(const RunConfig& c) { return io::fnv1a(config_to_json(c).dump()); }

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace spba
