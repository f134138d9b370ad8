// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
//
// JSON documents: intrinsics, pose lists, style vectors, solver states.
// Doubles are written with round-trip precision, so values read back
// bit-identically.
#pragma once

#include "spba/error.hpp"
#include "spba/geometry.hpp"
#include "spba/io/files.hpp"
#include "spba/objective.hpp"
#include "spba/sequence.hpp"
#include "spba/solver.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace spba::io {

using Json = nlohmann::ordered_json;

inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::io_error, what + ": " + e.what());
  }
}

inline Json read_json(const fs::path& path) { return parse_json(read_file(path), path.string()); }

inline void write_json(const fs::path& path, const Json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

namespace detail {

template <typename T>
T get(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorCode::invalid_input, std::string("missing JSON field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::invalid_input, std::string("JSON field '") + key + "' has the wrong type");
  }
}

inline Vec3 vec3(const Json& j, const char* key) {
  const auto v = get<std::vector<double>>(j, key);
  if (v.size() != 3) throw Error(ErrorCode::invalid_input, std::string("'") + key + "' needs 3 values");
  return Vec3(v[0], v[1], v[2]);
}

inline Json array(const Eigen::Ref<const Eigen::VectorXd>& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace detail

inline Json to_json(const Intrinsics& k) {
  return Json{{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy},
              {"width", k.width}, {"height", k.height}};
}

inline Intrinsics intrinsics_from_json(const Json& j) {
  Intrinsics k{detail::get<double>(j, "fx"), detail::get<double>(j, "fy"),
               detail::get<double>(j, "cx"), detail::get<double>(j, "cy"),
               detail::get<int>(j, "width"), detail::get<int>(j, "height")};
  k.validate();
  return k;
}

/// {"omega": [3], "t": [3], "R": [9 row-major]}; R is informative on write.
inline Json to_json(const Twist& p) {
  const Mat3 r = exp_rotation(p.omega);
  Json rj = Json::array();
  for (int i = 0; i < 3; ++i) {
    for (int c = 0; c < 3; ++c) rj.push_back(r(i, c));
  }
  return Json{{"omega", detail::array(p.omega)}, {"t", detail::array(p.t)}, {"R", rj}};
}

inline Mat3 rotation_from_json(const Json& j) {
  const auto v = detail::get<std::vector<double>>(j, "R");
  if (v.size() != 9) throw Error(ErrorCode::invalid_input, "'R' needs 9 row-major values");
  Mat3 r;
  for (int i = 0; i < 3; ++i) {
    for (int c = 0; c < 3; ++c) r(i, c) = v[3 * i + c];
  }
  if (!r.allFinite() || !is_rotation(r, 1e-6)) {
    throw Error(ErrorCode::invalid_input, "'R' is not a rotation matrix");
  }
  return r;
}

/// Uses "omega" when present, otherwise log of "R".
inline Twist twist_from_json(const Json& j) {
  const Vec3 t = detail::vec3(j, "t");
  if (j.contains("omega")) return Twist(detail::vec3(j, "omega"), t);
  return Twist(log_rotation(rotation_from_json(j)), t);
}

inline Json poses_to_json(std::span<const Twist> poses) {
  Json a = Json::array();
  for (const Twist& p : poses) a.push_back(to_json(p));
  return a;
}

inline std::vector<Twist> poses_from_json(const Json& j) {
  const Json& list = j.is_object() && j.contains("frames") ? j.at("frames") : j;
  if (!list.is_array()) throw Error(ErrorCode::invalid_input, "pose list must be a JSON array");
  std::vector<Twist> out;
  for (const Json& e : list) out.push_back(twist_from_json(e));
  return out;
}

/// External poses as {"R", "t"} per frame, plus the depth file of each frame.
inline Json external_poses_to_json(const ExternalPBAResult& ext,
                                   const std::vector<std::string>& depth_files) {
  Json a = Json::array();
  for (size_t l = 0; l < ext.size(); ++l) {
    Json rj = Json::array();
    for (int i = 0; i < 3; ++i) {
      for (int c = 0; c < 3; ++c) rj.push_back(ext.rotations[l](i, c));
    }
    Json e{{"R", rj}, {"t", detail::array(ext.translations[l])}};
    if (l < depth_files.size() && !depth_files[l].empty()) e["invdepth"] = depth_files[l];
    a.push_back(std::move(e));
  }
  return a;
}

inline Json style_to_json(const Eigen::VectorXd& s) { return Json{{"style", detail::array(s)}}; }

inline Eigen::VectorXd style_from_json(const Json& j) {
  const auto v = detail::get<std::vector<double>>(j, "style");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Json to_json(const LossBreakdown& b) {
  return Json{{"l_ph", b.l_ph}, {"l_cd", b.l_cd}, {"l_invd", b.l_invd}, {"total", b.total},
              {"alpha", b.alpha}, {"ph_residuals", b.ph_residuals},
              {"cd_residuals", b.cd_residuals}, {"invd_residuals", b.invd_residuals},
              {"empty_silhouette_frames", b.empty_silhouette_frames},
              {"invd_no_overlap", b.invd_no_overlap}};
}

inline LossBreakdown loss_from_json(const Json& j) {
  LossBreakdown b;
  b.l_ph = detail::get<double>(j, "l_ph");
  b.l_cd = detail::get<double>(j, "l_cd");
  b.l_invd = detail::get<double>(j, "l_invd");
  b.total = detail::get<double>(j, "total");
  b.alpha = detail::get<double>(j, "alpha");
  b.ph_residuals = j.value("ph_residuals", size_t{0});
  b.cd_residuals = j.value("cd_residuals", size_t{0});
  b.invd_residuals = j.value("invd_residuals", size_t{0});
  b.empty_silhouette_frames = j.value("empty_silhouette_frames", size_t{0});
  b.invd_no_overlap = j.value("invd_no_overlap", false);
  return b;
}

inline Json to_json(const Parameters& p) {
  return Json{{"p0", to_json(p.p0)}, {"deltas", poses_to_json(p.deltas)},
              {"s", detail::array(p.s)}, {"alpha", p.alpha}};
}

inline Parameters parameters_from_json(const Json& j) {
  Parameters p;
  p.p0 = twist_from_json(detail::get<Json>(j, "p0"));
  p.deltas = poses_from_json(detail::get<Json>(j, "deltas"));
  const auto s = detail::get<std::vector<double>>(j, "s");
  p.s = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  p.alpha = detail::get<double>(j, "alpha");
  if (!(p.alpha > 0.0)) throw Error(ErrorCode::invalid_input, "state alpha must be positive");
  return p;
}

inline SolverStatus status_from_string(const std::string& s) {
  for (SolverStatus v : {SolverStatus::not_started, SolverStatus::converged,
                         SolverStatus::max_iterations, SolverStatus::non_finite}) {
    if (s == to_string(v)) return v;
  }
  throw Error(ErrorCode::invalid_input, "unknown solver status '" + s + "'");
}

/// Solver state, also used as the optimization checkpoint.
inline Json to_json(const SolverState& st) {
  Json hist = Json::array();
  for (const LossBreakdown& b : st.loss_history) hist.push_back(to_json(b));
  return Json{{"params", to_json(st.params)}, {"iter", st.iter},
              {"status", to_string(st.status)}, {"evaluations", st.evaluations},
              {"loss_history", hist}};
}

inline SolverState state_from_json(const Json& j) {
  SolverState st;
  st.params = parameters_from_json(detail::get<Json>(j, "params"));
  st.iter = j.value("iter", 0);
  st.status = status_from_string(j.value("status", std::string("not_started")));
  st.evaluations = j.value("evaluations", 0);
  if (j.contains("loss_history")) {
    for (const Json& e : j.at("loss_history")) st.loss_history.push_back(loss_from_json(e));
  }
  return st;
}

}  // namespace spba::io
