// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
//
// Sequence directories:
//   frames/%04d.png  masks/%04d.png  intrinsics.json  meta.json
//   external/poses.json  external/invdepth/%04d.pfm
//   gt/poses.json  gt/style.json  gt/invdepth/%04d.pfm
// Only frames/ and intrinsics.json are required.
#pragma once

#include "spba/error.hpp"
#include "spba/io/files.hpp"
#include "spba/io/documents.hpp"
#include "spba/io/pfm.hpp"
#include "spba/io/png.hpp"
#include "spba/sequence.hpp"
#include "spba/synth.hpp"

#include <optional>
#include <string>
#include <vector>

namespace spba::io {

inline void write_sequence(const fs::path& dir, const Sequence& seq) {
  seq.validate();
  write_json(dir / "intrinsics.json", to_json(seq.intrinsics));
  for (size_t l = 0; l < seq.size(); ++l) {
    write_png(dir / "frames" / frame_name(l, ".png"), seq.frames[l].image);
    if (seq.frames[l].mask) write_png(dir / "masks" / frame_name(l, ".png"), *seq.frames[l].mask);
  }
  if (seq.external) {
    std::vector<std::string> files(seq.size());
    for (size_t l = 0; l < seq.size(); ++l) {
      if (const InvDepthMap* d = seq.external->invdepth(l)) {
        files[l] = "invdepth/" + frame_name(l, ".pfm");
        write_pfm(dir / "external" / files[l], *d);
      }
    }
    write_json(dir / "external" / "poses.json", external_poses_to_json(*seq.external, files));
  }
}

inline void write_ground_truth(const fs::path& dir, const GroundTruth& gt) {
  write_json(dir / "gt" / "poses.json", poses_to_json(gt.poses));
  write_json(dir / "gt" / "style.json", style_to_json(gt.style));
  for (size_t l = 0; l < gt.invdepth.size(); ++l) {
    write_pfm(dir / "gt" / "invdepth" / frame_name(l, ".pfm"), gt.invdepth[l]);
  }
}

inline Sequence read_sequence(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::io_error, "not a directory: " + dir.string());
  Sequence seq;
  seq.intrinsics = intrinsics_from_json(read_json(dir / "intrinsics.json"));
  for (size_t l = 0;; ++l) {
    const fs::path frame = dir / "frames" / frame_name(l, ".png");
    if (!fs::is_regular_file(frame)) break;
    Frame f{read_png_image(frame), std::nullopt};
    const fs::path mask = dir / "masks" / frame_name(l, ".png");
    if (fs::is_regular_file(mask)) f.mask = read_png_mask(mask);
    seq.frames.push_back(std::move(f));
  }
  const fs::path ext_path = dir / "external" / "poses.json";
  if (fs::is_regular_file(ext_path)) {
    const Json j = read_json(ext_path);
    if (!j.is_array()) throw Error(ErrorCode::invalid_input, "external poses must be a JSON array");
    ExternalPBAResult ext;
    bool any_depth = false;
    std::vector<std::optional<InvDepthMap>> maps;
    for (const Json& e : j) {
      ext.rotations.push_back(rotation_from_json(e));
      ext.translations.push_back(detail::vec3(e, "t"));
      if (e.contains("invdepth")) {
        maps.emplace_back(read_pfm(dir / "external" / e.at("invdepth").get<std::string>()));
        any_depth = true;
      } else {
        maps.emplace_back(std::nullopt);
      }
    }
    if (any_depth) ext.invdepth_maps = std::move(maps);
    seq.external = std::move(ext);
  }
  seq.validate();
  return seq;
}

struct GroundTruthFiles {
  std::vector<Twist> poses;
  std::optional<Eigen::VectorXd> style;
  std::vector<InvDepthMap> invdepth;
};

inline GroundTruthFiles read_ground_truth(const fs::path& dir) {
  GroundTruthFiles gt;
  gt.poses = poses_from_json(read_json(dir / "gt" / "poses.json"));
  if (fs::is_regular_file(dir / "gt" / "style.json")) {
    gt.style = style_from_json(read_json(dir / "gt" / "style.json"));
  }
  for (size_t l = 0; l < gt.poses.size(); ++l) {
    gt.invdepth.push_back(read_pfm(dir / "gt" / "invdepth" / frame_name(l, ".pfm")));
  }
  return gt;
}

}  // namespace spba::io
