// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "spba/error.hpp"
#include "spba/geometry.hpp"
#include "spba/image.hpp"

#include <optional>
#include <vector>

namespace spba {

/// Poses (and optionally semi-dense inverse depth) from an external
/// photometric bundle adjustment run, in that system's arbitrary frame and scale.
struct ExternalPBAResult {
  std::vector<RotationMatrix> rotations;
  std::vector<Vec3> translations;
  std::vector<std::optional<InvDepthMap>> invdepth_maps;  // empty or one per frame

  size_t size() const { return rotations.size(); }

  void validate(size_t frames) const {
    if (rotations.size() != frames || translations.size() != frames) {
      throw Error(ErrorCode::invalid_argument, "external result pose count mismatch");
    }
    if (!invdepth_maps.empty() && invdepth_maps.size() != frames) {
      throw Error(ErrorCode::invalid_argument, "external result depth map count mismatch");
    }
    for (const auto& r : rotations) {
      if (!is_rotation(r, 1e-6)) {
        throw Error(ErrorCode::invalid_argument, "external result holds a non-rotation");
      }
    }
  }

  const InvDepthMap* invdepth(size_t l) const {
    if (l >= invdepth_maps.size() || !invdepth_maps[l]) return nullptr;
    return &*invdepth_maps[l];
  }
};

struct Frame {
  Image image;
  std::optional<Mask> mask;
};

/// Frame 0 is the target; frames 1..L-1 are sources.
struct Sequence {
  Intrinsics intrinsics;
  std::vector<Frame> frames;
  std::optional<ExternalPBAResult> external;

  size_t size() const { return frames.size(); }

  void validate() const {
    intrinsics.validate();
    if (frames.size() < 2) {
      throw Error(ErrorCode::invalid_argument, "sequence needs at least two frames");
    }
    for (const auto& f : frames) {
      if (f.image.width() != intrinsics.width || f.image.height() != intrinsics.height) {
        throw Error(ErrorCode::invalid_argument, "frame resolution differs from intrinsics");
      }
      if (f.mask && (f.mask->width != intrinsics.width || f.mask->height != intrinsics.height)) {
        throw Error(ErrorCode::invalid_argument, "mask resolution differs from intrinsics");
      }
    }
    if (external) {
      external->validate(frames.size());
      for (const auto& d : external->invdepth_maps) {
        if (d && (d->width != intrinsics.width || d->height != intrinsics.height)) {
          throw Error(ErrorCode::invalid_argument, "external depth resolution mismatch");
        }
      }
    }
  }
};

}  // namespace spba
