// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spba {

enum class ErrorCode {
  invalid_argument,
  behind_camera,
  insufficient_data,
  degenerate_objective,
  no_overlap,
  inconsistent_depth,
  stationary_camera,
  invalid_spec,
  invalid_input,
  init_failure,
  io_error,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::behind_camera: return "behind_camera";
    case ErrorCode::insufficient_data: return "insufficient_data";
    case ErrorCode::degenerate_objective: return "degenerate_objective";
    case ErrorCode::no_overlap: return "no_overlap";
    case ErrorCode::inconsistent_depth: return "inconsistent_depth";
    case ErrorCode::stationary_camera: return "stationary_camera";
    case ErrorCode::invalid_spec: return "invalid_spec";
    case ErrorCode::invalid_input: return "invalid_input";
    case ErrorCode::init_failure: return "init_failure";
    case ErrorCode::io_error: return "io_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace spba
