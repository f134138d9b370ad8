// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "spba/error.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include <unistd.h>

namespace spba::io {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::io_error, "read failed: " + path.string());
  return ss.str();
}

/// Writes to a sibling temporary file, then renames it over `path`.
inline void write_file_atomic(const fs::path& path, std::string_view bytes) {
  static std::atomic<std::uint64_t> counter{0};
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorCode::io_error, "cannot create " + path.parent_path().string());
  }
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw Error(ErrorCode::io_error, "write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw Error(ErrorCode::io_error, "cannot rename onto " + path.string());
  }
}

inline void require_file(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::io_error, "missing file " + path.string());
}

/// "0007" style frame file name.
inline std::string frame_name(size_t index, std::string_view ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04zu", index);
  return std::string(buf) + std::string(ext);
}

}  // namespace spba::io
