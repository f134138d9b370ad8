// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
//
// Single-channel PFM ("Pf"), little-endian (scale -1), rows stored bottom to
// top. Invalid pixels are written as 0 and every 0 reads back as invalid.
#pragma once

#include "spba/error.hpp"
#include "spba/image.hpp"
#include "spba/io/files.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <sstream>
#include <string>

namespace spba::io {

namespace detail {

inline std::uint32_t float_bits(float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  return u;
}

// `u` holds the four raster bytes read as a little-endian integer.
inline float float_from_bits(std::uint32_t u, bool little) {
  if (!little) {
    u = (u >> 24) | ((u >> 8) & 0xFF00u) | ((u << 8) & 0xFF0000u) | (u << 24);
  }
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}

}  // namespace detail

inline std::string encode_pfm(const InvDepthMap& map) {
  std::string out = "Pf\n" + std::to_string(map.width) + " " + std::to_string(map.height) +
                    "\n-1.0\n";
  const size_t header = out.size();
  out.resize(header + map.size() * 4);
  char* dst = out.data() + header;
  for (int y = map.height - 1; y >= 0; --y) {
    for (int x = 0; x < map.width; ++x) {
      const size_t i = static_cast<size_t>(y) * map.width + x;
      const float v = map.valid[i] ? static_cast<float>(map.value[i]) : 0.0f;
      const std::uint32_t u = detail::float_bits(v);
      for (int b = 0; b < 4; ++b) *dst++ = static_cast<char>((u >> (8 * b)) & 0xFF);
    }
  }
  return out;
}

inline InvDepthMap decode_pfm(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  if (!in || magic != "Pf" || w <= 0 || h <= 0 || scale == 0.0) {
    throw Error(ErrorCode::io_error, "malformed PFM header");
  }
  in.get();  // single whitespace before the raster
  const auto offset = static_cast<size_t>(in.tellg());
  const size_t need = static_cast<size_t>(w) * h * 4;
  if (bytes.size() < offset + need) throw Error(ErrorCode::io_error, "truncated PFM raster");
  const bool little = scale < 0.0;
  InvDepthMap map(w, h);
  const auto* src = reinterpret_cast<const unsigned char*>(bytes.data() + offset);
  for (int y = h - 1; y >= 0; --y) {
    for (int x = 0; x < w; ++x) {
      std::uint32_t u = 0;
      for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(*src++) << (8 * b);
      const float f = detail::float_from_bits(u, little);
      const size_t i = static_cast<size_t>(y) * w + x;
      if (std::isfinite(f) && f != 0.0f) {
        map.value[i] = f;
        map.valid[i] = 1;
      }
    }
  }
  return map;
}

inline void write_pfm(const fs::path& path, const InvDepthMap& map) {
  write_file_atomic(path, encode_pfm(map));
}

inline InvDepthMap read_pfm(const fs::path& path) { return decode_pfm(read_file(path)); }

}  // namespace spba::io
