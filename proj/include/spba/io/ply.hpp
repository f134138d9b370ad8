// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "spba/error.hpp"
#include "spba/io/files.hpp"
#include "spba/shapespace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace spba::io {

/// ASCII PLY, x y z as doubles and, when present, red green blue as uchar.
inline std::string encode_ply(const PointCloud& cloud) {
  const bool colors = cloud.has_colors();
  std::string out = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(cloud.size()) +
                    "\nproperty double x\nproperty double y\nproperty double z\n";
  if (colors) out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out += "end_header\n";
  char buf[160];
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const auto p = cloud.points.col(i);
    int n = std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g", p.x(), p.y(), p.z());
    if (colors) {
      const auto c = cloud.colors.col(i);
      auto byte = [](double v) { return static_cast<int>(std::lround(std::clamp(v, 0.0, 255.0))); };
      n += std::snprintf(buf + n, sizeof(buf) - n, " %d %d %d", byte(c[0]), byte(c[1]), byte(c[2]));
    }
    out.append(buf, n);
    out += '\n';
  }
  return out;
}

/// Reads vertex x, y, z and optional red, green, blue; other vertex
/// properties are skipped. Only ASCII files with a leading vertex element.
inline PointCloud decode_ply(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) {
    throw Error(ErrorCode::io_error, "not a PLY file");
  }
  long long count = -1;
  bool in_vertex = false;
  std::vector<std::string> props;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii") throw Error(ErrorCode::io_error, "only ASCII PLY is supported");
    } else if (word == "element") {
      std::string name;
      long long n = 0;
      ls >> name >> n;
      in_vertex = name == "vertex";
      if (in_vertex) {
        if (count >= 0) throw Error(ErrorCode::io_error, "PLY has two vertex elements");
        if (!props.empty() || n < 0) throw Error(ErrorCode::io_error, "vertex must be the first element");
        count = n;
      }
    } else if (word == "property") {
      if (!in_vertex) continue;
      std::string type, name;
      ls >> type >> name;
      if (type == "list") throw Error(ErrorCode::io_error, "list properties on vertices are unsupported");
      props.push_back(name);
    } else if (word == "end_header") {
      break;
    }
  }
  if (count < 0) throw Error(ErrorCode::io_error, "PLY has no vertex element");
  auto find = [&](const char* name) {
    const auto it = std::find(props.begin(), props.end(), name);
    return it == props.end() ? -1 : static_cast<int>(it - props.begin());
  };
  const int ix = find("x"), iy = find("y"), iz = find("z");
  const int ir = find("red"), ig = find("green"), ib = find("blue");
  if (ix < 0 || iy < 0 || iz < 0) throw Error(ErrorCode::io_error, "PLY lacks x/y/z");
  const bool colors = ir >= 0 && ig >= 0 && ib >= 0;
  PointCloud cloud;
  cloud.points.resize(3, count);
  if (colors) cloud.colors.resize(3, count);
  std::vector<double> row(props.size());
  for (long long i = 0; i < count; ++i) {
    for (double& v : row) {
      if (!(in >> v)) throw Error(ErrorCode::io_error, "truncated PLY vertex list");
    }
    cloud.points.col(i) = Vec3(row[ix], row[iy], row[iz]);
    if (colors) cloud.colors.col(i) = Vec3(row[ir], row[ig], row[ib]);
  }
  return cloud;
}

inline void write_ply(const fs::path& path, const PointCloud& cloud) {
  write_file_atomic(path, encode_ply(cloud));
}
inline PointCloud read_ply(const fs::path& path) { return decode_ply(read_file(path)); }

}  // namespace spba::io
